#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rpf/types.hpp"

namespace rpf::kalman {

// Per-step bandwidth factor alpha_n used by the analytic filter recursions.
// Step indices start at 1; alpha_0 = 0 by convention.
struct AlphaSequence {
    enum class Kind { kZero, kConstant, kPeriodic, kHarmonic, kExponentialDecay };

    Kind kind = Kind::kZero;
    double alpha_h = 0.0;
    int period = 1;

    static AlphaSequence Zero();
    static AlphaSequence Constant(double alpha_h);
    static AlphaSequence Periodic(double alpha_h, int period);  // alpha_h at multiples of period
    static AlphaSequence Harmonic(double alpha_h);              // alpha_h / (1 + n alpha_h)
    static AlphaSequence ExponentialDecay(double alpha_h);      // alpha_h e^{-n alpha_h}

    double at(int n) const;
};

// --- Exact linear-Gaussian recursion -------------------------------------

// mean' = A mean, cov' = A cov A^T + Q.
GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& a, const Matrix& q);

// Information form: cov^-1 = cov_pred^-1 + B^T R^-1 B,
//                   cov^-1 mean = cov_pred^-1 mean_pred + B^T R^-1 y.
GaussianBelief kalman_update(const GaussianBelief& pred, const Vector& y, const Matrix& b,
                             const Matrix& r);

// Gain form: K = cov_pred B^T (B cov_pred B^T + R)^-1. Kept as an independent
// algebraic route for cross-checking the information form.
GaussianBelief kalman_update_gain_form(const GaussianBelief& pred, const Vector& y,
                                       const Matrix& b, const Matrix& r);

// Posterior for the constant-state model (A = B = I, Q = 0) after n
// observations with running mean y_bar:
//   cov_n = R (R + n cov_0)^-1 cov_0,
//   mean_n = W mean_0 + (I - W) y_bar,  W = cov_n cov_0^-1.
GaussianBelief stationary_closed_form(int n, const GaussianBelief& prior, const Matrix& r,
                                      const Vector& y_bar);

// log p(y_1..y_n) under the linear-Gaussian model, by the predictive
// decomposition of the evidence.
double log_evidence(const GaussianBelief& prior, const Matrix& a, const Matrix& b,
                    const Matrix& q, const Matrix& r, const std::vector<Vector>& ys);

// --- Kernel-inflated recursion and its closed form ------------------------

// Constant-state update whose posterior covariance is inflated by
// (1 + alpha): the large-N limit of resampling from a Gaussian-kernel
// density with bandwidth h^2 = alpha * cov. alpha = 0 is the plain update.
GaussianBelief perturbed_recursion_step(const GaussianBelief& belief, const Vector& y,
                                        const Matrix& r, double alpha);

// Closed-form solution after n steps of the inflated recursion:
//   cov_n  = P_n (cov_0^-1 + S_n R^-1)^-1
//   mean_n = (W / P_n) mean_0 + (I - W / P_n) * sum_j P_{j-1} y_j / S_n
// with P_n = prod_{j<=n} (1 + alpha_j) and S_n = sum_{j<=n} P_{j-1}.
// Accumulated in log space (P_n overflows around n * alpha ~ 700 otherwise).
GaussianBelief lemma_closed_form(int n, const GaussianBelief& prior, const Matrix& r,
                                 const std::vector<Vector>& ys, const AlphaSequence& seq);

// Scalar covariance of the inflated recursion for every step 1..n_max.
std::vector<double> covariance_sweep(int n_max, double prior_var, double r,
                                     const AlphaSequence& seq);

// --- Fixed points and rates -----------------------------------------------

struct FixedPoint {
    Matrix cov;           // limit of the posterior covariance
    Matrix residual_cov;  // limit covariance of the posterior mean around truth
    double rmse_bound;    // sqrt(trace(cov + residual_cov))
};

// Constant alpha_h at every step: cov -> alpha_h R,
// residual -> alpha_h / (2 + alpha_h) R.
FixedPoint rpf_fixed_point(double alpha_h, const Matrix& r);

// alpha_h applied every p-th step; the covariance limit along the residue
// class q is alpha_h R / (p + alpha_h q), so the asymptotic covariance
// oscillates between alpha_h R / (p + (p-1) alpha_h) and alpha_h R / p.
FixedPoint periodic_fixed_point(double alpha_h, int p, int q, const Matrix& r);

struct RateReport {
    double sup_scaled;    // sup_n n * cov_n / r
    double final_scaled;  // n_max * cov_{n_max} / r
};

// Scaled-covariance growth diagnostic for a 1-d constant-state run.
RateReport optimal_rate_check(const AlphaSequence& seq, int n_max, double prior_var,
                              double r);

// --- Weight-degeneracy asymptotics ----------------------------------------

// Infinite-particle limit of ESS/N after n observations of a 1-d constant
// state, given the running observation mean:
//   gamma = r / (n sigma0);
//   sqrt(gamma (2 + gamma)) / (1 + gamma)
//     * exp(-(mu0 - y_bar)^2 / (sigma0 (1 + gamma) (2 + gamma))).
double ess_asymptotic(int n, double mu0, double sigma0, double r, double y_bar);

// Threshold ratio beta such that, after resampling at step n, the ESS next
// crosses ess_crit when m/n > beta; spacings then grow like (1 + beta)^k.
// Defined for ess_crit strictly inside (0,1).
double beta_crit(double ess_crit);

// --- Self check -------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass;
    std::string detail;
};

// Runs the module's internal consistency properties (dual-route updates,
// closed form vs recursion, fixed-point attraction, rate asymptotes, ...).
std::vector<CheckResult> self_check();

}  // namespace rpf::kalman
