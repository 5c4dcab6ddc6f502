#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::models {

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

// x' = a * x * (1 - x). Requires a in [0,4] and x in [0,1], which makes the
// unit interval invariant.
double logistic_step(double a, double x);

// Log density of y = x * eta with log(eta) ~ N(m, s^2), s^2 = log(1 + r) and
// m = -s^2/2. This parametrization gives E[eta] = 1 and Var[eta] = r exactly,
// so the noise is multiplicative and centered on the signal.
// Returns -inf when x == 0 (or y <= 0). Throws ConfigError for r <= 0.
double lognormal_log_likelihood(double y, double x, double r);

// Daily biomass production rue * radiation * (1 - exp(-leaf/rho)).
double beer_lambert_production(double leaf, double radiation, double rue, double rho);

// Fraction of production allocated to leaves,
// (gamma/2) * (1 - erf(log(tau/mu_a) / (sqrt(2) * sigma_a))), in [0, gamma],
// strictly decreasing in tau; the tau -> 0 limit is gamma.
double allocation_fraction(double tau, double gamma, double mu_a, double sigma_a);

struct LnasState {
    double leaf = 0.0;
    double root = 0.0;
    double tau = 0.0;  // cumulative positive daily temperature
};

struct LnasParams {
    double rue = 3.56;    // radiation use efficiency, g/MJ
    double gamma = 0.625; // early leaf allocation ceiling, in [0,1]
    double mu_a = 550.0;  // thermal-time midpoint of the allocation switch
};

struct LnasConstants {
    double rho = 100.0;   // leaf mass per fully intercepting unit area, g/m^2
    double sigma_a = 0.3; // log-width of the allocation switch
};

// One day of growth: thermal time first (tau' = tau + max(0, temp)), then
// production from the previous leaf mass and allocation at the updated tau.
LnasState lnas_step(const LnasState& state, double temp_c, double rad_mj,
                    const LnasParams& params, const LnasConstants& constants);

// ---------------------------------------------------------------------------
// Weather input
// ---------------------------------------------------------------------------

struct WeatherDay {
    double temp_c = 0.0;
    double rad_mj = 0.0;
};

// Parses `day,temp_c,rad_mj` with day strictly increasing from 1.
// Throws ConfigError with the offending line number on malformed input.
std::vector<WeatherDay> load_weather_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Hidden Markov model contract
// ---------------------------------------------------------------------------

class HmmModel {
public:
    virtual ~HmmModel() = default;

    virtual int state_dim() const = 0;
    virtual int obs_dim() const = 0;

    virtual Vector prior_sample(RandomStream& rng) const = 0;

    // Deterministic models must not consume draws from rng.
    virtual Vector transition_sample(const Vector& x, int step, RandomStream& rng) const = 0;

    // Finite or -inf.
    virtual double log_likelihood(const Vector& y, const Vector& x, int step) const = 0;

    // Noise-free observation of x (the oracle-limit data).
    virtual Vector observe_signal(const Vector& x, int step) const = 0;

    virtual Vector observe_sample(const Vector& x, int step, RandomStream& rng) const = 0;

    // Repairs hard support constraints after kernel jitter (reflection at
    // parameter boundaries). Default: no constraints.
    virtual void apply_constraints(Vector& x) const { (void)x; }
};

// ---------------------------------------------------------------------------
// Concrete models
// ---------------------------------------------------------------------------

// Constant hidden state observed through additive Gaussian noise:
// x_n = x_{n-1}, y_n = x_n + eta, eta ~ N(0, R). Optionally the observation
// noise switches to quench_r from quench_step onwards.
class StationaryLinearModel : public HmmModel {
public:
    StationaryLinearModel(GaussianBelief prior, Matrix obs_noise);

    void set_quench(int step, Matrix r_after);

    int state_dim() const override { return prior_.dim(); }
    int obs_dim() const override { return prior_.dim(); }
    Vector prior_sample(RandomStream& rng) const override;
    Vector transition_sample(const Vector& x, int step, RandomStream& rng) const override;
    double log_likelihood(const Vector& y, const Vector& x, int step) const override;
    Vector observe_signal(const Vector& x, int step) const override;
    Vector observe_sample(const Vector& x, int step, RandomStream& rng) const override;

    const GaussianBelief& prior() const { return prior_; }
    const Matrix& obs_noise(int step) const;

private:
    GaussianBelief prior_;
    Matrix obs_noise_;
    Matrix obs_noise_sqrt_;
    int quench_step_ = 0;  // 0: no quench
    Matrix quench_r_;
    Matrix quench_r_sqrt_;
};

// x_n = A x_{n-1} + eps, eps ~ N(0, Q); y_n = B x_n + eta, eta ~ N(0, R).
// With A = B = I and Q = 0 this reproduces StationaryLinearModel draw for
// draw under the same seed.
class GeneralLinearModel : public HmmModel {
public:
    GeneralLinearModel(Matrix a, Matrix b, Matrix q, Matrix r, GaussianBelief prior);

    int state_dim() const override { return static_cast<int>(a_.rows()); }
    int obs_dim() const override { return static_cast<int>(b_.rows()); }
    Vector prior_sample(RandomStream& rng) const override;
    Vector transition_sample(const Vector& x, int step, RandomStream& rng) const override;
    double log_likelihood(const Vector& y, const Vector& x, int step) const override;
    Vector observe_signal(const Vector& x, int step) const override;
    Vector observe_sample(const Vector& x, int step, RandomStream& rng) const override;

    const GaussianBelief& prior() const { return prior_; }
    const Matrix& transition_matrix() const { return a_; }
    const Matrix& observation_matrix() const { return b_; }
    const Matrix& state_noise() const { return q_; }
    const Matrix& obs_noise() const { return r_; }

private:
    Matrix a_, b_, q_, r_;
    Matrix q_sqrt_, r_sqrt_;
    bool noiseless_state_;
    GaussianBelief prior_;
};

// Augmented state (a, x): unknown growth parameter and known-dynamics
// population. The prior on a is Gaussian rejection-sampled into [0,4];
// x starts at a fixed known value. Observations are multiplicative
// lognormal on x.
class LogisticMapModel : public HmmModel {
public:
    LogisticMapModel(double prior_mean, double prior_sd, double x0, double obs_noise);

    int state_dim() const override { return 2; }
    int obs_dim() const override { return 1; }
    Vector prior_sample(RandomStream& rng) const override;
    Vector transition_sample(const Vector& x, int step, RandomStream& rng) const override;
    double log_likelihood(const Vector& y, const Vector& x, int step) const override;
    Vector observe_signal(const Vector& x, int step) const override;
    Vector observe_sample(const Vector& x, int step, RandomStream& rng) const override;
    void apply_constraints(Vector& x) const override;

    double x0() const { return x0_; }
    double obs_noise() const { return obs_noise_; }

private:
    double prior_mean_, prior_sd_, x0_, obs_noise_;
};

// Sugarbeet growth with unknown (rue, gamma, mu_a). State layout:
// [rue, gamma, mu_a, leaf, root, tau]. Transitions are deterministic given
// the daily weather; both masses are observed through independent
// multiplicative lognormal noise.
class LnasModel : public HmmModel {
public:
    LnasModel(GaussianBelief param_prior, double leaf0, LnasConstants constants,
              std::vector<WeatherDay> weather, double obs_noise);

    int state_dim() const override { return 6; }
    int obs_dim() const override { return 2; }
    Vector prior_sample(RandomStream& rng) const override;
    Vector transition_sample(const Vector& x, int step, RandomStream& rng) const override;
    double log_likelihood(const Vector& y, const Vector& x, int step) const override;
    Vector observe_signal(const Vector& x, int step) const override;
    Vector observe_sample(const Vector& x, int step, RandomStream& rng) const override;
    void apply_constraints(Vector& x) const override;

    Vector initial_state(const LnasParams& truth) const;
    int horizon() const { return static_cast<int>(weather_.size()); }
    const LnasConstants& constants() const { return constants_; }

    static constexpr int kRue = 0;
    static constexpr int kGamma = 1;
    static constexpr int kMuA = 2;
    static constexpr int kLeaf = 3;
    static constexpr int kRoot = 4;
    static constexpr int kTau = 5;

private:
    const WeatherDay& day(int step) const;

    GaussianBelief param_prior_;
    double leaf0_;
    LnasConstants constants_;
    std::vector<WeatherDay> weather_;
    double obs_noise_;
};

// ---------------------------------------------------------------------------
// Data simulation
// ---------------------------------------------------------------------------

struct SimulatedData {
    std::vector<Vector> states;        // x_1..x_n
    std::vector<Vector> observations;  // y_1..y_n
};

// Propagates the given initial truth through the model and draws one
// observation per step. With oracle = true the observations are the
// noise-free signal instead.
SimulatedData simulate_observations(const HmmModel& model, const Vector& true_initial,
                                    int horizon, uint64_t seed, bool oracle);

}  // namespace rpf::models
