#include "rpf/kalman.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rpf/errors.hpp"
#include "rpf/rng.hpp"

namespace rpf::kalman {

// ---------------------------------------------------------------------------
// AlphaSequence
// ---------------------------------------------------------------------------

AlphaSequence AlphaSequence::Zero() { return AlphaSequence{Kind::kZero, 0.0, 1}; }

AlphaSequence AlphaSequence::Constant(double alpha_h) {
    if (!(alpha_h >= 0.0)) throw ConfigError("AlphaSequence: alpha_h must be >= 0");
    return AlphaSequence{Kind::kConstant, alpha_h, 1};
}

AlphaSequence AlphaSequence::Periodic(double alpha_h, int period) {
    if (!(alpha_h >= 0.0)) throw ConfigError("AlphaSequence: alpha_h must be >= 0");
    if (period < 1) throw ConfigError("AlphaSequence: period must be >= 1");
    return AlphaSequence{Kind::kPeriodic, alpha_h, period};
}

AlphaSequence AlphaSequence::Harmonic(double alpha_h) {
    if (!(alpha_h >= 0.0)) throw ConfigError("AlphaSequence: alpha_h must be >= 0");
    return AlphaSequence{Kind::kHarmonic, alpha_h, 1};
}

AlphaSequence AlphaSequence::ExponentialDecay(double alpha_h) {
    if (!(alpha_h >= 0.0)) throw ConfigError("AlphaSequence: alpha_h must be >= 0");
    return AlphaSequence{Kind::kExponentialDecay, alpha_h, 1};
}

double AlphaSequence::at(int n) const {
    if (n < 1) return 0.0;
    switch (kind) {
        case Kind::kZero:
            return 0.0;
        case Kind::kConstant:
            return alpha_h;
        case Kind::kPeriodic:
            return (n % period == 0) ? alpha_h : 0.0;
        case Kind::kHarmonic:
            return alpha_h / (1.0 + n * alpha_h);
        case Kind::kExponentialDecay:
            return alpha_h * std::exp(-n * alpha_h);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Exact recursion
// ---------------------------------------------------------------------------

GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& a,
                              const Matrix& q) {
    if (a.cols() != belief.dim() || q.rows() != a.rows()) {
        throw std::invalid_argument("kalman_predict: dimension mismatch");
    }
    GaussianBelief out;
    out.mean = a * belief.mean;
    out.cov = a * belief.cov * a.transpose() + q;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

GaussianBelief kalman_update(const GaussianBelief& pred, const Vector& y, const Matrix& b,
                             const Matrix& r) {
    if (b.cols() != pred.dim() || b.rows() != y.size() || r.rows() != y.size()) {
        throw std::invalid_argument("kalman_update: dimension mismatch");
    }
    const Matrix prior_info = sym_inverse(pred.cov);
    const Matrix bt_rinv = b.transpose() * sym_inverse(r);
    Matrix info = prior_info + bt_rinv * b;
    info = 0.5 * (info + info.transpose());
    GaussianBelief out;
    out.cov = sym_inverse(info);
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    out.mean = sym_solve(info, (prior_info * pred.mean + bt_rinv * y).eval());
    return out;
}

GaussianBelief kalman_update_gain_form(const GaussianBelief& pred, const Vector& y,
                                       const Matrix& b, const Matrix& r) {
    const Matrix innovation_cov = b * pred.cov * b.transpose() + r;
    const Matrix gain =
        sym_solve(innovation_cov, (b * pred.cov).eval()).transpose();
    GaussianBelief out;
    out.mean = pred.mean + gain * (y - b * pred.mean);
    const Matrix shrink = Matrix::Identity(pred.dim(), pred.dim()) - gain * b;
    out.cov = shrink * pred.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

GaussianBelief stationary_closed_form(int n, const GaussianBelief& prior, const Matrix& r,
                                      const Vector& y_bar) {
    if (n < 0) throw std::invalid_argument("stationary_closed_form: n must be >= 0");
    if (n == 0) return prior;
    const Matrix denom = r + static_cast<double>(n) * prior.cov;
    const Matrix w = sym_solve(denom, r).transpose();  // cov_n cov_0^-1 = R (R + n cov_0)^-1
    GaussianBelief out;
    out.cov = w * prior.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    out.mean = w * prior.mean + (Vector)(y_bar - w * y_bar);
    return out;
}

double log_evidence(const GaussianBelief& prior, const Matrix& a, const Matrix& b,
                    const Matrix& q, const Matrix& r, const std::vector<Vector>& ys) {
    GaussianBelief belief = prior;
    double total = 0.0;
    for (const Vector& y : ys) {
        const GaussianBelief pred = kalman_predict(belief, a, q);
        const Matrix innovation_cov = b * pred.cov * b.transpose() + r;
        total += gaussian_log_density(y, b * pred.mean, innovation_cov);
        belief = kalman_update(pred, y, b, r);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Inflated recursion
// ---------------------------------------------------------------------------

GaussianBelief perturbed_recursion_step(const GaussianBelief& belief, const Vector& y,
                                        const Matrix& r, double alpha) {
    if (!(alpha >= 0.0)) {
        throw std::invalid_argument("perturbed_recursion_step: alpha must be >= 0");
    }
    const Matrix identity = Matrix::Identity(belief.dim(), belief.dim());
    GaussianBelief out = kalman_update(belief, y, identity, r);
    out.cov *= (1.0 + alpha);
    return out;
}

namespace {

// Shared accumulator for the closed form. Tracks
//   log_p = log prod_{j<=n} (1 + alpha_j)
//   t     = S_n / P_n                     (t' = (t + 1) / (1 + alpha))
//   m     = sum_j P_{j-1} y_j / S_n       (running weighted mean)
// all of which stay O(n) even when P_n itself overflows.
struct ClosedFormState {
    double log_p = 0.0;
    double t = 0.0;
    Vector weighted_mean;

    void advance(double alpha, const Vector* y) {
        if (y != nullptr) {
            const double ratio = 1.0 / (t + 1.0);  // P_{j-1} / S_j
            weighted_mean += ratio * (*y - weighted_mean);
        }
        t = (t + 1.0) / (1.0 + alpha);
        log_p += std::log1p(alpha);
    }
};

GaussianBelief closed_form_from_state(const ClosedFormState& st, const GaussianBelief& prior,
                                      const Matrix& r) {
    const double inv_p = std::exp(-st.log_p);
    const Matrix prior_info = sym_inverse(prior.cov);
    const Matrix r_info = sym_inverse(r);
    Matrix info = inv_p * prior_info + st.t * r_info;  // = (cov_n / P_n)^-1
    info = 0.5 * (info + info.transpose());
    GaussianBelief out;
    out.cov = sym_inverse(info);
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    // W / P_n with W = cov_n cov_0^-1 / P_n... the prior weight matrix.
    const Matrix w = inv_p * (out.cov * prior_info);
    out.mean = w * prior.mean + (st.weighted_mean - w * st.weighted_mean);
    return out;
}

}  // namespace

GaussianBelief lemma_closed_form(int n, const GaussianBelief& prior, const Matrix& r,
                                 const std::vector<Vector>& ys, const AlphaSequence& seq) {
    if (n < 1) throw std::invalid_argument("lemma_closed_form: n must be >= 1");
    if (static_cast<int>(ys.size()) < n) {
        throw std::invalid_argument("lemma_closed_form: not enough observations");
    }
    ClosedFormState st;
    st.weighted_mean = Vector::Zero(prior.dim());
    for (int j = 1; j <= n; ++j) {
        st.advance(seq.at(j), &ys[static_cast<size_t>(j) - 1]);
    }
    return closed_form_from_state(st, prior, r);
}

std::vector<double> covariance_sweep(int n_max, double prior_var, double r,
                                     const AlphaSequence& seq) {
    if (n_max < 1) throw std::invalid_argument("covariance_sweep: n_max must be >= 1");
    if (!(prior_var > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("covariance_sweep: variances must be positive");
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n_max));
    ClosedFormState st;
    st.weighted_mean = Vector::Zero(1);
    for (int j = 1; j <= n_max; ++j) {
        st.advance(seq.at(j), nullptr);
        const double inv_p = std::exp(-st.log_p);
        out.push_back(1.0 / (inv_p / prior_var + st.t / r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fixed points and rates
// ---------------------------------------------------------------------------

FixedPoint rpf_fixed_point(double alpha_h, const Matrix& r) {
    if (!(alpha_h > 0.0)) throw std::invalid_argument("rpf_fixed_point: alpha_h must be > 0");
    FixedPoint fp;
    fp.cov = alpha_h * r;
    fp.residual_cov = (alpha_h / (2.0 + alpha_h)) * r;
    fp.rmse_bound = std::sqrt((fp.cov + fp.residual_cov).trace());
    return fp;
}

FixedPoint periodic_fixed_point(double alpha_h, int p, int q, const Matrix& r) {
    if (!(alpha_h > 0.0)) {
        throw std::invalid_argument("periodic_fixed_point: alpha_h must be > 0");
    }
    if (p < 1) throw std::invalid_argument("periodic_fixed_point: p must be >= 1");
    if (q < 0 || q >= p) throw std::invalid_argument("periodic_fixed_point: q outside [0,p)");
    const double pq = p + alpha_h * q;
    FixedPoint fp;
    fp.cov = (alpha_h / pq) * r;
    fp.residual_cov = (alpha_h / (2.0 + alpha_h)) *
                      ((p + alpha_h * (2.0 + alpha_h) * q) / (pq * pq)) * r;
    fp.rmse_bound = std::sqrt((fp.cov + fp.residual_cov).trace());
    return fp;
}

RateReport optimal_rate_check(const AlphaSequence& seq, int n_max, double prior_var,
                              double r) {
    if (n_max < 100) throw std::invalid_argument("optimal_rate_check: n_max must be >= 100");
    const std::vector<double> cov = covariance_sweep(n_max, prior_var, r, seq);
    RateReport report{0.0, 0.0};
    for (int n = 1; n <= n_max; ++n) {
        const double scaled = n * cov[static_cast<size_t>(n) - 1] / r;
        report.sup_scaled = std::max(report.sup_scaled, scaled);
    }
    report.final_scaled = n_max * cov.back() / r;
    return report;
}

// ---------------------------------------------------------------------------
// Weight-degeneracy asymptotics
// ---------------------------------------------------------------------------

double ess_asymptotic(int n, double mu0, double sigma0, double r, double y_bar) {
    if (n < 1) throw std::invalid_argument("ess_asymptotic: n must be >= 1");
    if (!(sigma0 > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("ess_asymptotic: variances must be positive");
    }
    const double gamma = r / (n * sigma0);
    const double shift = mu0 - y_bar;
    return std::sqrt(gamma * (2.0 + gamma)) / (1.0 + gamma) *
           std::exp(-shift * shift / (sigma0 * (1.0 + gamma) * (2.0 + gamma)));
}

double beta_crit(double ess_crit) {
    if (!(ess_crit > 0.0 && ess_crit < 1.0)) {
        throw ConfigError(
            "beta_crit: ess_crit must lie strictly inside (0,1); the endpoints "
            "correspond to the always/never policies");
    }
    const double root = std::sqrt(1.0 - ess_crit * ess_crit);
    return root / (1.0 - root);
}

// ---------------------------------------------------------------------------
// Self check
// ---------------------------------------------------------------------------

namespace {

Matrix random_spd(int d, RandomStream& rng) {
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.gaussian();
    return a * a.transpose() + 0.1 * static_cast<double>(d) * Matrix::Identity(d, d);
}

Vector random_vec(int d, RandomStream& rng) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.gaussian();
    return v;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

std::vector<CheckResult> self_check() {
    std::vector<CheckResult> results;
    auto record = [&](const std::string& name, bool pass, const std::string& detail) {
        results.push_back(CheckResult{name, pass, detail});
    };
    std::ostringstream detail;

    {  // dual-route update agreement on random instances
        RandomStream rng(20240901, Domain::kGeneric, 0, 0);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 1 + static_cast<int>(rng.next_u64() % 4);
            const int dy = 1 + static_cast<int>(rng.next_u64() % 4);
            GaussianBelief pred{random_vec(d, rng), random_spd(d, rng)};
            Matrix b(dy, d);
            for (int i = 0; i < dy; ++i)
                for (int j = 0; j < d; ++j) b(i, j) = rng.gaussian();
            const Matrix r = random_spd(dy, rng);
            const Vector y = random_vec(dy, rng);
            const GaussianBelief info = kalman_update(pred, y, b, r);
            const GaussianBelief gain = kalman_update_gain_form(pred, y, b, r);
            worst = std::max(worst, (info.mean - gain.mean).cwiseAbs().maxCoeff() /
                                        (1.0 + gain.mean.cwiseAbs().maxCoeff()));
            worst = std::max(worst, (info.cov - gain.cov).cwiseAbs().maxCoeff() /
                                        (1.0 + gain.cov.cwiseAbs().maxCoeff()));
        }
        detail.str("");
        detail << "max relative gap " << worst;
        record("update_information_vs_gain", worst < 1e-10, detail.str());
    }

    {  // closed form vs step-by-step recursion, random alpha sequence
        RandomStream rng(20240902, Domain::kGeneric, 0, 0);
        const int n = 1000;
        GaussianBelief prior{Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 1.0)};
        const Matrix r = Matrix::Constant(1, 1, 0.25);
        std::vector<Vector> ys;
        std::vector<double> alphas;
        for (int j = 0; j < n; ++j) {
            ys.push_back(Vector::Constant(1, rng.gaussian()));
            alphas.push_back(0.2 * rng.uniform());
        }
        GaussianBelief iter = prior;
        double worst = 0.0;
        ClosedFormState st;
        st.weighted_mean = Vector::Zero(1);
        for (int j = 1; j <= n; ++j) {
            const double alpha = alphas[static_cast<size_t>(j) - 1];
            iter = perturbed_recursion_step(iter, ys[static_cast<size_t>(j) - 1], r, alpha);
            st.advance(alpha, &ys[static_cast<size_t>(j) - 1]);
            const GaussianBelief closed = closed_form_from_state(st, prior, r);
            worst = std::max(worst, rel_err(closed.mean[0], iter.mean[0]));
            worst = std::max(worst, rel_err(closed.cov(0, 0), iter.cov(0, 0)));
        }
        detail.str("");
        detail << "max relative gap " << worst << " over n=" << n;
        record("closed_form_vs_recursion", worst < 1e-10, detail.str());
    }

    {  // zero-bandwidth sequence reduces to the plain stationary posterior
        RandomStream rng(20240903, Domain::kGeneric, 0, 0);
        GaussianBelief prior{Vector::Constant(1, 0.7), Matrix::Constant(1, 1, 2.0)};
        const Matrix r = Matrix::Constant(1, 1, 0.5);
        std::vector<Vector> ys;
        Vector y_bar = Vector::Zero(1);
        for (int j = 0; j < 50; ++j) ys.push_back(Vector::Constant(1, rng.gaussian()));
        double worst = 0.0;
        for (int j = 0; j < 50; ++j) {
            y_bar += (ys[static_cast<size_t>(j)] - y_bar) / (j + 1.0);
            const GaussianBelief a =
                lemma_closed_form(j + 1, prior, r, ys, AlphaSequence::Zero());
            const GaussianBelief b = stationary_closed_form(j + 1, prior, r, y_bar);
            worst = std::max(worst, rel_err(a.mean[0], b.mean[0]));
            worst = std::max(worst, rel_err(a.cov(0, 0), b.cov(0, 0)));
        }
        detail.str("");
        detail << "max relative gap " << worst;
        record("zero_sequence_matches_stationary", worst < 1e-12, detail.str());
    }

    {  // monotone covariance contraction without inflation
        const std::vector<double> cov = covariance_sweep(200, 1.0, 0.25, AlphaSequence::Zero());
        bool monotone = true;
        for (size_t i = 1; i < cov.size(); ++i) monotone = monotone && cov[i] < cov[i - 1];
        record("zero_sequence_monotone_contraction", monotone, "200 steps");
    }

    {  // exponential attraction to the constant-alpha fixed point
        const double alpha = 0.070790;
        const double r = 0.25;
        const std::vector<double> cov =
            covariance_sweep(4000, 1.0, r, AlphaSequence::Constant(alpha));
        const double target = alpha * r;
        bool monotone = true;
        double prev = std::abs(cov[199] - target);
        for (size_t i = 200; i < 1500; ++i) {
            const double err = std::abs(cov[i] - target);
            if (err > prev) monotone = false;
            prev = err;
        }
        // log-error slope over a mid window
        const double e1 = std::log(std::abs(cov[299] - target));
        const double e2 = std::log(std::abs(cov[899] - target));
        const double slope = (e2 - e1) / 600.0;
        const bool slope_ok = std::abs(-slope - alpha) < 0.2 * alpha;
        const double final_rel = std::abs(cov[3999] - target) / target;
        detail.str("");
        detail << "slope " << slope << " final rel err " << final_rel;
        record("constant_alpha_fixed_point",
               monotone && slope_ok && final_rel < 1e-6, detail.str());
    }

    {  // periodic consistency: p=1,q=0 equals the constant fixed point
        const Matrix r = Matrix::Constant(1, 1, 0.25);
        const FixedPoint a = rpf_fixed_point(0.0708, r);
        const FixedPoint b = periodic_fixed_point(0.0708, 1, 0, r);
        const double gap = std::abs(a.cov(0, 0) - b.cov(0, 0)) +
                           std::abs(a.residual_cov(0, 0) - b.residual_cov(0, 0));
        record("periodic_p1_matches_constant", gap < 1e-15, "");
    }

    {  // rate asymptotes: harmonic -> 2, zero -> 1
        const double alpha = 0.070790;
        const RateReport harmonic =
            optimal_rate_check(AlphaSequence::Harmonic(alpha), 10000, 1.0, 0.25);
        const RateReport zero = optimal_rate_check(AlphaSequence::Zero(), 10000, 1.0, 0.25);
        detail.str("");
        detail << "harmonic " << harmonic.final_scaled << " zero " << zero.final_scaled;
        record("rate_asymptotes",
               std::abs(harmonic.final_scaled - 2.0) < 0.1 &&
                   std::abs(zero.final_scaled - 1.0) < 1e-3,
               detail.str());
    }

    {  // scalar transition dichotomy around |a| = 1
        const Matrix r = Matrix::Constant(1, 1, 1.0);
        const Vector y = Vector::Zero(1);
        const Matrix identity = Matrix::Identity(1, 1);
        auto run = [&](double a_scalar) {
            GaussianBelief belief{Vector::Zero(1), Matrix::Constant(1, 1, 1.0)};
            const Matrix a = a_scalar * identity;
            double min_cov = 1e300;
            for (int n = 0; n < 300; ++n) {
                belief = kalman_update(kalman_predict(belief, a, Matrix::Zero(1, 1)), y,
                                       identity, r);
                min_cov = std::min(min_cov, belief.cov(0, 0));
            }
            return std::pair<double, double>(min_cov, belief.cov(0, 0));
        };
        const auto expanding = run(1.5);
        const auto contracting = run(0.5);
        const double bound = 1.0 - 1.0 / (1.5 * 1.5);
        detail.str("");
        detail << "min cov " << expanding.first << " vs bound " << bound
               << "; contracting final " << contracting.second;
        record("scalar_transition_dichotomy",
               expanding.first >= bound - 1e-12 && contracting.second < 1e-10,
               detail.str());
    }

    {  // spot values of the degeneracy asymptotics
        const double e1 = ess_asymptotic(1, 0.0, 1.0, 1.0, 0.0);  // gamma = 1
        const double b1 = beta_crit(0.5);
        detail.str("");
        detail << "ess(gamma=1) " << e1 << " beta(0.5) " << b1;
        record("degeneracy_spot_values",
               std::abs(e1 - std::sqrt(3.0) / 2.0) < 1e-12 &&
                   std::abs(b1 - 6.464101615137754) < 1e-9,
               detail.str());
    }

    return results;
}

}  // namespace rpf::kalman
