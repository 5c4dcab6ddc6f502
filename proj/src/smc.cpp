#include "rpf/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rpf/errors.hpp"
#include "rpf/rng.hpp"

namespace rpf::smc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ParticleEnsemble make_ensemble(int n_particles, int dim) {
    if (n_particles < 2) throw ConfigError("ensemble needs at least 2 particles");
    if (dim < 1) throw ConfigError("ensemble dimension must be >= 1");
    ParticleEnsemble e;
    e.states = Matrix::Zero(dim, n_particles);
    e.log_weights = Vector::Constant(n_particles, -std::log(double(n_particles)));
    return e;
}

// ---------------------------------------------------------------------------
// Policies and schedules
// ---------------------------------------------------------------------------

ResamplingPolicy ResamplingPolicy::Always() { return {Kind::kAlways, 1, 0.5}; }
ResamplingPolicy ResamplingPolicy::Never() { return {Kind::kNever, 1, 0.5}; }

ResamplingPolicy ResamplingPolicy::Periodic(int period) {
    if (period < 1) throw ConfigError("periodic policy needs period >= 1");
    return {Kind::kPeriodic, period, 0.5};
}

ResamplingPolicy ResamplingPolicy::EssThreshold(double ess_crit) {
    if (!(ess_crit > 0.0 && ess_crit < 1.0)) {
        throw ConfigError("ess threshold must lie strictly inside (0,1); use the "
                          "always/never policies for the endpoints");
    }
    return {Kind::kEssThreshold, 1, ess_crit};
}

bool ResamplingPolicy::triggers(int step, double ess_ratio) const {
    switch (kind) {
        case Kind::kAlways:
            return true;
        case Kind::kNever:
            return false;
        case Kind::kPeriodic:
            return step % period == 0;  // steps count from 1
        case Kind::kEssThreshold:
            return ess_ratio < ess_crit;
    }
    return false;
}

BandwidthSchedule BandwidthSchedule::RuleOfThumb() { return {Kind::kRuleOfThumb, {}}; }
BandwidthSchedule BandwidthSchedule::Silverman1d() { return {Kind::kSilverman1d, {}}; }
BandwidthSchedule BandwidthSchedule::Harmonic(std::optional<double> alpha_h) {
    return {Kind::kHarmonic, alpha_h};
}
BandwidthSchedule BandwidthSchedule::ExponentialDecay(std::optional<double> alpha_h) {
    return {Kind::kExponentialDecay, alpha_h};
}
BandwidthSchedule BandwidthSchedule::WestShrinkage(std::optional<double> alpha_h) {
    return {Kind::kWestShrinkage, alpha_h};
}
BandwidthSchedule BandwidthSchedule::NoJitter() { return {Kind::kNoJitter, {}}; }

double rule_of_thumb_alpha(int n_particles, int dim) {
    if (n_particles < 2 || dim < 1) {
        throw ConfigError("rule_of_thumb_alpha: need N >= 2 and dim >= 1");
    }
    return std::pow(4.0 / (n_particles * (dim + 2.0)), 2.0 / (dim + 4.0));
}

double BandwidthSchedule::base_alpha(int n_particles, int dim) const {
    if (alpha_h) {
        if (!(*alpha_h >= 0.0)) throw ConfigError("bandwidth alpha_h must be >= 0");
        return *alpha_h;
    }
    switch (kind) {
        case Kind::kNoJitter:
            return 0.0;
        case Kind::kSilverman1d:
            if (dim != 1) {
                throw ConfigError("silverman bandwidth is defined for 1-d states only");
            }
            return std::pow(4.0 / n_particles, 2.0 / 3.0);
        default:
            return rule_of_thumb_alpha(n_particles, dim);
    }
}

AlphaShrink compute_alpha(const BandwidthSchedule& schedule, int step, int n_particles,
                          int dim) {
    if (step < 1) throw ConfigError("compute_alpha: step counts from 1");
    const double base = schedule.base_alpha(n_particles, dim);
    AlphaShrink out;
    switch (schedule.kind) {
        case BandwidthSchedule::Kind::kRuleOfThumb:
        case BandwidthSchedule::Kind::kSilverman1d:
            out.alpha = base;
            break;
        case BandwidthSchedule::Kind::kHarmonic:
            out.alpha = base / (1.0 + step * base);
            break;
        case BandwidthSchedule::Kind::kExponentialDecay:
            out.alpha = base * std::exp(-step * base);
            break;
        case BandwidthSchedule::Kind::kWestShrinkage:
            if (!(base < 1.0)) {
                throw ConfigError("west shrinkage needs alpha_h < 1");
            }
            out.alpha = base;
            out.shrink = std::sqrt(1.0 - base);
            break;
        case BandwidthSchedule::Kind::kNoJitter:
            out.alpha = 0.0;
            break;
    }
    return out;
}

double mise_optimal_bandwidth(double kernel_l2_sq, double curvature_l2_sq,
                              double kernel_second_moment, int n_samples) {
    if (!(kernel_l2_sq > 0.0) || !(curvature_l2_sq > 0.0) ||
        !(kernel_second_moment > 0.0) || n_samples < 1) {
        throw ConfigError("mise_optimal_bandwidth: inputs must be positive");
    }
    const double h5 = kernel_l2_sq / (n_samples * curvature_l2_sq * kernel_second_moment *
                                      kernel_second_moment);
    return std::pow(h5, 0.2);
}

double gaussian_mise_bandwidth(double variance, int n_samples) {
    if (!(variance > 0.0) || n_samples < 1) {
        throw ConfigError("gaussian_mise_bandwidth: inputs must be positive");
    }
    return std::pow(4.0 * std::pow(variance, 2.5) / (3.0 * n_samples), 0.2);
}

// ---------------------------------------------------------------------------
// Weight bookkeeping
// ---------------------------------------------------------------------------

double normalize_weights(ParticleEnsemble& ensemble) {
    const int n = ensemble.size();
    const double max_lw = ensemble.log_weights.maxCoeff();
    if (!std::isfinite(max_lw)) {
        throw DegeneracyError("all particle weights vanished", -1);
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += std::exp(ensemble.log_weights[i] - max_lw);
    }
    const double log_sum = max_lw + std::log(sum);
    ensemble.log_weights.array() -= log_sum;
    return log_sum - std::log(double(n));
}

double effective_sample_size(const Vector& weights) {
    return 1.0 / weights.squaredNorm();
}

double effective_sample_size(const ParticleEnsemble& ensemble) {
    double sum_sq = 0.0;
    for (int i = 0; i < ensemble.size(); ++i) {
        const double w = std::exp(ensemble.log_weights[i]);
        sum_sq += w * w;
    }
    return 1.0 / sum_sq;
}

GaussianBelief weighted_mean_cov(const ParticleEnsemble& ensemble) {
    const int n = ensemble.size();
    const int d = ensemble.dim();
    if (n < 2) throw ConfigError("weighted_mean_cov needs at least 2 particles");
    Vector w(n);
    for (int i = 0; i < n; ++i) w[i] = std::exp(ensemble.log_weights[i]);

    GaussianBelief belief;
    belief.mean = ensemble.states * w;
    Matrix cov = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        const Vector centered = ensemble.states.col(i) - belief.mean;
        cov.noalias() += w[i] * (centered * centered.transpose());
    }
    cov *= double(n) / double(n - 1);
    belief.cov = 0.5 * (cov + cov.transpose());
    return belief;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

std::vector<int> systematic_resample(const Vector& weights, RandomStream& rng) {
    const int n = static_cast<int>(weights.size());
    std::vector<int> indices(static_cast<size_t>(n));
    const double u0 = rng.uniform();
    double cumulative = weights[0];
    int i = 0;
    for (int m = 0; m < n; ++m) {
        const double position = (u0 + m) / n;
        while (position > cumulative && i + 1 < n) {
            cumulative += weights[++i];
        }
        indices[static_cast<size_t>(m)] = i;
    }
    return indices;
}

std::vector<int> multinomial_resample(const Vector& weights, RandomStream& rng) {
    const int n = static_cast<int>(weights.size());
    std::vector<double> cdf(static_cast<size_t>(n));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += weights[i];
        cdf[static_cast<size_t>(i)] = acc;
    }
    cdf.back() = std::max(cdf.back(), 1.0);
    std::vector<int> indices(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        indices[static_cast<size_t>(m)] =
            static_cast<int>(std::distance(cdf.begin(), it));
    }
    return indices;
}

// ---------------------------------------------------------------------------
// Regularization
// ---------------------------------------------------------------------------

bool regularize(ParticleEnsemble& ensemble, const GaussianBelief& belief, double alpha,
                std::optional<double> shrink, uint64_t seed, int step) {
    const int n = ensemble.size();
    const int d = ensemble.dim();
    if (!(alpha >= 0.0)) throw ConfigError("regularize: alpha must be >= 0");

    if (shrink) {
        const double a = *shrink;
        for (int i = 0; i < n; ++i) {
            ensemble.states.col(i) = a * ensemble.states.col(i) + (1.0 - a) * belief.mean;
        }
    }
    ensemble.log_weights.setConstant(-std::log(double(n)));

    if (alpha == 0.0) return true;
    if (belief.cov.isZero(0.0)) return false;  // degenerate cloud, nothing to scale

    const Matrix bandwidth_sqrt = symmetric_sqrt((alpha * belief.cov).eval());
    Vector z(d);
    for (int i = 0; i < n; ++i) {
        RandomStream rng(seed, Domain::kJitter, static_cast<uint32_t>(step),
                         static_cast<uint32_t>(i));
        for (int k = 0; k < d; ++k) z[k] = rng.gaussian();
        ensemble.states.col(i) += bandwidth_sqrt * z;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Filtering loop
// ---------------------------------------------------------------------------

StepDiagnostics filter_step(const models::HmmModel& model, ParticleEnsemble& ensemble,
                            const Vector& y, int step, const ResamplingPolicy& policy,
                            const BandwidthSchedule& schedule, uint64_t seed,
                            GaussianBelief* posterior) {
    const int n = ensemble.size();
    if (y.size() != model.obs_dim()) {
        throw std::invalid_argument("filter_step: observation dimension mismatch");
    }

    // Propagate and weight. Accumulated log-weights are kept relative to the
    // uniform baseline (uniform == 0) so the normalization constant below is
    // exactly the marginal-likelihood increment.
    const double log_n = std::log(double(n));
    for (int i = 0; i < n; ++i) {
        RandomStream rng(seed, Domain::kTransition, static_cast<uint32_t>(step),
                         static_cast<uint32_t>(i));
        ensemble.states.col(i) =
            model.transition_sample(ensemble.states.col(i), step, rng);
        ensemble.log_weights[i] +=
            log_n + model.log_likelihood(y, ensemble.states.col(i), step);
    }

    StepDiagnostics diag;
    try {
        diag.log_marginal_increment = normalize_weights(ensemble);
    } catch (const DegeneracyError&) {
        throw DegeneracyError("all particle weights vanished", step);
    }
    diag.ess = effective_sample_size(ensemble);

    const GaussianBelief belief = weighted_mean_cov(ensemble);
    if (posterior != nullptr) *posterior = belief;

    if (policy.triggers(step, diag.ess / n)) {
        diag.resampled = true;
        Vector w(n);
        for (int i = 0; i < n; ++i) w[i] = std::exp(ensemble.log_weights[i]);
        RandomStream select_rng(seed, Domain::kResample, static_cast<uint32_t>(step), 0);
        const std::vector<int> idx = systematic_resample(w, select_rng);
        Matrix selected(ensemble.dim(), n);
        for (int i = 0; i < n; ++i) selected.col(i) = ensemble.states.col(idx[static_cast<size_t>(i)]);
        ensemble.states.swap(selected);

        const AlphaShrink bw = compute_alpha(schedule, step, n, ensemble.dim());
        diag.alpha_used = bw.alpha;
        const bool jittered = regularize(ensemble, belief, bw.alpha, bw.shrink, seed, step);
        diag.zero_cov_jitter = !jittered;
        if (bw.alpha > 0.0 || bw.shrink) {
            for (int i = 0; i < n; ++i) {
                Vector col = ensemble.states.col(i);
                model.apply_constraints(col);
                ensemble.states.col(i) = col;
            }
        }
    }
    return diag;
}

FilterTrace run_filter(const models::HmmModel& model, const std::vector<Vector>& observations,
                       int n_particles, const ResamplingPolicy& policy,
                       const BandwidthSchedule& schedule, uint64_t seed) {
    if (observations.empty()) {
        throw std::invalid_argument("run_filter: need at least one observation");
    }
    ParticleEnsemble ensemble = make_ensemble(n_particles, model.state_dim());
    for (int i = 0; i < n_particles; ++i) {
        RandomStream rng(seed, Domain::kPrior, 0, static_cast<uint32_t>(i));
        ensemble.states.col(i) = model.prior_sample(rng);
    }

    FilterTrace trace;
    trace.n_particles = n_particles;
    trace.state_dim = model.state_dim();
    const int horizon = static_cast<int>(observations.size());
    trace.means.reserve(static_cast<size_t>(horizon));

    double cumulative = 0.0;
    GaussianBelief posterior;
    for (int step = 1; step <= horizon; ++step) {
        StepDiagnostics diag;
        try {
            diag = filter_step(model, ensemble, observations[static_cast<size_t>(step) - 1],
                               step, policy, schedule, seed, &posterior);
        } catch (const DegeneracyError&) {
            trace.degenerate_step = step;
            break;
        }
        cumulative += diag.log_marginal_increment;
        trace.means.push_back(posterior.mean);
        trace.covs.push_back(posterior.cov);
        trace.ess_norm.push_back(diag.ess / n_particles);
        trace.resampled.push_back(diag.resampled ? 1 : 0);
        trace.alpha.push_back(diag.resampled ? diag.alpha_used : 0.0);
        trace.log_marginal.push_back(cumulative);
        if (diag.resampled) trace.resample_steps.push_back(step);
    }
    return trace;
}

}  // namespace rpf::smc
