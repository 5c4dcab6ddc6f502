#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rpf/models.hpp"
#include "rpf/types.hpp"

namespace rpf::smc {

// Particle cloud: one state per column plus log-weights. After any
// normalization the weights sum to one.
struct ParticleEnsemble {
    Matrix states;       // dim x N
    Vector log_weights;  // N

    int size() const { return static_cast<int>(states.cols()); }
    int dim() const { return static_cast<int>(states.rows()); }
};

ParticleEnsemble make_ensemble(int n_particles, int dim);

// When to resample.
struct ResamplingPolicy {
    enum class Kind { kAlways, kNever, kPeriodic, kEssThreshold };

    Kind kind = Kind::kAlways;
    int period = 1;
    double ess_crit = 0.5;

    static ResamplingPolicy Always();
    static ResamplingPolicy Never();
    static ResamplingPolicy Periodic(int period);
    // Strictly inside (0,1); map the endpoints to Always/Never instead.
    static ResamplingPolicy EssThreshold(double ess_crit);

    // ess_ratio = ESS/N, evaluated after the weight update of this step.
    // The threshold comparison is strict.
    bool triggers(int step, double ess_ratio) const;
};

// How the kernel bandwidth factor evolves. The base alpha_h defaults to the
// density-estimation optimum (4 / (N (d + 2)))^(2 / (d + 4)) resolved at run
// time from (N, d); set alpha_h to override it.
struct BandwidthSchedule {
    enum class Kind {
        kRuleOfThumb,       // constant base alpha
        kSilverman1d,       // constant (4/N)^(2/3), one-dimensional states only
        kHarmonic,          // alpha_h / (1 + n alpha_h)
        kExponentialDecay,  // alpha_h e^{-n alpha_h}
        kWestShrinkage,     // constant alpha_h with shrink a = sqrt(1 - alpha_h)
        kNoJitter,          // plain duplication (bootstrap resampling)
    };

    Kind kind = Kind::kRuleOfThumb;
    std::optional<double> alpha_h;  // base override

    static BandwidthSchedule RuleOfThumb();
    static BandwidthSchedule Silverman1d();
    static BandwidthSchedule Harmonic(std::optional<double> alpha_h = std::nullopt);
    static BandwidthSchedule ExponentialDecay(std::optional<double> alpha_h = std::nullopt);
    static BandwidthSchedule WestShrinkage(std::optional<double> alpha_h = std::nullopt);
    static BandwidthSchedule NoJitter();

    double base_alpha(int n_particles, int dim) const;
};

// MISE-minimizing constant bandwidth factor for a Gaussian kernel and target.
double rule_of_thumb_alpha(int n_particles, int dim);

struct AlphaShrink {
    double alpha = 0.0;
    std::optional<double> shrink;  // West pull toward the weighted mean
};

AlphaShrink compute_alpha(const BandwidthSchedule& schedule, int step, int n_particles,
                          int dim);

// Optimal kernel width from the mean-integrated-squared-error balance:
// h^5 = ||K||^2 / (N ||p''||^2 (int z^2 K)^2).
double mise_optimal_bandwidth(double kernel_l2_sq, double curvature_l2_sq,
                              double kernel_second_moment, int n_samples);

// Gaussian kernel and Gaussian target specialization: h^5 = 4 v^(5/2) / (3N).
double gaussian_mise_bandwidth(double variance, int n_samples);

// --- Weight bookkeeping ----------------------------------------------------

// Normalizes log-weights in place and returns the marginal-likelihood
// increment log(mean unnormalized weight) = logsumexp - log N.
// Throws DegeneracyError when every weight is -inf.
double normalize_weights(ParticleEnsemble& ensemble);

// 1 / sum w_i^2 for normalized weights, in [1, N].
double effective_sample_size(const Vector& weights);
double effective_sample_size(const ParticleEnsemble& ensemble);  // from log-weights

// Weighted mean and covariance with the N/(N-1) small-sample factor,
// symmetrized.
GaussianBelief weighted_mean_cov(const ParticleEnsemble& ensemble);

// --- Resampling ------------------------------------------------------------

// Low-variance selection from a single uniform draw; index i is chosen
// floor(N w_i) or ceil(N w_i) times.
std::vector<int> systematic_resample(const Vector& weights, RandomStream& rng);

// N independent categorical draws.
std::vector<int> multinomial_resample(const Vector& weights, RandomStream& rng);

// --- Regularization ----------------------------------------------------------

// Perturbs every state with a zero-mean Gaussian draw of covariance
// alpha * belief.cov (through the symmetric square root); with shrink a the
// states are first pulled to a x + (1 - a) mean. Weights reset to uniform.
// Per-particle noise comes from streams keyed by (seed, step, particle).
// Returns false when the covariance is exactly zero (jitter skipped).
bool regularize(ParticleEnsemble& ensemble, const GaussianBelief& belief, double alpha,
                std::optional<double> shrink, uint64_t seed, int step);

// --- Filtering loop ----------------------------------------------------------

struct StepDiagnostics {
    double ess = 0.0;  // after the weight update, before any resampling
    bool resampled = false;
    double log_marginal_increment = 0.0;
    double alpha_used = 0.0;
    bool zero_cov_jitter = false;
};

// One assimilation step: propagate, weight, normalize, maybe resample and
// regularize. posterior (if given) receives the weighted moments computed
// from the pre-selection particles.
StepDiagnostics filter_step(const models::HmmModel& model, ParticleEnsemble& ensemble,
                            const Vector& y, int step, const ResamplingPolicy& policy,
                            const BandwidthSchedule& schedule, uint64_t seed,
                            GaussianBelief* posterior = nullptr);

struct FilterTrace {
    int n_particles = 0;
    int state_dim = 0;
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    std::vector<double> ess_norm;      // ESS/N
    std::vector<char> resampled;
    std::vector<double> alpha;         // bandwidth factor applied, 0 when none
    std::vector<double> log_marginal;  // cumulative
    std::vector<int> resample_steps;
    int degenerate_step = -1;  // -1: completed

    int steps() const { return static_cast<int>(means.size()); }
};

// Full run from the model prior. Deterministic given the seed. A weight
// degeneracy aborts the run and records the failing step in the trace.
FilterTrace run_filter(const models::HmmModel& model, const std::vector<Vector>& observations,
                       int n_particles, const ResamplingPolicy& policy,
                       const BandwidthSchedule& schedule, uint64_t seed);

}  // namespace rpf::smc
