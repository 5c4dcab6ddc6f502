#include "rpf/models.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rpf/errors.hpp"

namespace rpf::models {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double reflect_at_zero(double v) { return v < 0.0 ? -v : v; }

// One reflection per side, then clamp; jitter magnitudes are small compared
// to the interval so a single bounce is the common case.
double reflect_into(double v, double lo, double hi) {
    if (v < lo) v = 2.0 * lo - v;
    if (v > hi) v = 2.0 * hi - v;
    return std::min(std::max(v, lo), hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

double logistic_step(double a, double x) {
    if (!(a >= 0.0 && a <= 4.0)) {
        throw std::invalid_argument("logistic_step: growth parameter outside [0,4]");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("logistic_step: population outside [0,1]");
    }
    return a * x * (1.0 - x);
}

double lognormal_log_likelihood(double y, double x, double r) {
    if (!(r > 0.0)) {
        throw ConfigError("lognormal_log_likelihood: noise variance must be positive");
    }
    if (!(y > 0.0) || !(x > 0.0)) return kNegInf;
    const double s2 = std::log1p(r);
    const double m = -0.5 * s2;
    const double z = std::log(y / x) - m;
    return -std::log(y) - 0.5 * std::log(2.0 * M_PI * s2) - z * z / (2.0 * s2);
}

double beer_lambert_production(double leaf, double radiation, double rue, double rho) {
    if (leaf < 0.0 || radiation < 0.0) {
        throw std::invalid_argument("beer_lambert_production: negative input");
    }
    if (!(rue > 0.0) || !(rho > 0.0)) {
        throw std::invalid_argument("beer_lambert_production: rue and rho must be positive");
    }
    return rue * radiation * -std::expm1(-leaf / rho);
}

double allocation_fraction(double tau, double gamma, double mu_a, double sigma_a) {
    if (tau < 0.0) {
        throw std::invalid_argument("allocation_fraction: negative thermal time");
    }
    if (!(mu_a > 0.0) || !(sigma_a > 0.0) || !(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("allocation_fraction: parameters out of range");
    }
    if (tau == 0.0) return gamma;  // erf -> -1 limit
    const double z = std::log(tau / mu_a) / (std::sqrt(2.0) * sigma_a);
    return 0.5 * gamma * (1.0 - std::erf(z));
}

LnasState lnas_step(const LnasState& state, double temp_c, double rad_mj,
                    const LnasParams& params, const LnasConstants& constants) {
    LnasState next;
    next.tau = state.tau + std::max(0.0, temp_c);
    const double q =
        beer_lambert_production(state.leaf, rad_mj, params.rue, constants.rho);
    const double a =
        allocation_fraction(next.tau, params.gamma, params.mu_a, constants.sigma_a);
    next.leaf = state.leaf + a * q;
    next.root = state.root + (1.0 - a) * q;
    return next;
}

// ---------------------------------------------------------------------------
// Weather input
// ---------------------------------------------------------------------------

std::vector<WeatherDay> load_weather_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("weather file not found: " + path);
    }
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!std::getline(in, line)) fail("empty file");
    ++line_no;
    if (line == "day,temp_c,rad_mj\r") line.pop_back();
    if (line != "day,temp_c,rad_mj") fail("expected header 'day,temp_c,rad_mj'");

    std::vector<WeatherDay> days;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        double values[3];
        for (int f = 0; f < 3; ++f) {
            if (!std::getline(row, field, ',')) fail("expected 3 fields");
            try {
                size_t pos = 0;
                values[f] = std::stod(field, &pos);
                if (pos != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                fail("cannot parse number '" + field + "'");
            }
        }
        if (std::getline(row, field, ',')) fail("expected 3 fields");
        const int expected_day = static_cast<int>(days.size()) + 1;
        if (static_cast<int>(values[0]) != expected_day) {
            fail("day must increase from 1 (expected " + std::to_string(expected_day) + ")");
        }
        if (!(values[2] >= 0.0)) fail("radiation must be non-negative");
        days.push_back(WeatherDay{values[1], values[2]});
    }
    if (days.empty()) fail("no data rows");
    return days;
}

// ---------------------------------------------------------------------------
// StationaryLinearModel
// ---------------------------------------------------------------------------

StationaryLinearModel::StationaryLinearModel(GaussianBelief prior, Matrix obs_noise)
    : prior_(std::move(prior)), obs_noise_(std::move(obs_noise)) {
    check_belief(prior_, "StationaryLinearModel prior");
    check_covariance(obs_noise_, "StationaryLinearModel obs noise");
    if (obs_noise_.rows() != prior_.dim()) {
        throw std::invalid_argument("StationaryLinearModel: dimension mismatch");
    }
    obs_noise_sqrt_ = symmetric_sqrt(obs_noise_);
}

void StationaryLinearModel::set_quench(int step, Matrix r_after) {
    check_covariance(r_after, "StationaryLinearModel quench noise");
    quench_step_ = step;
    quench_r_ = std::move(r_after);
    quench_r_sqrt_ = symmetric_sqrt(quench_r_);
}

const Matrix& StationaryLinearModel::obs_noise(int step) const {
    return (quench_step_ > 0 && step >= quench_step_) ? quench_r_ : obs_noise_;
}

Vector StationaryLinearModel::prior_sample(RandomStream& rng) const {
    return sample_gaussian(prior_, rng);
}

Vector StationaryLinearModel::transition_sample(const Vector& x, int, RandomStream&) const {
    return x;
}

double StationaryLinearModel::log_likelihood(const Vector& y, const Vector& x,
                                             int step) const {
    return gaussian_log_density(y, x, obs_noise(step));
}

Vector StationaryLinearModel::observe_signal(const Vector& x, int) const { return x; }

Vector StationaryLinearModel::observe_sample(const Vector& x, int step,
                                             RandomStream& rng) const {
    const Matrix& sqrt =
        (quench_step_ > 0 && step >= quench_step_) ? quench_r_sqrt_ : obs_noise_sqrt_;
    Vector z(x.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
    return x + sqrt * z;
}

// ---------------------------------------------------------------------------
// GeneralLinearModel
// ---------------------------------------------------------------------------

GeneralLinearModel::GeneralLinearModel(Matrix a, Matrix b, Matrix q, Matrix r,
                                       GaussianBelief prior)
    : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), r_(std::move(r)),
      prior_(std::move(prior)) {
    check_belief(prior_, "GeneralLinearModel prior");
    check_covariance(q_, "GeneralLinearModel state noise");
    check_covariance(r_, "GeneralLinearModel obs noise");
    const auto d = a_.rows();
    if (a_.cols() != d || q_.rows() != d || b_.cols() != d || r_.rows() != b_.rows() ||
        prior_.dim() != d) {
        throw std::invalid_argument("GeneralLinearModel: dimension mismatch");
    }
    q_sqrt_ = symmetric_sqrt(q_);
    r_sqrt_ = symmetric_sqrt(r_);
    noiseless_state_ = q_.isZero(0.0);
}

Vector GeneralLinearModel::prior_sample(RandomStream& rng) const {
    return sample_gaussian(prior_, rng);
}

Vector GeneralLinearModel::transition_sample(const Vector& x, int, RandomStream& rng) const {
    Vector out = a_ * x;
    if (!noiseless_state_) {
        Vector z(out.size());
        for (int i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
        out += q_sqrt_ * z;
    }
    return out;
}

double GeneralLinearModel::log_likelihood(const Vector& y, const Vector& x, int) const {
    return gaussian_log_density(y, b_ * x, r_);
}

Vector GeneralLinearModel::observe_signal(const Vector& x, int) const { return b_ * x; }

Vector GeneralLinearModel::observe_sample(const Vector& x, int, RandomStream& rng) const {
    Vector z(b_.rows());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
    return b_ * x + r_sqrt_ * z;
}

// ---------------------------------------------------------------------------
// LogisticMapModel
// ---------------------------------------------------------------------------

LogisticMapModel::LogisticMapModel(double prior_mean, double prior_sd, double x0,
                                   double obs_noise)
    : prior_mean_(prior_mean), prior_sd_(prior_sd), x0_(x0), obs_noise_(obs_noise) {
    if (!(obs_noise_ > 0.0)) {
        throw ConfigError("LogisticMapModel: observation noise must be positive");
    }
    if (!(prior_sd_ >= 0.0)) {
        throw ConfigError("LogisticMapModel: prior sd must be non-negative");
    }
    if (!(x0_ >= 0.0 && x0_ <= 1.0)) {
        throw ConfigError("LogisticMapModel: x0 outside [0,1]");
    }
}

Vector LogisticMapModel::prior_sample(RandomStream& rng) const {
    // Rejection into the compact support [0,4].
    double a = prior_mean_;
    if (prior_sd_ > 0.0) {
        do {
            a = prior_mean_ + prior_sd_ * rng.gaussian();
        } while (a < 0.0 || a > 4.0);
    }
    Vector x(2);
    x << a, x0_;
    return x;
}

Vector LogisticMapModel::transition_sample(const Vector& x, int, RandomStream&) const {
    Vector out(2);
    out << x[0], logistic_step(x[0], x[1]);
    return out;
}

double LogisticMapModel::log_likelihood(const Vector& y, const Vector& x, int) const {
    return lognormal_log_likelihood(y[0], x[1], obs_noise_);
}

Vector LogisticMapModel::observe_signal(const Vector& x, int) const {
    Vector y(1);
    y << x[1];
    return y;
}

Vector LogisticMapModel::observe_sample(const Vector& x, int, RandomStream& rng) const {
    const double s2 = std::log1p(obs_noise_);
    const double eta = std::exp(-0.5 * s2 + std::sqrt(s2) * rng.gaussian());
    Vector y(1);
    y << x[1] * eta;
    return y;
}

void LogisticMapModel::apply_constraints(Vector& x) const {
    x[0] = reflect_into(x[0], 0.0, 4.0);
    x[1] = reflect_into(x[1], 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// LnasModel
// ---------------------------------------------------------------------------

LnasModel::LnasModel(GaussianBelief param_prior, double leaf0, LnasConstants constants,
                     std::vector<WeatherDay> weather, double obs_noise)
    : param_prior_(std::move(param_prior)), leaf0_(leaf0), constants_(constants),
      weather_(std::move(weather)), obs_noise_(obs_noise) {
    check_belief(param_prior_, "LnasModel parameter prior");
    if (param_prior_.dim() != 3) {
        throw ConfigError("LnasModel: parameter prior must be 3-dimensional");
    }
    if (!(leaf0_ > 0.0)) {
        throw ConfigError("LnasModel: initial leaf mass must be positive");
    }
    if (!(obs_noise_ > 0.0)) {
        throw ConfigError("LnasModel: observation noise must be positive");
    }
    if (weather_.empty()) {
        throw ConfigError("LnasModel: weather series is empty");
    }
}

const WeatherDay& LnasModel::day(int step) const {
    if (step < 1 || step > static_cast<int>(weather_.size())) {
        throw ConfigError("LnasModel: weather series shorter than requested horizon");
    }
    return weather_[static_cast<size_t>(step) - 1];
}

Vector LnasModel::initial_state(const LnasParams& truth) const {
    Vector x(6);
    x << truth.rue, truth.gamma, truth.mu_a, leaf0_, 0.0, 0.0;
    return x;
}

Vector LnasModel::prior_sample(RandomStream& rng) const {
    Vector theta = sample_gaussian(param_prior_, rng);
    Vector x(6);
    x << theta[0], theta[1], theta[2], leaf0_, 0.0, 0.0;
    apply_constraints(x);
    return x;
}

Vector LnasModel::transition_sample(const Vector& x, int step, RandomStream&) const {
    const WeatherDay& w = day(step);
    const LnasParams params{x[kRue], x[kGamma], x[kMuA]};
    const LnasState state{x[kLeaf], x[kRoot], x[kTau]};
    const LnasState next = lnas_step(state, w.temp_c, w.rad_mj, params, constants_);
    Vector out = x;
    out[kLeaf] = next.leaf;
    out[kRoot] = next.root;
    out[kTau] = next.tau;
    return out;
}

double LnasModel::log_likelihood(const Vector& y, const Vector& x, int) const {
    return lognormal_log_likelihood(y[0], x[kLeaf], obs_noise_) +
           lognormal_log_likelihood(y[1], x[kRoot], obs_noise_);
}

Vector LnasModel::observe_signal(const Vector& x, int) const {
    Vector y(2);
    y << x[kLeaf], x[kRoot];
    return y;
}

Vector LnasModel::observe_sample(const Vector& x, int, RandomStream& rng) const {
    const double s2 = std::log1p(obs_noise_);
    const double s = std::sqrt(s2);
    Vector y(2);
    y << x[kLeaf] * std::exp(-0.5 * s2 + s * rng.gaussian()),
        x[kRoot] * std::exp(-0.5 * s2 + s * rng.gaussian());
    return y;
}

void LnasModel::apply_constraints(Vector& x) const {
    x[kRue] = reflect_at_zero(x[kRue]);
    x[kGamma] = reflect_into(x[kGamma], 0.0, 1.0);
    x[kMuA] = reflect_at_zero(x[kMuA]);
    // Negative masses from jitter would leave the production law undefined.
    x[kLeaf] = reflect_at_zero(x[kLeaf]);
    x[kRoot] = reflect_at_zero(x[kRoot]);
}

// ---------------------------------------------------------------------------
// Data simulation
// ---------------------------------------------------------------------------

SimulatedData simulate_observations(const HmmModel& model, const Vector& true_initial,
                                    int horizon, uint64_t seed, bool oracle) {
    if (horizon < 1) {
        throw std::invalid_argument("simulate_observations: horizon must be >= 1");
    }
    SimulatedData data;
    data.states.reserve(static_cast<size_t>(horizon));
    data.observations.reserve(static_cast<size_t>(horizon));
    Vector x = true_initial;
    for (int n = 1; n <= horizon; ++n) {
        RandomStream truth_rng(seed, Domain::kTruth, static_cast<uint32_t>(n), 0);
        x = model.transition_sample(x, n, truth_rng);
        data.states.push_back(x);
        if (oracle) {
            data.observations.push_back(model.observe_signal(x, n));
        } else {
            RandomStream obs_rng(seed, Domain::kObservation, static_cast<uint32_t>(n), 0);
            data.observations.push_back(model.observe_sample(x, n, obs_rng));
        }
    }
    return data;
}

}  // namespace rpf::models
