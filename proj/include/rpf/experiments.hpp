#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rpf/kalman.hpp"
#include "rpf/models.hpp"
#include "rpf/smc.hpp"

namespace rpf::experiments {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    // run shape
    int n_particles = 1000;
    int steps = 1000;
    int replicates = 1;
    uint64_t seed = 1;
    bool oracle = false;
    long benchmark_n = 0;  // extra reference run when > 0

    smc::ResamplingPolicy policy = smc::ResamplingPolicy::Always();
    smc::BandwidthSchedule schedule = smc::BandwidthSchedule::RuleOfThumb();

    // constant-state family (prior variance fixed to 1 per component)
    double ratio = 0.25;       // observation noise variance / prior variance
    double prior_shift = 1.0;  // prior mean offset in prior standard deviations
    int dim = 1;
    int quench_step = 0;  // 0: no quench
    double quench_ratio = 1.0;

    // population-map parameter estimation
    double a_true = 3.33;
    double r_obs = 0.1;
    double prior_mean = 3.0;
    double prior_sd = 0.3;
    double x0 = 0.5;

    // plant-growth parameter estimation
    models::LnasParams lnas_truth;
    double rue_prior_mean = 3.8, rue_prior_sd = 0.3;
    double gamma_prior_mean = 0.7, gamma_prior_sd = 0.05;
    double mua_prior_mean = 500.0, mua_prior_sd = 50.0;
    models::LnasConstants lnas_constants;
    double leaf0 = 0.1;
    int snapshot_step = 100;
    std::string weather = "synthetic";  // "synthetic" or a CSV path
    uint64_t weather_seed = 1;

    // RMSE divisor; <= 0 means resolve to sqrt(trace of the prior covariance)
    double normalization = 0.0;
};

// Deterministic seeded daily series; temperature clamped to [-5, 35] C,
// radiation to >= 0.
std::vector<models::WeatherDay> synthetic_weather(int horizon, uint64_t seed);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

// Per-step sqrt(|mean - truth|^2 + trace(cov)) / normalization, restricted to
// `components` (empty = all).
std::vector<double> rmse_trace(const smc::FilterTrace& trace,
                               const std::vector<Vector>& truth, double normalization = 1.0,
                               const std::vector<int>& components = {});

struct ReplicateSummary {
    std::vector<double> rmse_mean;  // across replicates, per step
    std::vector<double> rmse_std;
    std::vector<double> ess_mean;
    std::vector<std::vector<int>> resample_times;  // per replicate
};

ReplicateSummary average_replicates(const std::vector<smc::FilterTrace>& traces,
                                    const std::vector<std::vector<Vector>>& truths,
                                    double normalization = 1.0,
                                    const std::vector<int>& components = {});

struct StrategyResult {
    std::string name;
    std::vector<smc::FilterTrace> traces;  // one per replicate
    ReplicateSummary summary;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

// Constant-state benchmark with exact overlays: the closed-form posterior,
// the kernel-inflated recursion for the configured strategy, the constant
// fixed-point RMSE level, and the periodic covariance band.
struct StationaryResult {
    std::vector<StrategyResult> strategies;  // rpf, sir, sis
    std::vector<std::vector<double>> kalman_rmse;     // per replicate, per step
    std::vector<std::vector<double>> perturbed_rmse;  // per replicate, per step
    double plateau_rmse = 0.0;  // constant-alpha fixed point (normalized); nan if n/a
    double cov_band_lo = 0.0;   // asymptotic covariance-trace band of the
    double cov_band_hi = 0.0;   // configured periodic policy
    double normalization = 1.0;
};

StationaryResult exp_stationary(const ExperimentConfig& config);

// Same model with the prior mean moved several standard deviations away;
// tracks how often plain duplication collapses the posterior spread.
struct ShiftedPriorResult {
    std::vector<StrategyResult> strategies;  // rpf, sir
    std::vector<double> kalman_sd;           // deterministic, per step
    int rpf_collapsed = 0;                   // replicates with final sd < 1e-3 prior sd
    int sir_collapsed = 0;
    double normalization = 1.0;
};

ShiftedPriorResult exp_shifted_prior(const ExperimentConfig& config);

// Resampling-time spacing under an ESS threshold.
struct EssSpacingResult {
    StrategyResult strategy;
    std::vector<std::vector<double>> spacing_ratios;  // per replicate
    double predicted_ratio = 0.0;                     // 1 + beta_crit
    bool sufficient_events = false;                   // >= 3 spacings somewhere
};

EssSpacingResult exp_ess_spacing(const ExperimentConfig& config);

// Growth-parameter estimation on the population map; strategies run on noisy
// data and (paired seeds) on noise-free data.
struct LogisticResult {
    std::vector<StrategyResult> strategies;         // noisy data
    std::vector<StrategyResult> oracle_strategies;  // same strategies, oracle data
    double normalization = 1.0;
};

LogisticResult exp_logistic(const ExperimentConfig& config);

// Plant-growth joint parameter estimation with the strategy comparison table.
struct LnasTableRow {
    std::string strategy;
    std::string parameter;  // rue, gamma, mu_a
    std::string statistic;  // mean, sd
    double value = 0.0;     // across-replicate average at the snapshot step
    double std_dev = 0.0;   // across-replicate spread
};

struct LnasResult {
    std::vector<StrategyResult> strategies;  // rpf-ess, rpf-harmonic, sir-ess, sis
    std::vector<LnasTableRow> table;
    // param_mean[s][p][step], param_sd[s][p][step]: replicate-averaged
    // posterior moments for strategy s and parameter p.
    std::vector<std::array<std::vector<double>, 3>> param_mean;
    std::vector<std::array<std::vector<double>, 3>> param_sd;
    double normalization = 1.0;
};

LnasResult exp_lnas(const ExperimentConfig& config);

// Single filter run (the `filter` subcommand): simulate data from the
// configured model truth, filter it, return the trace and per-step RMSE.
struct FilterRunResult {
    smc::FilterTrace trace;
    std::vector<double> rmse;
    double normalization = 1.0;
};

FilterRunResult run_single_filter(const std::string& model_name,
                                  const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// CSV emission (all floats with 17 significant digits)
// ---------------------------------------------------------------------------

std::string format_float(double v);

void write_trace_csv(const std::string& path, const smc::FilterTrace& trace,
                     const std::vector<double>& rmse);
void write_summary_csv(const std::string& path, const ReplicateSummary& summary);

void write_stationary_csvs(const StationaryResult& result,
                           const std::vector<std::vector<Vector>>& truths,
                           const std::string& out_dir);
void write_shifted_prior_csvs(const ShiftedPriorResult& result,
                              const std::vector<std::vector<Vector>>& truths,
                              const std::string& out_dir);
void write_ess_spacing_csvs(const EssSpacingResult& result, const std::string& out_dir);
void write_logistic_csvs(const LogisticResult& result, const std::string& out_dir);
void write_lnas_csvs(const LnasResult& result, const std::string& out_dir);
void write_filter_csvs(const FilterRunResult& result, const std::string& out_dir);

// Truth trajectories used by the experiment (for CSV RMSE columns).
std::vector<std::vector<Vector>> stationary_truths(const ExperimentConfig& config);

}  // namespace rpf::experiments
