#pragma once

// Experiment driver: one pipeline per trial (simulate, sense, filter,
// predict, estimate), Monte Carlo sweeps over scenario x TVE x delay, and the
// per-cell summaries that a boxplot displays.

#include "wtdelay/config.hpp"
#include "wtdelay/delay_estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace wtdelay {

/// Pure function of (base seed, cell, trial index).
std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& scenario, double tve, double delay, int trial);

struct PipelineOutput {
    std::shared_ptr<const SimResult> truth;
    std::vector<PhasorSample> stream;
    std::vector<DseRecord> estimate;
    std::vector<double> q_hat;
    std::vector<double> q_pre;
    DelayEstimate delay;
    double rmse_q = 0.0;  // q_hat against the delivered command
};

/// Truth run for one (scenario, delay) pair.
std::shared_ptr<const SimResult> simulate_truth(const AppConfig& config, const std::string& scenario, double delay);

/// Everything downstream of the truth run for one noise realization.
PipelineOutput run_pipeline(const AppConfig& config, std::shared_ptr<const SimResult> truth, double tve,
                            std::uint64_t seed);

struct TrialResult {
    std::string scenario;
    double tve = 0.0;
    double true_delay = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    bool diverged = false;
    std::string error;
    int true_lag = 0;
    int lag_samples = 0;
    double estimated_delay = 0.0;
    double peak = 0.0;
    double secondary_peak_ratio = 0.0;
    double rmse_q = 0.0;
    double wall_seconds = 0.0;
    std::vector<LagValue> trace;  // kept for trial 0 only

    int abs_error_samples() const { return std::abs(lag_samples - true_lag); }
};

struct CellSummary {
    std::string scenario;
    double tve = 0.0;
    double true_delay = 0.0;
    int n_trials = 0;
    int n_failed = 0;
    double q1_estimate = 0.0;
    double median_estimate = 0.0;
    double q3_estimate = 0.0;
    double iqr_estimate = 0.0;
    double median_abs_error = 0.0;  // s
    double fraction_within_one_sample = 0.0;
};

/// Linear-interpolation quantile (type 7) of an ascending sequence.
double quantile_sorted(const std::vector<double>& sorted, double p);

struct ExperimentOutput {
    std::vector<TrialResult> results;  // plan order: scenario, tve, delay, trial
    std::vector<CellSummary> summary;
};

ExperimentOutput run_experiment(const AppConfig& config);

std::vector<CellSummary> summarize(const std::vector<TrialResult>& results, double dt_pmu);

void write_results_csv(const std::vector<TrialResult>& results, std::ostream& os);
std::vector<TrialResult> read_results_csv(std::istream& is);
void write_summary_csv(const std::vector<CellSummary>& summary, std::ostream& os);
void write_timing_csv(const std::vector<TrialResult>& results, std::ostream& os);

/// quantiles.csv, lag_histogram.csv and, when traces are present,
/// xcov_examples.csv under `dir`.
void emit_plot_data(const std::vector<TrialResult>& results, const std::string& dir);

}  // namespace wtdelay
