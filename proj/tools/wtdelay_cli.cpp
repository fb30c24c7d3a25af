// wtdelay: truth simulation, single-run delay estimation, Monte Carlo sweeps
// and report generation.

#include "wtdelay/csv.hpp"
#include "wtdelay/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace wtdelay;

namespace {

struct Options {
    std::string config;
    std::optional<std::string> scenario;
    std::optional<double> tve;
    std::optional<double> delay;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

AppConfig resolve(const Options& o) {
    AppConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
    if (o.scenario) c.experiment.scenarios = {*o.scenario};
    if (o.tve) c.experiment.tve_levels = {*o.tve};
    if (o.delay) c.experiment.delays = {*o.delay};
    if (o.trials) c.experiment.n_trials = *o.trials;
    if (o.seed) c.experiment.base_seed = *o.seed;
    if (o.workers) c.experiment.workers = *o.workers;
    if (o.out) c.experiment.output_dir = *o.out;
    c.validate();
    return c;
}

std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

void add_common(CLI::App* cmd, Options& o, bool plan_flags) {
    cmd->add_option("--config", o.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--scenario", o.scenario, "scenario preset (3P, 1P, FO, LoL, LiL, none)");
    cmd->add_option("--tve", o.tve, "PMU total vector error (fraction)");
    cmd->add_option("--delay", o.delay, "communication delay (s)");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--out", o.out, "output directory");
    if (plan_flags) {
        cmd->add_option("--trials", o.trials, "Monte Carlo trials per cell");
        cmd->add_option("--workers", o.workers, "worker threads");
    }
}

int cmd_simulate(const Options& o) {
    const AppConfig c = resolve(o);
    const auto truth = simulate_truth(c, c.experiment.scenarios.front(), c.experiment.delays.front());
    auto f = open_out(fs::path(c.experiment.output_dir) / "truth.csv");
    write_truth_csv(truth->log, f);
    const auto& d = truth->diagnostics;
    std::cout << "samples " << truth->log.size() << ", dt_sim " << d.dt_sim << " s, rk4 step bound "
              << d.rk4_step_bound << " s, initial residual " << d.initial_max_derivative << "\n";
    return 0;
}

int cmd_estimate(const Options& o) {
    const AppConfig c = resolve(o);
    const std::string scenario = c.experiment.scenarios.front();
    const double tve = c.experiment.tve_levels.front();
    const double delay = c.experiment.delays.front();
    const auto truth = simulate_truth(c, scenario, delay);
    const PipelineOutput p = run_pipeline(c, truth, tve, trial_seed(c.experiment.base_seed, scenario, tve, delay, 0));

    const fs::path dir = c.experiment.output_dir;
    {
        auto f = open_out(dir / "truth.csv");
        write_truth_csv(truth->log, f);
    }
    {
        auto f = open_out(dir / "pmu.csv");
        write_pmu_csv(p.stream, f);
    }
    {
        auto f = open_out(dir / "estimate.csv");
        write_estimate_csv(p.estimate, f);
    }
    {
        auto f = open_out(dir / "xcov.csv");
        csv::Writer w(f);
        w.header({"lag", "lag_seconds", "correlation", "covariance"});
        for (std::size_t i = 0; i < p.delay.trace.size(); ++i) {
            const int lag = p.delay.trace[i].lag;
            w.field(lag).field(lag * c.simulation.dt_pmu).field(p.delay.trace[i].value);
            w.field(p.delay.covariance[i].value);
            w.end_row();
        }
    }
    std::cout << "scenario " << scenario << ", tve " << tve << ", true delay " << delay << " s\n"
              << "estimated delay " << p.delay.lag_seconds << " s (" << p.delay.lag_samples
              << " samples), secondary peak ratio " << p.delay.secondary_peak_ratio << ", q rmse " << p.rmse_q
              << "\n";
    return 0;
}

int cmd_sweep(const Options& o) {
    const AppConfig c = resolve(o);
    const ExperimentOutput out = run_experiment(c);
    const fs::path dir = c.experiment.output_dir;
    {
        auto f = open_out(dir / "results.csv");
        write_results_csv(out.results, f);
    }
    {
        auto f = open_out(dir / "summary.csv");
        write_summary_csv(out.summary, f);
    }
    {
        auto f = open_out(dir / "timing.csv");
        write_timing_csv(out.results, f);
    }
    emit_plot_data(out.results, (dir / "plot").string());
    std::size_t failed = 0;
    for (const auto& r : out.results) failed += r.ok ? 0 : 1;
    std::cout << out.results.size() << " trials, " << failed << " failed; results in " << dir.string() << "\n";
    return 0;
}

int cmd_report(const Options& o) {
    const AppConfig c = resolve(o);
    const fs::path dir = c.experiment.output_dir;
    std::ifstream in(dir / "results.csv");
    if (!in) throw std::runtime_error("no results.csv in " + dir.string());
    const auto results = read_results_csv(in);
    {
        auto f = open_out(dir / "summary.csv");
        write_summary_csv(summarize(results, c.simulation.dt_pmu), f);
    }
    emit_plot_data(results, (dir / "plot").string());
    std::cout << "summary and plot data written to " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Communication-delay estimation for a wind plant reactive-power loop"};
    app.require_subcommand(1);
    Options o;
    auto* simulate = app.add_subcommand("simulate", "one truth run, written to truth.csv");
    auto* estimate = app.add_subcommand("estimate", "one full pipeline run");
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo plan");
    auto* report = app.add_subcommand("report", "summary and plot data from results.csv");
    add_common(simulate, o, false);
    add_common(estimate, o, false);
    add_common(sweep, o, true);
    add_common(report, o, false);
    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(o);
        if (estimate->parsed()) return cmd_estimate(o);
        if (sweep->parsed()) return cmd_sweep(o);
        return cmd_report(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
