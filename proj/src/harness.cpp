#include "wtdelay/harness.hpp"

#include "wtdelay/csv.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace wtdelay {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int lag_of(double delay, double dt) { return static_cast<int>(std::lround(delay / dt)); }

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, const std::string& scenario, double tve, double delay, int trial) {
    const std::string cell = scenario + "|" + csv::format(tve) + "|" + csv::format(delay);
    return splitmix64(splitmix64(base_seed ^ fnv1a(cell)) + static_cast<std::uint64_t>(trial));
}

std::shared_ptr<const SimResult> simulate_truth(const AppConfig& c, const std::string& scenario, double delay) {
    SimConfig sim = c.simulation;
    sim.scenario = c.scenario(scenario);
    sim.comm_delay = delay;
    return std::make_shared<const SimResult>(run_simulation(sim, c.turbine, c.controller, c.grid));
}

PipelineOutput run_pipeline(const AppConfig& c, std::shared_ptr<const SimResult> truth, double tve,
                            std::uint64_t seed) {
    PipelineOutput out;
    out.truth = std::move(truth);
    const TruthLog& log = out.truth->log;

    NoiseModel noise = c.pmu;
    noise.tve_v = noise.tve_i = tve;
    noise.seed = seed;
    out.stream = sample_pmu(log, noise);

    const DseModel model{c.controller, GscGains::from(c.turbine), tve};
    out.estimate = run_dse(out.stream, c.ukf, model);
    out.q_hat.reserve(out.estimate.size());
    for (const auto& r : out.estimate) out.q_hat.push_back(r.x.q_plant);

    std::vector<TimedValue> v_meas;
    v_meas.reserve(out.stream.size());
    for (const auto& s : out.stream) v_meas.push_back({s.t, std::abs(s.v)});
    for (const auto& p : open_loop_predict(c.controller, v_meas, out.q_hat.front(), c.estimator.scheme)) {
        out.q_pre.push_back(p.value);
    }

    out.delay = estimate_delay(out.q_hat, out.q_pre, c.simulation.dt_pmu,
                               {c.estimator.window_min, c.estimator.window_max});

    double acc = 0.0;
    for (std::size_t k = 0; k < out.q_hat.size(); ++k) {
        const double e = out.q_hat[k] - log.q_plant_delivered[k];
        acc += e * e;
    }
    out.rmse_q = std::sqrt(acc / static_cast<double>(out.q_hat.size()));
    return out;
}

double quantile_sorted(const std::vector<double>& x, double p) {
    if (x.empty()) throw std::invalid_argument("quantile of an empty sequence");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
    const double h = static_cast<double>(x.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

namespace {

template <class Job>
void parallel_for(std::size_t n, int workers, Job&& job) {
    std::atomic<std::size_t> next{0};
    const auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) job(i);
    };
    const int extra = std::max(0, std::min<int>(workers, static_cast<int>(n)) - 1);
    std::vector<std::thread> pool;
    for (int w = 0; w < extra; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace

ExperimentOutput run_experiment(const AppConfig& c) {
    c.validate();
    const ExperimentPlan& plan = c.experiment;
    const double dt = c.simulation.dt_pmu;

    struct TruthJob {
        std::string scenario;
        double delay;
        std::shared_ptr<const SimResult> result;
        std::string error;
    };
    std::vector<TruthJob> truths;
    std::map<std::pair<std::string, double>, std::size_t> truth_index;
    for (const auto& s : plan.scenarios) {
        for (double d : plan.delays) {
            if (truth_index.emplace(std::make_pair(s, d), truths.size()).second) truths.push_back({s, d, {}, {}});
        }
    }
    parallel_for(truths.size(), plan.workers, [&](std::size_t i) {
        try {
            truths[i].result = simulate_truth(c, truths[i].scenario, truths[i].delay);
        } catch (const std::exception& e) {
            truths[i].error = std::string("truth simulation failed: ") + e.what();
        }
    });

    ExperimentOutput out;
    for (const auto& s : plan.scenarios) {
        for (double tve : plan.tve_levels) {
            for (double d : plan.delays) {
                for (int k = 0; k < plan.n_trials; ++k) {
                    TrialResult r;
                    r.scenario = s;
                    r.tve = tve;
                    r.true_delay = d;
                    r.trial = k;
                    r.seed = trial_seed(plan.base_seed, s, tve, d, k);
                    r.true_lag = lag_of(d, dt);
                    out.results.push_back(std::move(r));
                }
            }
        }
    }

    parallel_for(out.results.size(), plan.workers, [&](std::size_t i) {
        TrialResult& r = out.results[i];
        const TruthJob& truth = truths[truth_index.at({r.scenario, r.true_delay})];
        const auto start = std::chrono::steady_clock::now();
        if (!truth.result) {
            r.error = truth.error;
        } else {
            try {
                const PipelineOutput p = run_pipeline(c, truth.result, r.tve, r.seed);
                r.ok = true;
                r.lag_samples = p.delay.lag_samples;
                r.estimated_delay = p.delay.lag_seconds;
                r.peak = p.delay.peak_value;
                r.secondary_peak_ratio = p.delay.secondary_peak_ratio;
                r.rmse_q = p.rmse_q;
                if (r.trial == 0) r.trace = p.delay.trace;
            } catch (const FilterDivergence& e) {
                r.diverged = true;
                r.error = e.what();
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    out.summary = summarize(out.results, dt);
    return out;
}

std::vector<CellSummary> summarize(const std::vector<TrialResult>& results, double dt) {
    std::vector<CellSummary> out;
    std::vector<std::vector<const TrialResult*>> groups;
    for (const auto& r : results) {
        if (out.empty() || out.back().scenario != r.scenario || out.back().tve != r.tve ||
            out.back().true_delay != r.true_delay) {
            CellSummary s;
            s.scenario = r.scenario;
            s.tve = r.tve;
            s.true_delay = r.true_delay;
            out.push_back(s);
            groups.emplace_back();
        }
        groups.back().push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        CellSummary& s = out[g];
        std::vector<double> est, err;
        int within = 0;
        for (const TrialResult* r : groups[g]) {
            ++s.n_trials;
            if (!r->ok) {
                ++s.n_failed;
                continue;
            }
            est.push_back(r->estimated_delay);
            err.push_back(r->abs_error_samples() * dt);
            if (r->abs_error_samples() <= 1) ++within;
        }
        if (est.empty()) {
            s.q1_estimate = s.median_estimate = s.q3_estimate = s.iqr_estimate = s.median_abs_error =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        std::sort(est.begin(), est.end());
        std::sort(err.begin(), err.end());
        s.q1_estimate = quantile_sorted(est, 0.25);
        s.median_estimate = quantile_sorted(est, 0.5);
        s.q3_estimate = quantile_sorted(est, 0.75);
        s.iqr_estimate = s.q3_estimate - s.q1_estimate;
        s.median_abs_error = quantile_sorted(err, 0.5);
        s.fraction_within_one_sample = static_cast<double>(within) / static_cast<double>(est.size());
    }
    return out;
}

namespace {

const std::vector<std::string> kResultHeader{"scenario",   "tve",     "true_delay",      "trial",
                                             "seed",       "status",  "true_lag",        "lag_samples",
                                             "estimated_delay", "abs_error", "peak", "secondary_peak_ratio",
                                             "rmse_q",     "error"};

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

void write_results_csv(const std::vector<TrialResult>& results, std::ostream& os) {
    csv::Writer w(os);
    w.header(kResultHeader);
    for (const auto& r : results) {
        w.field(std::string_view(r.scenario)).field(r.tve).field(r.true_delay).field(r.trial).field(r.seed);
        w.field(r.ok ? "ok" : (r.diverged ? "diverged" : "failed"));
        w.field(r.true_lag).field(r.lag_samples).field(r.estimated_delay);
        w.field(r.abs_error_samples()).field(r.peak).field(r.secondary_peak_ratio).field(r.rmse_q);
        w.field(std::string_view(sanitize(r.error)));
        w.end_row();
    }
}

std::vector<TrialResult> read_results_csv(std::istream& is) {
    const csv::Table t = csv::read(is);
    const auto col = [&](const char* n) { return t.column(n); };
    const std::size_t c_s = col("scenario"), c_tve = col("tve"), c_d = col("true_delay"), c_tr = col("trial"),
                      c_seed = col("seed"), c_st = col("status"), c_tl = col("true_lag"), c_lag = col("lag_samples"),
                      c_est = col("estimated_delay"), c_peak = col("peak"), c_ratio = col("secondary_peak_ratio"),
                      c_rmse = col("rmse_q"), c_err = col("error");
    std::vector<TrialResult> out;
    for (const auto& row : t.rows) {
        TrialResult r;
        r.scenario = row[c_s];
        r.tve = csv::parse_double(row[c_tve]);
        r.true_delay = csv::parse_double(row[c_d]);
        r.trial = static_cast<int>(csv::parse_int(row[c_tr]));
        r.seed = std::stoull(row[c_seed]);
        r.ok = row[c_st] == "ok";
        r.diverged = row[c_st] == "diverged";
        r.true_lag = static_cast<int>(csv::parse_int(row[c_tl]));
        r.lag_samples = static_cast<int>(csv::parse_int(row[c_lag]));
        r.estimated_delay = csv::parse_double(row[c_est]);
        r.peak = csv::parse_double(row[c_peak]);
        r.secondary_peak_ratio = csv::parse_double(row[c_ratio]);
        r.rmse_q = csv::parse_double(row[c_rmse]);
        r.error = row[c_err];
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary_csv(const std::vector<CellSummary>& summary, std::ostream& os) {
    csv::Writer w(os);
    w.header({"scenario", "tve", "true_delay", "n_trials", "n_failed", "q1_estimate", "median_estimate",
              "q3_estimate", "iqr_estimate", "median_abs_error", "fraction_within_one_sample"});
    for (const auto& s : summary) {
        w.field(std::string_view(s.scenario)).field(s.tve).field(s.true_delay).field(s.n_trials).field(s.n_failed);
        w.field(s.q1_estimate).field(s.median_estimate).field(s.q3_estimate).field(s.iqr_estimate);
        w.field(s.median_abs_error).field(s.fraction_within_one_sample);
        w.end_row();
    }
}

void write_timing_csv(const std::vector<TrialResult>& results, std::ostream& os) {
    csv::Writer w(os);
    w.header({"scenario", "tve", "true_delay", "trial", "wall_seconds"});
    for (const auto& r : results) {
        w.field(std::string_view(r.scenario)).field(r.tve).field(r.true_delay).field(r.trial).field(r.wall_seconds);
        w.end_row();
    }
}

void emit_plot_data(const std::vector<TrialResult>& results, const std::string& dir) {
    if (results.empty()) throw std::invalid_argument("no results to plot");
    std::filesystem::create_directories(dir);
    const auto open = [&](const char* name) {
        std::ofstream f(std::filesystem::path(dir) / name);
        if (!f) throw std::runtime_error(std::string("cannot write ") + name);
        return f;
    };

    std::map<std::tuple<std::string, double, double>, std::vector<const TrialResult*>> cells;
    std::vector<std::tuple<std::string, double, double>> order;
    for (const auto& r : results) {
        auto key = std::make_tuple(r.scenario, r.tve, r.true_delay);
        if (!cells.count(key)) order.push_back(key);
        cells[key].push_back(&r);
    }

    {
        std::ofstream f = open("quantiles.csv");
        csv::Writer w(f);
        w.header({"scenario", "tve", "true_delay", "n", "min", "q1", "median", "q3", "max"});
        for (const auto& key : order) {
            std::vector<double> est;
            for (const TrialResult* r : cells[key]) {
                if (r->ok) est.push_back(r->estimated_delay);
            }
            w.field(std::string_view(std::get<0>(key))).field(std::get<1>(key)).field(std::get<2>(key));
            w.field(static_cast<long long>(est.size()));
            if (est.empty()) {
                for (int i = 0; i < 5; ++i) w.field("");
            } else {
                std::sort(est.begin(), est.end());
                w.field(est.front()).field(quantile_sorted(est, 0.25)).field(quantile_sorted(est, 0.5));
                w.field(quantile_sorted(est, 0.75)).field(est.back());
            }
            w.end_row();
        }
    }
    {
        std::ofstream f = open("lag_histogram.csv");
        csv::Writer w(f);
        w.header({"scenario", "tve", "true_delay", "lag_samples", "count"});
        for (const auto& key : order) {
            std::map<int, int> hist;
            for (const TrialResult* r : cells[key]) {
                if (r->ok) ++hist[r->lag_samples];
            }
            for (const auto& [lag, count] : hist) {
                w.field(std::string_view(std::get<0>(key))).field(std::get<1>(key)).field(std::get<2>(key));
                w.field(lag).field(count);
                w.end_row();
            }
        }
    }
    const bool has_traces = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.trace.empty(); });
    if (has_traces) {
        std::ofstream f = open("xcov_examples.csv");
        csv::Writer w(f);
        w.header({"scenario", "tve", "true_delay", "trial", "lag", "correlation"});
        for (const auto& r : results) {
            for (const auto& lv : r.trace) {
                w.field(std::string_view(r.scenario)).field(r.tve).field(r.true_delay).field(r.trial);
                w.field(lv.lag).field(lv.value);
                w.end_row();
            }
        }
    }
}

}  // namespace wtdelay
