#include "wtdelay/sim_engine.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace wtdelay;
using Catch::Matchers::WithinAbs;

namespace {

double decay_error(double h) {
    double x = 1.0;
    const int steps = static_cast<int>(std::lround(1.0 / h));
    for (int n = 0; n < steps; ++n) x = rk4_step([](double, double y) { return -y; }, x, n * h, h);
    return std::abs(x - std::exp(-1.0));
}

SimResult run(const std::string& scenario, double delay, double t_end, bool diagnostics = false) {
    SimConfig cfg;
    cfg.scenario = scenario_preset(scenario);
    cfg.comm_delay = delay;
    cfg.t_end = t_end;
    cfg.track_diagnostics = diagnostics;
    return run_simulation(cfg, WtParams{}, PlantCtrlParams{}, TheveninGrid{});
}

}  // namespace

TEST_CASE("RK4 on scalar test problems") {
    CHECK(rk4_step([](double, double) { return 0.0; }, 2.5, 0.0, 0.1) == 2.5);

    const double one = rk4_step([](double, double y) { return -y; }, 1.0, 0.0, 0.1);
    CHECK_THAT(one, WithinAbs(std::exp(-0.1), 2.0 * std::pow(0.1, 5) / 120.0));
    CHECK_THAT(one, WithinAbs(0.9048375, 1e-7));

    for (double h : {0.1, 0.05, 0.025}) {
        const double rate = std::log2(decay_error(h) / decay_error(h / 2.0));
        CHECK(rate >= 3.8);
        CHECK(rate <= 4.2);
    }
    CHECK_THROWS_AS(rk4_step([](double, double y) { return y; }, 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("RK4 stability region") {
    CHECK_THAT(rk4_amplification({0.0, 0.0}), WithinAbs(1.0, 1e-15));
    // Real-axis boundary of the classical RK4 region is near -2.785.
    CHECK(rk4_amplification({-2.78, 0.0}) < 1.0);
    CHECK(rk4_amplification({-2.80, 0.0}) > 1.0);
    CHECK_THAT(rk4_stable_step({{-100.0, 0.0}}), WithinAbs(0.02785, 1e-4));
    CHECK_THAT(rk4_stable_step({{-1.0, 0.0}, {-1000.0, 0.0}}), WithinAbs(0.002785, 1e-5));
}

TEST_CASE("sampling grid") {
    SimConfig cfg;
    CHECK(cfg.sample_count() == 3600);
    CHECK(cfg.steps_per_report() * cfg.effective_dt_sim() == Catch::Approx(cfg.dt_pmu).epsilon(1e-12));
    CHECK(cfg.effective_dt_sim() <= cfg.dt_sim);
}

TEST_CASE("three-phase fault run with delay") {
    const SimResult r = run("3P", 0.1, 60.0);
    const TruthLog& log = r.log;
    REQUIRE(log.size() == 3600);
    CHECK(r.diagnostics.initial_max_derivative <= 1e-6);

    for (std::size_t k = 0; k < log.size(); ++k) {
        const bool faulted = k >= 300 && k < 306;
        CHECK(log.e_th[k] == (faulted ? 0.4 : 1.0));
    }
    CHECK(log.pcc_v[300].magnitude() < 0.6);
    CHECK(log.pcc_v[299].magnitude() > 0.9);

    double variation = 0.0;
    for (std::size_t k = 6; k < log.size(); ++k) {
        REQUIRE(log.q_plant_delivered[k] == log.q_plant_true[k - 6]);
        variation = std::max(variation, std::abs(log.q_plant_true[k] - log.q_plant_true[0]));
    }
    for (std::size_t k = 0; k < 6; ++k) CHECK(log.q_plant_delivered[k] == log.q_plant_true[0]);
    CHECK(variation > 0.1);
}

TEST_CASE("conservation diagnostics across a fault") {
    const SimResult r = run("3P", 0.05, 6.0, true);
    CHECK(r.diagnostics.derivative_evaluations > 0);
    CHECK(r.diagnostics.max_energy_residual <= 1e-10);
    CHECK(r.diagnostics.max_qfilter_residual == 0.0);
}

TEST_CASE("undisturbed run stays at its fixed point") {
    const SimResult r = run("none", 0.0, 10.0);
    const TruthLog& log = r.log;
    const FullState::Vector dx =
        full_derivatives(log.states.back(), log.pcc_v.back(), log.q_plant_delivered.back(), SimConfig{}.wind_speed,
                         WtParams{})
            .to_vector();
    CHECK(dx.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("truth runs are deterministic") {
    const SimResult a = run("1P", 0.05, 8.0);
    const SimResult b = run("1P", 0.05, 8.0);
    std::ostringstream sa, sb;
    write_truth_csv(a.log, sa);
    write_truth_csv(b.log, sb);
    CHECK(sa.str() == sb.str());
    for (std::size_t k = 0; k < a.log.size(); ++k) {
        REQUIRE(a.log.states[k].to_vector() == b.log.states[k].to_vector());
    }
}

TEST_CASE("step beyond the stability bound is refused") {
    SimConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt_sim = 1e-3;
    CHECK_THROWS(run_simulation(cfg, WtParams{}, PlantCtrlParams{}, TheveninGrid{}));
}
