#include "wtdelay/plant_controller.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace wtdelay;
using Catch::Matchers::WithinAbs;

namespace {
PlantCtrlParams no_hold() {
    PlantCtrlParams p;
    p.zoh_period = 0.0;
    return p;
}
}  // namespace

TEST_CASE("zero error keeps q at rest") {
    PlantCtrlParams p;
    auto s = make_plant_ctrl_state(p, 0.0, p.v_ref);
    for (int n = 0; n < 10000; ++n) plant_ctrl_step(s, p, p.v_ref, n * 1e-4, 1e-4);
    CHECK(s.q_plant == 0.0);
}

TEST_CASE("voltage step gives the analytic first-order response") {
    const PlantCtrlParams p = no_hold();
    const double eps = 0.02, dt = 1e-3;
    auto s = make_plant_ctrl_state(p, 0.0, p.v_ref);
    double worst = 0.0;
    for (int n = 0; n < 2000; ++n) {
        plant_ctrl_step(s, p, p.v_ref + eps, n * dt, dt);
        const double t = (n + 1) * dt;
        const double oracle = eps * p.k_d * (1.0 - std::exp(-t / p.t_fv));
        worst = std::max(worst, std::abs(s.q_plant - oracle));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("delivered command is the undelayed trajectory shifted by the delay") {
    PlantCtrlParams p;
    p.comm_delay = 0.1;
    PlantCtrlParams p0 = p;
    p0.comm_delay = 0.0;
    const double dt = 1.0 / 6000.0;
    auto s = make_plant_ctrl_state(p, 0.0, 1.0);
    auto s0 = make_plant_ctrl_state(p0, 0.0, 1.0);
    std::vector<double> undelayed, delivered;
    for (int n = 0; n < 6000; ++n) {
        const double t = n * dt;
        const double v = 1.0 + 0.05 * std::sin(2.0 * M_PI * t) + (t > 0.3 ? 0.02 : 0.0);
        delivered.push_back(plant_ctrl_step(s, p, v, t, dt));
        undelayed.push_back(plant_ctrl_step(s0, p0, v, t, dt));
    }
    const int shift = 600;
    for (int n = 0; n < 6000; ++n) {
        const double expected = n >= shift ? undelayed[n - shift] : 0.0;
        REQUIRE(delivered[n] == expected);
    }
}

TEST_CASE("saturation clamps the state") {
    PlantCtrlParams p = no_hold();
    p.saturation_enabled = true;
    p.q_limit = 0.1;
    auto s = make_plant_ctrl_state(p, 0.0, 1.0);
    for (int n = 0; n < 5000; ++n) plant_ctrl_step(s, p, 0.8, n * 1e-3, 1e-3);
    CHECK(s.q_plant == 0.1);
    CHECK(plant_ctrl_rhs(0.1, 0.8, p) == 0.0);
    CHECK(plant_ctrl_rhs(0.1, 1.2, p) < 0.0);
}

TEST_CASE("open-loop predictor") {
    const PlantCtrlParams p;
    const double dt = 1.0 / 60.0;
    std::vector<TimedValue> v;
    for (int k = 0; k < 120; ++k) v.push_back({k * dt, p.v_ref});

    SECTION("constant input decays from q0 exactly") {
        const auto q = open_loop_predict(p, v, 0.3);
        REQUIRE(q.size() == v.size());
        for (std::size_t k = 0; k < q.size(); ++k) {
            CHECK(q[k].t == v[k].t);
            CHECK_THAT(q[k].value, WithinAbs(0.3 * std::exp(-v[k].t / p.t_fv), 1e-14));
        }
        const auto trap = open_loop_predict(p, v, 0.3, PredictorScheme::Trapezoidal);
        CHECK_THAT(trap.back().value, WithinAbs(0.3 * std::exp(-v.back().t / p.t_fv), 1e-4));
    }

    SECTION("held input matches the controller with the same hold and no delay") {
        std::vector<TimedValue> vs;
        for (int k = 0; k < 120; ++k) vs.push_back({k * dt, 1.0 + 0.03 * std::sin(0.2 * k)});
        const auto q = open_loop_predict(p, vs, 0.0);
        auto s = make_plant_ctrl_state(p, 0.0, vs[0].value);
        const int sub = 100;
        const double h = dt / sub;
        for (int k = 0; k + 1 < 120; ++k) {
            for (int j = 0; j < sub; ++j) plant_ctrl_step(s, p, vs[k].value, k * dt + j * h, h);
            CHECK_THAT(s.q_plant, WithinAbs(q[k + 1].value, 1e-10));
        }
    }

    CHECK_THROWS_AS(open_loop_predict(p, {}, 0.0), std::invalid_argument);
}

TEST_CASE("parameter validation") {
    PlantCtrlParams p;
    p.t_fv = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PlantCtrlParams{};
    p.comm_delay = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("constant offset settles within ten time constants") {
    const PlantCtrlParams p = no_hold();
    const double dt = 1e-3;
    const int steps = static_cast<int>(std::lround(10.0 * p.t_fv / dt));
    for (double v : {1.004, 0.997, 1.013}) {
        auto s = make_plant_ctrl_state(p, 0.0, 1.0);
        for (int n = 0; n < steps; ++n) plant_ctrl_step(s, p, v, n * dt, dt);
        const double target = p.k_d * (v - p.v_ref);
        const double residual = std::abs(s.q_plant - target);
        CHECK_THAT(residual, WithinAbs(std::abs(target) * std::exp(-10.0), 1e-12));
        if (std::abs(target) * std::exp(-10.0) <= 1e-6) CHECK(residual <= 1e-6);
    }
}

TEST_CASE("open-loop prediction is deterministic") {
    const PlantCtrlParams p;
    std::vector<TimedValue> v;
    for (int k = 0; k < 600; ++k) v.push_back({k / 60.0, 1.0 + 0.02 * std::sin(0.1 * k) + (k > 300 ? 0.01 : 0.0)});
    for (auto scheme : {PredictorScheme::ExactHold, PredictorScheme::Trapezoidal}) {
        const auto a = open_loop_predict(p, v, 0.01, scheme);
        const auto b = open_loop_predict(p, v, 0.01, scheme);
        for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k].value == b[k].value);
    }
}
