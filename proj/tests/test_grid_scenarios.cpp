#include "wtdelay/grid_scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace wtdelay;
using Catch::Matchers::WithinAbs;

TEST_CASE("open-circuit Thevenin source") {
    TheveninGrid g;
    g.theta_th = 0.3;
    const auto b = grid_boundary(1.0, scenario_preset("none"), g, {0.0, 0.0});
    CHECK_THAT(b.v.magnitude(), WithinAbs(g.e_th, 1e-15));
    CHECK_THAT(b.theta, WithinAbs(0.3, 1e-15));
}

TEST_CASE("impedance drop uses (r + jx) i") {
    TheveninGrid g;
    const std::complex<double> i(0.6, -0.2);
    const auto b = grid_boundary(0.0, scenario_preset("none"), g, DqPair::from_complex(i));
    const std::complex<double> oracle = g.e_th + std::complex<double>(g.r_th, g.x_th) * i;
    CHECK_THAT(b.v.q, WithinAbs(oracle.real(), 1e-15));
    CHECK_THAT(b.v.d, WithinAbs(oracle.imag(), 1e-15));
}

TEST_CASE("three-phase fault window") {
    const TheveninGrid g;
    const auto ev = scenario_preset("3P");
    CHECK(source_state(4.999, ev, g).e_mag == 1.0);
    CHECK(source_state(5.0, ev, g).e_mag == 0.4);
    CHECK(source_state(5.0999, ev, g).e_mag == 0.4);
    CHECK(source_state(5.1, ev, g).e_mag == 1.0);
    CHECK(event_active(5.05, ev));
    CHECK_FALSE(event_active(5.1, ev));
    CHECK(source_state(5.05, scenario_preset("1P"), g).e_mag == 0.8);
}

TEST_CASE("persistent steps and oscillation") {
    const TheveninGrid g;
    CHECK(source_state(4.0, scenario_preset("LoL"), g).e_mag == 1.0);
    CHECK(source_state(30.0, scenario_preset("LoL"), g).e_mag == 1.03);
    CHECK(source_state(4.0, scenario_preset("LiL"), g).x == g.x_th);
    CHECK_THAT(source_state(30.0, scenario_preset("LiL"), g).x, WithinAbs(1.5 * g.x_th, 1e-15));

    const auto fo = scenario_preset("FO");
    CHECK_THAT(source_state(2.5, fo, g).e_mag, WithinAbs(1.02, 1e-12));   // quarter period of 0.1 Hz
    CHECK_THAT(source_state(7.5, fo, g).e_mag, WithinAbs(0.98, 1e-12));
    CHECK_THAT(source_state(10.0, fo, g).e_mag, WithinAbs(1.0, 1e-12));
}

TEST_CASE("preset names and parsing") {
    CHECK(scenario_preset_names().size() == 5);
    for (const auto& n : scenario_preset_names()) CHECK_NOTHROW(scenario_preset(n).validate());
    CHECK(parse_event_kind("ThreePhaseFault") == EventKind::ThreePhaseFault);
    CHECK(parse_event_kind(to_string(EventKind::LineLoss)) == EventKind::LineLoss);
    CHECK_THROWS_AS(scenario_preset("2P"), std::invalid_argument);
    TheveninGrid g;
    g.x_th = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
