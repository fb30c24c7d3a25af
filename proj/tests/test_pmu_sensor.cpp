#include "wtdelay/pmu_sensor.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace wtdelay;

namespace {

TruthLog constant_log(std::size_t n, DqPair v, DqPair i) {
    TruthLog log;
    for (std::size_t k = 0; k < n; ++k) {
        log.times.push_back(static_cast<double>(k) / 60.0);
        log.pcc_v.push_back(v);
        log.pcc_i.push_back(i);
    }
    return log;
}

}  // namespace

TEST_CASE("zero TVE passes phasors through") {
    GaussianSource rng(1);
    const Complex x(0.3, -0.7);
    CHECK(apply_tve_noise(x, 0.0, 1e-6, rng) == x);

    TruthLog log = constant_log(3600, {1.01, 0.05}, {0.8, -0.1});
    const auto s = sample_pmu(log, {0.0, 0.0, 9, 1e-6});
    REQUIRE(s.size() == 3600);
    for (std::size_t k = 0; k < s.size(); ++k) {
        REQUIRE(s[k].t == log.times[k]);
        REQUIRE(s[k].v == log.pcc_v[k].as_complex());
        REQUIRE(s[k].i == log.pcc_i[k].as_complex());
        REQUIRE(s[k].theta == std::arg(log.pcc_v[k].as_complex()));
    }
}

TEST_CASE("empirical RMS TVE and zero mean") {
    const Complex x = std::polar(1.1, 0.4);
    for (double tve : {0.03, 0.01, 0.001}) {
        GaussianSource rng(17);
        const int n = 1000000;
        double acc = 0.0, mq = 0.0, md = 0.0;
        for (int k = 0; k < n; ++k) {
            const Complex e = apply_tve_noise(x, tve, 1e-6, rng) - x;
            acc += std::norm(e);
            mq += e.real();
            md += e.imag();
        }
        const double rms = std::sqrt(acc / n) / std::abs(x);
        CHECK(std::abs(rms - tve) <= 0.01 * tve);
        const double sigma = tve * std::abs(x) / std::sqrt(2.0);
        CHECK(std::abs(mq / n) <= 3.0 * sigma / 1e3);
        CHECK(std::abs(md / n) <= 3.0 * sigma / 1e3);
    }
}

TEST_CASE("zero phasor uses the floor magnitude") {
    GaussianSource rng(2);
    const int n = 100000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += std::norm(apply_tve_noise({0.0, 0.0}, 0.01, 1e-3, rng));
    CHECK(std::abs(std::sqrt(acc / n) - 1e-5) <= 0.02 * 1e-5);
}

TEST_CASE("voltage and current noise are uncorrelated") {
    const DqPair v{1.0, 0.1}, i{0.7, -0.2};
    const std::size_t n = 100000;
    const auto s = sample_pmu(constant_log(n, v, i), {0.01, 0.01, 123, 1e-6});
    std::vector<double> a[2], b[2];
    for (const auto& p : s) {
        a[0].push_back(p.v.real() - v.q);
        a[1].push_back(p.v.imag() - v.d);
        b[0].push_back(p.i.real() - i.q);
        b[1].push_back(p.i.imag() - i.d);
    }
    const auto corr = [](const std::vector<double>& x, const std::vector<double>& y) {
        double mx = 0, my = 0;
        for (std::size_t k = 0; k < x.size(); ++k) mx += x[k], my += y[k];
        mx /= x.size();
        my /= y.size();
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            sxy += (x[k] - mx) * (y[k] - my);
            sxx += (x[k] - mx) * (x[k] - mx);
            syy += (y[k] - my) * (y[k] - my);
        }
        return sxy / std::sqrt(sxx * syy);
    };
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) CHECK(std::abs(corr(a[p], b[q])) < bound);
    }
    CHECK(std::abs(corr(a[0], a[1])) < bound);
}

TEST_CASE("seeded stream follows the documented generator") {
    GaussianSource g(42);
    std::mt19937_64 e(42);
    const auto u = [&] { return (static_cast<double>(e() >> 11) + 0.5) / 9007199254740992.0; };
    for (int k = 0; k < 500; ++k) {
        const double u1 = u(), u2 = u();
        const double r = std::sqrt(-2.0 * std::log(u1));
        REQUIRE(g.next() == r * std::cos(2.0 * M_PI * u2));
        REQUIRE(g.next() == r * std::sin(2.0 * M_PI * u2));
    }

    TruthLog log = constant_log(100, {1.0, 0.0}, {0.5, 0.5});
    const auto s1 = sample_pmu(log, {0.01, 0.02, 5, 1e-6});
    const auto s2 = sample_pmu(log, {0.01, 0.02, 5, 1e-6});
    const auto s3 = sample_pmu(log, {0.01, 0.02, 6, 1e-6});
    bool differs = false;
    for (std::size_t k = 0; k < s1.size(); ++k) {
        REQUIRE(s1[k].v == s2[k].v);
        REQUIRE(s1[k].i == s2[k].i);
        differs = differs || s1[k].v != s3[k].v;
    }
    CHECK(differs);
}

TEST_CASE("noise model validation") {
    CHECK_THROWS_AS(sample_pmu(TruthLog{}, {}), std::invalid_argument);
    NoiseModel m;
    m.tve_v = -0.01;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
