#include "wtdelay/delay_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wtdelay {

std::vector<LagValue> cross_covariance(const std::vector<double>& a, const std::vector<double>& b, int lag_min,
                                       int lag_max) {
    const auto n = static_cast<int>(a.size());
    if (a.size() != b.size()) throw std::invalid_argument("cross_covariance needs equal-length series");
    if (n < 2) throw std::invalid_argument("cross_covariance needs at least two samples");
    if (lag_min > lag_max) throw std::invalid_argument("empty lag range");
    if (lag_max >= n || -lag_min >= n) throw std::invalid_argument("lag range exceeds series length");

    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    const auto flat = [n](const std::vector<double>& x, double m) {
        double s = 0.0;
        for (double v : x) s += (v - m) * (v - m);
        return !(s / n > 0.0);
    };
    if (flat(a, ma) || flat(b, mb)) throw FlatSignalError("series has zero variance; no delay is observable");

    std::vector<LagValue> out;
    out.reserve(static_cast<std::size_t>(lag_max - lag_min + 1));
    for (int tau = lag_min; tau <= lag_max; ++tau) {
        const int k0 = std::max(0, -tau);
        const int k1 = std::min(n, n - tau);
        double s = 0.0;
        for (int k = k0; k < k1; ++k) s += (a[k] - ma) * (b[k + tau] - mb);
        out.push_back({tau, s / (k1 - k0)});
    }
    return out;
}

std::vector<LagValue> cross_correlation(const std::vector<double>& a, const std::vector<double>& b, int lag_min,
                                        int lag_max) {
    // Same argument checks and flat-series error as the covariance.
    cross_covariance(a, b, 0, 0);
    const auto n = static_cast<int>(a.size());
    if (lag_min > lag_max) throw std::invalid_argument("empty lag range");
    if (lag_max >= n || -lag_min >= n) throw std::invalid_argument("lag range exceeds series length");

    std::vector<LagValue> out;
    out.reserve(static_cast<std::size_t>(lag_max - lag_min + 1));
    for (int tau = lag_min; tau <= lag_max; ++tau) {
        const int k0 = std::max(0, -tau);
        const int k1 = std::min(n, n - tau);
        const int m = k1 - k0;
        double ma = 0.0, mb = 0.0;
        for (int k = k0; k < k1; ++k) {
            ma += a[k];
            mb += b[k + tau];
        }
        ma /= m;
        mb /= m;
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (int k = k0; k < k1; ++k) {
            const double x = a[k] - ma;
            const double y = b[k + tau] - mb;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        const double norm = std::sqrt(saa) * std::sqrt(sbb);
        out.push_back({tau, norm > 0.0 ? sab / norm : 0.0});
    }
    return out;
}

DelayEstimate estimate_delay(const std::vector<double>& q_hat, const std::vector<double>& q_pre, double dt,
                             std::pair<double, double> window) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (window.first > window.second) throw std::invalid_argument("delay window is reversed");
    const int lo = static_cast<int>(std::ceil(window.first / dt - 1e-9));
    const int hi = static_cast<int>(std::floor(window.second / dt + 1e-9));
    if (hi >= static_cast<int>(q_hat.size()) || -lo >= static_cast<int>(q_hat.size())) {
        throw std::invalid_argument("delay window exceeds series length");
    }

    DelayEstimate est;
    est.search_window = {lo, hi};
    est.covariance = cross_covariance(q_pre, q_hat, lo, hi);
    est.trace = cross_correlation(q_pre, q_hat, lo, hi);
    const auto& c = est.trace;

    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i].value > c[best].value) best = i;
    }
    est.lag_samples = c[best].lag;
    est.lag_seconds = est.lag_samples * dt;
    est.peak_correlation = c[best].value;
    est.peak_value = est.covariance[best].value;

    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i == best) continue;
        const bool left = i == 0 || c[i].value >= c[i - 1].value;
        const bool right = i + 1 == c.size() || c[i].value >= c[i + 1].value;
        if (left && right) second = std::max(second, c[i].value);
    }
    est.secondary_peak_ratio =
        std::isfinite(second) && est.peak_correlation != 0.0 ? second / est.peak_correlation : 0.0;
    return est;
}

}  // namespace wtdelay
