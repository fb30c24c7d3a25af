#pragma once

// Delay estimation as the lag of peak cross-covariance between the filtered
// plant command and its open-loop prediction.

#include <stdexcept>
#include <utility>
#include <vector>

namespace wtdelay {

class FlatSignalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LagValue {
    int lag = 0;
    double value = 0.0;
};

/// c(tau) = (1 / overlap) sum_k (a_k - mean a)(b_{k+tau} - mean b) for tau in
/// [lag_min, lag_max]. Means are over the full series.
std::vector<LagValue> cross_covariance(const std::vector<double>& a, const std::vector<double>& b, int lag_min,
                                       int lag_max);

/// Pearson coefficient of a_k and b_{k+tau} over each lag's overlap, with
/// segment means and norms. A lag whose overlap is flat in either series
/// scores 0.
std::vector<LagValue> cross_correlation(const std::vector<double>& a, const std::vector<double>& b, int lag_min,
                                        int lag_max);

struct DelayEstimate {
    int lag_samples = 0;
    double lag_seconds = 0.0;
    /// cross_covariance at the selected lag.
    double peak_value = 0.0;
    double peak_correlation = 0.0;
    std::pair<int, int> search_window{0, 0};
    /// Second-highest local maximum of the correlation trace over its global
    /// maximum; 0 with no rival.
    double secondary_peak_ratio = 0.0;
    std::vector<LagValue> trace;       // cross_correlation
    std::vector<LagValue> covariance;  // cross_covariance
};

/// Lag of peak cross_correlation(q_pre, q_hat) over window [w0, w1] seconds.
/// A positive lag means q_hat trails q_pre.
DelayEstimate estimate_delay(const std::vector<double>& q_hat, const std::vector<double>& q_pre, double dt,
                             std::pair<double, double> window = {0.0, 2.0});

}  // namespace wtdelay
