#pragma once

// Shared numeric foundations: per-unit bases, dq rotation, dead zone,
// the 6x6 linear solve used by the LCL closures, and the two signal
// buffers (transport delay line and zero-order hold) of the plant loop.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>

namespace wtdelay {

using Complex = std::complex<double>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Raised when a linear system is singular or too ill-conditioned to trust.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double condition_estimate)
        : std::runtime_error(what), condition_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

/// Raised when an integrated model produces non-finite values.
class ModelBlowUp : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PerUnitBase {
    double s_base = 58.0e6;                    // VA
    double v_base = 690.0;                     // V (line-to-line rms)
    double omega_elB = 2.0 * 3.14159265358979323846 * 50.0;  // rad/s

    void validate() const;
};

/// A per-unit quantity expressed on the q (real) and d (imaginary) axes.
/// The complex image is q + i*d.
struct DqPair {
    double q = 0.0;
    double d = 0.0;

    Complex as_complex() const { return {q, d}; }
    static DqPair from_complex(Complex c) { return {c.real(), c.imag()}; }
    double magnitude() const;
    bool finite() const;
};

/// Complex rotation of (q + i d) by e^{i theta}.
DqPair rotate_frame(DqPair x, double theta);

/// Continuous dead zone: zero inside [-half_width, half_width], shifted identity outside.
double dead_zone(double e, double half_width);

/// Solution of a 6x6 system together with the conditioning diagnostics.
struct LinearSolve6 {
    Vector6 y;
    double condition_estimate = 0.0;
};

/// LU with partial pivoting. The infinity-norm condition number
/// ||A|| * ||A^-1|| is checked against `max_condition`.
LinearSolve6 solve_linear_6(const Matrix6& a, const Vector6& b, double max_condition = 1e12);

/// Transport delay realized as sample-and-hold over past writes.
///
/// read(t) returns the value written at the latest time <= t - delay, or the
/// initial value when no such write exists yet. Write times must be
/// non-decreasing.
class DelayLine {
public:
    explicit DelayLine(double delay = 0.0, double initial_value = 0.0);

    void write(double t, double value);
    double read(double t);

    /// Convenience for the usual write-then-read sequence at one instant.
    double write_read(double t, double value) {
        write(t, value);
        return read(t);
    }

    double delay() const noexcept { return delay_; }
    std::size_t buffered() const noexcept { return buffer_.size(); }

private:
    double delay_;
    double initial_;
    double last_write_time_;
    bool has_write_ = false;
    std::deque<std::pair<double, double>> buffer_;
};

/// Samples its input at integer multiples of `period` and holds it in between.
/// A zero period degenerates to a pass-through.
class ZeroOrderHold {
public:
    explicit ZeroOrderHold(double period = 0.0, double initial_value = 0.0);

    /// Returns the held value at time t, sampling `input` if t reached the next
    /// update instant.
    double update(double t, double input);
    /// Forces a sample at t regardless of the period grid (used by engines that
    /// already know they are on an update instant).
    void sample(double t, double input);

    double held() const noexcept { return held_; }
    double period() const noexcept { return period_; }
    double last_sample_time() const noexcept { return last_sample_time_; }

private:
    double period_;
    double held_;
    double last_sample_time_;
    long long next_index_ = 0;
};

}  // namespace wtdelay
