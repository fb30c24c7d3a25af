#include "wtdelay/model_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wtdelay {

namespace {
// Slack for comparing sample instants that were produced by repeated
// floating-point arithmetic (n * dt versus t - delay).
constexpr double kTimeSlack = 1e-9;
}  // namespace

void PerUnitBase::validate() const {
    if (!(s_base > 0.0) || !(v_base > 0.0) || !(omega_elB > 0.0)) {
        throw std::invalid_argument("per-unit bases must be strictly positive");
    }
}

double DqPair::magnitude() const { return std::hypot(q, d); }

bool DqPair::finite() const { return std::isfinite(q) && std::isfinite(d); }

DqPair rotate_frame(DqPair x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {x.q * c - x.d * s, x.q * s + x.d * c};
}

double dead_zone(double e, double half_width) {
    if (half_width < 0.0) {
        throw std::invalid_argument("dead zone half width must be non-negative");
    }
    if (std::abs(e) <= half_width) return 0.0;
    return e > 0.0 ? e - half_width : e + half_width;
}

LinearSolve6 solve_linear_6(const Matrix6& a, const Vector6& b, double max_condition) {
    const double norm_a = a.cwiseAbs().rowwise().sum().maxCoeff();
    Eigen::PartialPivLU<Matrix6> lu(a);
    // PartialPivLU does not report singularity; an exactly zero pivot shows up
    // as a zero on the diagonal of U.
    const auto& packed = lu.matrixLU();
    for (int i = 0; i < 6; ++i) {
        if (packed(i, i) == 0.0 || !std::isfinite(packed(i, i))) {
            throw SolverError("6x6 system is singular", std::numeric_limits<double>::infinity());
        }
    }
    const Matrix6 inv = lu.inverse();
    const double norm_inv = inv.cwiseAbs().rowwise().sum().maxCoeff();
    const double cond = norm_a * norm_inv;
    if (!std::isfinite(cond) || cond > max_condition) {
        std::ostringstream msg;
        msg << "6x6 system ill-conditioned (condition estimate " << cond << ")";
        throw SolverError(msg.str(), cond);
    }
    return {lu.solve(b), cond};
}

DelayLine::DelayLine(double delay, double initial_value)
    : delay_(delay), initial_(initial_value), last_write_time_(0.0) {
    if (!(delay >= 0.0) || !std::isfinite(delay)) {
        throw std::invalid_argument("delay must be finite and non-negative");
    }
}

void DelayLine::write(double t, double value) {
    if (has_write_ && t < last_write_time_) {
        throw std::invalid_argument("delay line write times must be non-decreasing");
    }
    has_write_ = true;
    last_write_time_ = t;
    buffer_.emplace_back(t, value);
}

double DelayLine::read(double t) {
    const double target = t - delay_ + kTimeSlack;
    // Reads are monotone, so everything older than the latest qualifying
    // sample can be dropped.
    while (buffer_.size() >= 2 && buffer_[1].first <= target) {
        buffer_.pop_front();
    }
    if (!buffer_.empty() && buffer_.front().first <= target) {
        return buffer_.front().second;
    }
    return initial_;
}

ZeroOrderHold::ZeroOrderHold(double period, double initial_value)
    : period_(period), held_(initial_value), last_sample_time_(-std::numeric_limits<double>::infinity()) {
    if (!(period >= 0.0) || !std::isfinite(period)) {
        throw std::invalid_argument("zero-order hold period must be finite and non-negative");
    }
}

double ZeroOrderHold::update(double t, double input) {
    if (period_ == 0.0) {
        sample(t, input);
        return held_;
    }
    if (t + kTimeSlack >= static_cast<double>(next_index_) * period_) {
        held_ = input;
        last_sample_time_ = t;
        next_index_ = static_cast<long long>(std::floor((t + kTimeSlack) / period_)) + 1;
    }
    return held_;
}

void ZeroOrderHold::sample(double t, double input) {
    held_ = input;
    last_sample_time_ = t;
    if (period_ > 0.0) {
        next_index_ = static_cast<long long>(std::floor((t + kTimeSlack) / period_)) + 1;
    }
}

}  // namespace wtdelay
