#pragma once

// Unscented Kalman filter over the six-state reduced model. The core step is
// written against plain transition/measurement callables so it can be driven
// by synthetic systems as well as by f_s / h_s.

#include "wtdelay/pmu_sensor.hpp"
#include "wtdelay/reduced_model.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wtdelay {

using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

class FilterDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UkfConfig {
    double gamma = 1e-3;
    double kappa = 0.0;
    double beta = 2.0;
    Vector6 q_diag = (Vector6() << 1e-8, 1e-8, 1e-8, 1e-8, 1e-2, 1e-9).finished();
    /// Measurement variances. When unset, derived from the voltage TVE.
    std::optional<Vector2> r_diag;
    /// Multiplier on the TVE-derived variance, absorbing input-side noise.
    double r_inflation = 1.0;
    double r_floor = 1e-12;
    /// Initial state. When unset, back-solved from the first sample.
    std::optional<ReducedState> x0;
    Vector6 p0_diag = Vector6::Constant(1e-4);
    double trace_bound = 1e3;

    static constexpr int n = 6;
    double lambda() const { return gamma * gamma * (n + kappa) - n; }
    void validate() const;
};

struct UkfBelief {
    Vector6 x = Vector6::Zero();
    Matrix6 p = Matrix6::Zero();
};

struct SigmaSet {
    std::array<Vector6, 13> points;
    std::array<double, 13> wm;
    std::array<double, 13> wc;
    /// Diagonal jitter that had to be added before factorizing (0 if none).
    double jitter = 0.0;
};

/// x and x +/- columns of sqrt((n + lambda) P).
SigmaSet sigma_points(const UkfBelief& belief, const UkfConfig& config);

struct Innovation {
    Vector2 nu = Vector2::Zero();
    Matrix2 p_z = Matrix2::Zero();
    bool regularized = false;
    double trace_p = 0.0;
};

struct UkfStepResult {
    UkfBelief belief;
    Innovation innovation;
};

using TransitionFn = std::function<Vector6(const Vector6&)>;
using MeasurementFn = std::function<Vector2(const Vector6&)>;

/// Predict through f, add Q, redraw sigma points from the predicted belief,
/// map through h, add R and correct with z.
UkfStepResult ukf_step(const UkfBelief& belief, const TransitionFn& f, const MeasurementFn& h, const Vector2& z,
                       const Matrix6& q, const Matrix2& r, const UkfConfig& config);

/// Measurement input built from a PMU sample.
InputVector input_from_sample(const PhasorSample& s);

/// Per-axis measurement variance (tve |v|)^2 / 2 times the inflation, floored.
Matrix2 measurement_covariance(const UkfConfig& config, double tve_v, double v_mag);

struct DseRecord {
    double t = 0.0;
    ReducedState x;
    Innovation innovation;
};

struct DseModel {
    PlantCtrlParams ctrl;
    GscGains gains;
    double tve_v = 0.01;
};

/// Filters the whole stream. The first record is the initial belief
/// corrected by the first measurement.
std::vector<DseRecord> run_dse(const std::vector<PhasorSample>& stream, const UkfConfig& config,
                               const DseModel& model);

/// t, the six states, nu_q, nu_d, trace_p
void write_estimate_csv(const std::vector<DseRecord>& records, std::ostream& os);

}  // namespace wtdelay
