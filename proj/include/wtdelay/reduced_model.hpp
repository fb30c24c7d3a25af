#pragma once

// Six-state reduced model used by the filter: the GSC controller states, the
// plant command and a bias on the i_dGSC integrator. The LCL filter is
// treated as algebraic, closed through a 6x6 linear solve.

#include "wtdelay/model_core.hpp"
#include "wtdelay/plant_controller.hpp"
#include "wtdelay/wt_truth_model.hpp"

#include <array>
#include <string_view>

namespace wtdelay {

struct ReducedState {
    double i_q_gsc = 0.0;
    double v_q_gsc = 0.0;
    double i_d_gsc = 0.0;
    double v_d_gsc = 0.0;
    double q_plant = 0.0;
    double sigma_id_gsc = 0.0;

    Vector6 to_vector() const;
    static ReducedState from_vector(const Vector6& v);
    static const std::array<std::string_view, 6>& names();
};

/// u = [theta, v_gq, v_gd, i_gq, i_gd] as delivered by the PMU.
struct InputVector {
    double theta = 0.0;
    double v_gq = 1.0;
    double v_gd = 0.0;
    double i_gq = 0.0;
    double i_gd = 0.0;

    void validate() const;
    DqPair v() const { return {v_gq, v_gd}; }
    DqPair i() const { return {i_gq, i_gd}; }
};

// ---------------------------------------------------------------------------
// LCL algebraic closure
// ---------------------------------------------------------------------------

/// All ten quantities entering the six steady LCL equations.
struct LclVariables {
    DqPair v_c;
    DqPair i_i;
    DqPair i_g;
    DqPair v_i;
    DqPair v_g;
};

/// Which pair besides (v_c, i_i) is unknown.
enum class LclClosure {
    Measurement,  // solve v_g given v_i and i_g
    Forward,      // solve i_g given v_i and v_g
    Converter,    // solve v_i given v_g and i_g
};

/// Solves the six LCL equations with all derivatives set to zero. The known
/// pair is taken from `known`; the returned struct holds every quantity.
LclVariables solve_lcl(const GscGains& gains, LclClosure closure, const LclVariables& known);

/// Largest absolute bracket of the six LCL equations (pu).
double lcl_residual(const GscGains& gains, const LclVariables& vars);

// ---------------------------------------------------------------------------
// Model functions
// ---------------------------------------------------------------------------

/// Terminal-frame grid currents i'_g = i_g e^{-i theta}.
DqPair terminal_frame_current(const InputVector& u);

/// Converter voltage in the terminal frame from the GSC inner-loop outputs.
DqPair converter_voltage_terminal(const ReducedState& x, const InputVector& u, const GscGains& gains);

/// One forward-Euler step of the reduced dynamics.
ReducedState f_s(const ReducedState& x, const InputVector& u, double dt, const PlantCtrlParams& ctrl,
                 const GscGains& gains);

struct MeasurementPrediction {
    DqPair v_g;
    LclVariables algebraic;
};

MeasurementPrediction h_s_detailed(const ReducedState& x, const InputVector& u, const GscGains& gains);

/// Predicted terminal voltage (v_gq, v_gd).
inline DqPair h_s(const ReducedState& x, const InputVector& u, const GscGains& gains) {
    return h_s_detailed(x, u, gains).v_g;
}

/// Reduced state consistent with a steady operating point at sample u: inner
/// and outer loop errors zero, bias zero, controller voltages from the
/// converter closure.
ReducedState steady_state_backsolve(const InputVector& u, const GscGains& gains);

}  // namespace wtdelay
