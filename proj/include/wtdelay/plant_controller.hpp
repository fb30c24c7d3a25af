#pragma once

// Power-plant reactive controller: a first-order lag on the dead-zoned
// voltage error, fed by a zero-order-held measurement, whose command reaches
// the turbine through a transport delay.

#include "wtdelay/model_core.hpp"

#include <vector>

namespace wtdelay {

struct PlantCtrlParams {
    double t_fv = 0.2;            // s
    double k_d = -5.0;            // pu q / pu v (negative: droop absorbs on overvoltage)
    double v_ref = 1.0;           // pu
    double dz_half_width = 0.0;   // pu, 0 disables the dead zone
    double zoh_period = 1.0 / 60.0;
    double comm_delay = 0.0;      // s
    bool saturation_enabled = false;
    double q_limit = 1.0;         // pu, symmetric

    void validate() const;
};

/// Right-hand side dq/dt given the (already held) measured voltage magnitude.
/// With saturation enabled, the derivative is cut when the state sits on a
/// limit and is pushed outward.
double plant_ctrl_rhs(double q_plant, double v_held, const PlantCtrlParams& params);

struct PlantCtrlState {
    double q_plant = 0.0;
    ZeroOrderHold zoh;
    DelayLine delay;
};

/// State initialized at a steady point: q_plant = q0, the hold primed with
/// `v_initial`, and the delay line primed so that it outputs q0 during warm-up.
PlantCtrlState make_plant_ctrl_state(const PlantCtrlParams& params, double q0, double v_initial);

/// Advances the controller from t to t + dt (classical RK4 on the held input)
/// and returns the command delivered downstream at time t, i.e. q_plant
/// delayed by comm_delay.
double plant_ctrl_step(PlantCtrlState& state, const PlantCtrlParams& params, double v_meas, double t,
                       double dt);

struct TimedValue {
    double t = 0.0;
    double value = 0.0;
};

enum class PredictorScheme {
    ExactHold,    // exact discretization with the input held over each interval
    Trapezoidal,  // explicit trapezoidal (Heun) rule
};

/// Open-loop replay of the controller over a measured voltage-magnitude
/// series, with no hold and no transport delay. Output shares the input
/// timestamps.
std::vector<TimedValue> open_loop_predict(const PlantCtrlParams& params, const std::vector<TimedValue>& v_meas,
                                          double q0, PredictorScheme scheme = PredictorScheme::ExactHold);

}  // namespace wtdelay
