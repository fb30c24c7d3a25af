#include "wtdelay/plant_controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wtdelay {

void PlantCtrlParams::validate() const {
    if (!(t_fv > 0.0)) throw std::invalid_argument("plant controller t_fv must be positive");
    if (!(zoh_period >= 0.0)) throw std::invalid_argument("plant controller zoh_period must be >= 0");
    if (!(comm_delay >= 0.0)) throw std::invalid_argument("plant controller comm_delay must be >= 0");
    if (!(dz_half_width >= 0.0)) throw std::invalid_argument("dead zone half width must be >= 0");
    if (saturation_enabled && !(q_limit > 0.0)) throw std::invalid_argument("q_limit must be positive");
}

namespace {

double clamp_q(double q, const PlantCtrlParams& p) {
    return p.saturation_enabled ? std::clamp(q, -p.q_limit, p.q_limit) : q;
}

}  // namespace

double plant_ctrl_rhs(double q_plant, double v_held, const PlantCtrlParams& p) {
    const double dq = (dead_zone(v_held - p.v_ref, p.dz_half_width) * p.k_d - q_plant) / p.t_fv;
    if (p.saturation_enabled) {
        if ((q_plant >= p.q_limit && dq > 0.0) || (q_plant <= -p.q_limit && dq < 0.0)) return 0.0;
    }
    return dq;
}

PlantCtrlState make_plant_ctrl_state(const PlantCtrlParams& params, double q0, double v_initial) {
    params.validate();
    return PlantCtrlState{q0, ZeroOrderHold(params.zoh_period, v_initial), DelayLine(params.comm_delay, q0)};
}

double plant_ctrl_step(PlantCtrlState& s, const PlantCtrlParams& p, double v_meas, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("plant controller step needs dt > 0");
    const double v = s.zoh.update(t, v_meas);
    const double delivered = s.delay.write_read(t, s.q_plant);

    const double q = s.q_plant;
    const double k1 = plant_ctrl_rhs(q, v, p);
    const double k2 = plant_ctrl_rhs(q + 0.5 * dt * k1, v, p);
    const double k3 = plant_ctrl_rhs(q + 0.5 * dt * k2, v, p);
    const double k4 = plant_ctrl_rhs(q + dt * k3, v, p);
    s.q_plant = clamp_q(q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), p);
    return delivered;
}

std::vector<TimedValue> open_loop_predict(const PlantCtrlParams& p, const std::vector<TimedValue>& v_meas, double q0,
                                          PredictorScheme scheme) {
    p.validate();
    if (v_meas.empty()) throw std::invalid_argument("open_loop_predict needs a non-empty series");

    std::vector<TimedValue> out;
    out.reserve(v_meas.size());
    double q = clamp_q(q0, p);
    out.push_back({v_meas.front().t, q});
    for (std::size_t k = 0; k + 1 < v_meas.size(); ++k) {
        const double h = v_meas[k + 1].t - v_meas[k].t;
        if (!(h > 0.0)) throw std::invalid_argument("open_loop_predict needs strictly increasing times");
        switch (scheme) {
        case PredictorScheme::ExactHold: {
            const double target = dead_zone(v_meas[k].value - p.v_ref, p.dz_half_width) * p.k_d;
            const double a = std::exp(-h / p.t_fv);
            q = a * q + (1.0 - a) * target;
            break;
        }
        case PredictorScheme::Trapezoidal: {
            const double f0 = plant_ctrl_rhs(q, v_meas[k].value, p);
            const double q_star = q + h * f0;
            const double f1 = plant_ctrl_rhs(q_star, v_meas[k + 1].value, p);
            q = q + 0.5 * h * (f0 + f1);
            break;
        }
        }
        q = clamp_q(q, p);
        out.push_back({v_meas[k + 1].t, q});
    }
    return out;
}

}  // namespace wtdelay
