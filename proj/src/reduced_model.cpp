#include "wtdelay/reduced_model.hpp"

#include <cmath>
#include <stdexcept>

namespace wtdelay {

Vector6 ReducedState::to_vector() const {
    Vector6 v;
    v << i_q_gsc, v_q_gsc, i_d_gsc, v_d_gsc, q_plant, sigma_id_gsc;
    return v;
}

ReducedState ReducedState::from_vector(const Vector6& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

const std::array<std::string_view, 6>& ReducedState::names() {
    static const std::array<std::string_view, 6> n{"i_q_gsc", "v_q_gsc", "i_d_gsc", "v_d_gsc", "q_plant",
                                                   "sigma_id_gsc"};
    return n;
}

void InputVector::validate() const {
    if (!std::isfinite(theta) || !std::isfinite(v_gq) || !std::isfinite(v_gd) || !std::isfinite(i_gq) ||
        !std::isfinite(i_gd)) {
        throw std::invalid_argument("input vector has non-finite entries");
    }
    if (v_gq == 0.0 && v_gd == 0.0) throw std::invalid_argument("input terminal voltage is zero");
}

namespace {

// Column order of the 6x10 LCL coefficient matrix.
enum Col { VCQ, VCD, IIQ, IID, IGQ, IGD, VIQ, VID, VGQ, VGD, kCols };
using LclMatrix = Eigen::Matrix<double, 6, kCols>;
using LclVector = Eigen::Matrix<double, kCols, 1>;

LclMatrix lcl_matrix(const GscGains& g) {
    LclMatrix m = LclMatrix::Zero();
    // C_f dv_c/dt rows (divided by omega_elB / C_f).
    m(0, IIQ) = 1.0;
    m(0, IGQ) = -1.0;
    m(0, VCD) = g.c_f;
    m(1, IID) = 1.0;
    m(1, IGD) = -1.0;
    m(1, VCQ) = -g.c_f;
    // Converter-side inductor rows.
    m(2, VIQ) = 1.0;
    m(2, VCQ) = -1.0;
    m(2, IIQ) = -(g.r_i + g.r_c);
    m(2, IID) = g.l_i;
    m(2, IGQ) = g.r_c;
    m(3, VID) = 1.0;
    m(3, VCD) = -1.0;
    m(3, IID) = -(g.r_i + g.r_c);
    m(3, IIQ) = -g.l_i;
    m(3, IGD) = g.r_c;
    // Grid-side inductor rows.
    m(4, VCQ) = 1.0;
    m(4, VGQ) = -1.0;
    m(4, IGQ) = -(g.r_g + g.r_c);
    m(4, IGD) = g.l_g;
    m(4, IIQ) = g.r_c;
    m(5, VCD) = 1.0;
    m(5, VGD) = -1.0;
    m(5, IGD) = -(g.r_g + g.r_c);
    m(5, IGQ) = -g.l_g;
    m(5, IID) = g.r_c;
    return m;
}

LclVector pack(const LclVariables& v) {
    LclVector x;
    x << v.v_c.q, v.v_c.d, v.i_i.q, v.i_i.d, v.i_g.q, v.i_g.d, v.v_i.q, v.v_i.d, v.v_g.q, v.v_g.d;
    return x;
}

LclVariables unpack(const LclVector& x) {
    return {{x[VCQ], x[VCD]}, {x[IIQ], x[IID]}, {x[IGQ], x[IGD]}, {x[VIQ], x[VID]}, {x[VGQ], x[VGD]}};
}

std::array<int, 6> unknown_columns(LclClosure closure) {
    switch (closure) {
    case LclClosure::Measurement: return {VCQ, VCD, IIQ, IID, VGQ, VGD};
    case LclClosure::Forward: return {VCQ, VCD, IIQ, IID, IGQ, IGD};
    case LclClosure::Converter: return {VCQ, VCD, IIQ, IID, VIQ, VID};
    }
    throw std::invalid_argument("unknown LCL closure");
}

}  // namespace

LclVariables solve_lcl(const GscGains& gains, LclClosure closure, const LclVariables& known) {
    const LclMatrix m = lcl_matrix(gains);
    const auto unknown = unknown_columns(closure);
    LclVector x = pack(known);

    Matrix6 a;
    for (int j = 0; j < 6; ++j) {
        a.col(j) = m.col(unknown[j]);
        x[unknown[j]] = 0.0;
    }
    // Move the known columns to the right-hand side.
    const Vector6 b = -(m * x);
    const Vector6 y = solve_linear_6(a, b).y;
    for (int j = 0; j < 6; ++j) x[unknown[j]] = y[j];
    return unpack(x);
}

double lcl_residual(const GscGains& gains, const LclVariables& vars) {
    return (lcl_matrix(gains) * pack(vars)).cwiseAbs().maxCoeff();
}

DqPair terminal_frame_current(const InputVector& u) { return rotate_frame(u.i(), -u.theta); }

DqPair converter_voltage_terminal(const ReducedState& x, const InputVector& u, const GscGains& g) {
    const DqPair ig_t = terminal_frame_current(u);
    const double q_filter = reactive_power(u.v(), u.i());
    return {x.v_q_gsc + g.k_p_il1 * (x.i_q_gsc - ig_t.q),
            x.v_d_gsc + g.k_p_il2 * (x.i_d_gsc + g.k_p_ol2 * (x.q_plant - q_filter) - ig_t.d)};
}

ReducedState f_s(const ReducedState& x, const InputVector& u, double dt, const PlantCtrlParams& ctrl,
                 const GscGains& g) {
    if (!(dt > 0.0)) throw std::invalid_argument("f_s needs dt > 0");
    const DqPair ig_t = terminal_frame_current(u);
    const double q_filter = reactive_power(u.v(), u.i());
    const double q_err = x.q_plant - q_filter;
    const double v_term = std::hypot(u.v_gq, u.v_gd);

    ReducedState next = x;
    // i_q_gsc and the bias have no deterministic dynamics.
    next.v_q_gsc += dt * g.k_i_il1 * (x.i_q_gsc - ig_t.q);
    next.i_d_gsc += dt * (g.k_i_ol2 * q_err - x.sigma_id_gsc);
    next.v_d_gsc += dt * g.k_i_il2 * (x.i_d_gsc + g.k_p_ol2 * q_err - ig_t.d);
    next.q_plant += dt * (dead_zone(v_term - ctrl.v_ref, ctrl.dz_half_width) * ctrl.k_d - x.q_plant) / ctrl.t_fv;
    return next;
}

MeasurementPrediction h_s_detailed(const ReducedState& x, const InputVector& u, const GscGains& g) {
    const DqPair vi_t = converter_voltage_terminal(x, u, g);
    LclVariables known;
    known.v_i = rotate_frame(vi_t, u.theta);
    known.i_g = u.i();
    const LclVariables solved = solve_lcl(g, LclClosure::Measurement, known);
    return {solved.v_g, solved};
}

ReducedState steady_state_backsolve(const InputVector& u, const GscGains& g) {
    LclVariables known;
    known.v_g = u.v();
    known.i_g = u.i();
    const LclVariables solved = solve_lcl(g, LclClosure::Converter, known);
    const DqPair vi_t = rotate_frame(solved.v_i, -u.theta);
    const DqPair ig_t = terminal_frame_current(u);

    ReducedState x;
    x.i_q_gsc = ig_t.q;
    x.v_q_gsc = vi_t.q;
    x.i_d_gsc = ig_t.d;
    x.v_d_gsc = vi_t.d;
    x.q_plant = reactive_power(u.v(), u.i());
    x.sigma_id_gsc = 0.0;
    return x;
}

}  // namespace wtdelay
