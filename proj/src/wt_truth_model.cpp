#include "wtdelay/wt_truth_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace wtdelay {

void WtParams::validate() const {
    base.validate();
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("turbine parameter must be strictly positive: ") + name);
        }
    };
    positive(rho, "rho");
    positive(b_l, "b_l");
    positive(omega_m_base, "omega_m_base");
    positive(h, "h");
    positive(phi_pm, "phi_pm");
    positive(l_d, "l_d");
    positive(l_q, "l_q");
    positive(c_dc, "c_dc");
    positive(v_dc_ref, "v_dc_ref");
    positive(l_i, "l_i");
    positive(l_g, "l_g");
    positive(c_f, "c_f");
    positive(p_turb_nominal, "p_turb_nominal");
    positive(pitch_rate_limit, "pitch_rate_limit");
    if (n_turbines < 1) throw std::invalid_argument("n_turbines must be >= 1");
    if (r_a < 0.0 || r_i < 0.0 || r_c < 0.0 || r_g < 0.0) {
        throw std::invalid_argument("resistances must be non-negative");
    }
    if (pitch_max < pitch_min) throw std::invalid_argument("pitch_max must be >= pitch_min");
    // The aggregated plant is represented on the sum of the turbine ratings.
    const double aggregated = n_turbines * p_turb_nominal * 1e6;
    if (std::abs(aggregated - base.s_base) > 1e-9 * aggregated) {
        throw std::invalid_argument("s_base must equal n_turbines * p_turb_nominal");
    }
}

FullState::Vector FullState::to_vector() const {
    Vector v;
    v << omega_t, beta, i_sq, i_sd, v_q_msc, v_d_msc, v_dc, i_q_gsc, v_q_gsc, i_d_gsc, v_d_gsc, v_cq, v_cd, i_iq,
        i_id, i_gq, i_gd;
    return v;
}

FullState FullState::from_vector(const Vector& v) {
    FullState s;
    s.omega_t = v[0];
    s.beta = v[1];
    s.i_sq = v[2];
    s.i_sd = v[3];
    s.v_q_msc = v[4];
    s.v_d_msc = v[5];
    s.v_dc = v[6];
    s.i_q_gsc = v[7];
    s.v_q_gsc = v[8];
    s.i_d_gsc = v[9];
    s.v_d_gsc = v[10];
    s.v_cq = v[11];
    s.v_cd = v[12];
    s.i_iq = v[13];
    s.i_id = v[14];
    s.i_gq = v[15];
    s.i_gd = v[16];
    return s;
}

const std::array<std::string_view, FullState::kSize>& FullState::names() {
    static const std::array<std::string_view, kSize> n{
        "omega_t", "beta",    "i_sq",  "i_sd",  "v_q_msc", "v_d_msc", "v_dc", "i_q_gsc", "v_q_gsc",
        "i_d_gsc", "v_d_gsc", "v_cq", "v_cd", "i_iq",    "i_id",    "i_gq", "i_gd"};
    return n;
}

bool FullState::finite() const { return to_vector().allFinite(); }

double cp_curve(double lambda, double beta_deg) {
    if (!(lambda > 0.0)) throw std::invalid_argument("tip-speed ratio must be positive");
    const double inv_li = 1.0 / (lambda + 0.08 * beta_deg) - 0.035 / (beta_deg * beta_deg * beta_deg + 1.0);
    const double cp =
        0.5176 * (116.0 * inv_li - 0.4 * beta_deg - 5.0) * std::exp(-21.0 * inv_li) + 0.0068 * lambda;
    return std::clamp(cp, 0.0, kBetzLimit);
}

double tip_speed_ratio(double omega_t, double v_w, const WtParams& p) {
    return omega_t * p.omega_m_base * p.b_l / v_w;
}

double turbine_power(double omega_t, double v_w, double beta_deg, const WtParams& p) {
    if (v_w <= 0.0) return 0.0;
    const double cp = cp_curve(tip_speed_ratio(omega_t, v_w, p), beta_deg);
    const double watts_per_turbine = 0.5 * p.rho * M_PI * p.b_l * p.b_l * cp * v_w * v_w * v_w;
    return watts_per_turbine * p.n_turbines / p.base.s_base;
}

double turbine_torque(double omega_t, double v_w, double beta_deg, const WtParams& p) {
    if (!(omega_t > kOmegaGuard)) {
        throw ModelBlowUp("turbine speed below guard in torque computation (omega_t = " + std::to_string(omega_t) +
                          ")");
    }
    return turbine_power(omega_t, v_w, beta_deg, p) / omega_t;
}

FullModelEval evaluate_full_model(const FullState& x, DqPair vg, double q_del, double v_w, const WtParams& p) {
    FullModelEval out;
    FullState& dx = out.dx;
    const double wb = p.base.omega_elB;
    const double w = x.omega_t;

    // Drivetrain and PMSG. The MSC applies back-emf feedforward minus its PI
    // output, so each integrator acts on its own axis current.
    const double i_sq_ref = w * w * p.k_opt / p.phi_pm;
    const double e_sq = i_sq_ref - x.i_sq;
    const double e_sd = p.i_sd_ref - x.i_sd;
    const double v_sq = p.phi_pm * w - p.l_d * x.i_sd * w - (x.v_q_msc + p.k_p_msc_il1 * e_sq);
    const double v_sd = p.l_q * x.i_sq * w - (x.v_d_msc + p.k_p_msc_il2 * e_sd);
    dx.i_sq = wb / p.l_q * (-p.r_a * x.i_sq - v_sq - p.l_d * x.i_sd * w + p.phi_pm * w);
    dx.i_sd = wb / p.l_d * (-p.r_a * x.i_sd - v_sd + p.l_q * x.i_sq * w);
    dx.v_q_msc = p.k_i_msc_il1 * e_sq;
    dx.v_d_msc = p.k_i_msc_il2 * e_sd;

    out.t_turbine = turbine_torque(w, v_w, x.beta, p);
    out.t_gen = p.phi_pm * x.i_sq + (p.l_q - p.l_d) * x.i_sd * x.i_sq;
    dx.omega_t = (out.t_turbine - out.t_gen) / (2.0 * p.h);

    double beta_rate = p.k_p_pitch * dx.omega_t + p.k_i_pitch * (w - p.omega_ref_pitch);
    beta_rate = std::clamp(beta_rate, -p.pitch_rate_limit, p.pitch_rate_limit);
    if ((x.beta <= p.pitch_min && beta_rate < 0.0) || (x.beta >= p.pitch_max && beta_rate > 0.0)) beta_rate = 0.0;
    dx.beta = beta_rate;

    out.v_stator = {v_sq, v_sd};
    out.p_pmsg = v_sq * x.i_sq + v_sd * x.i_sd;

    // Grid-side converter in the terminal-voltage frame.
    const double vmag = std::hypot(vg.q, vg.d);
    const double c = vmag > 0.0 ? vg.q / vmag : 1.0;
    const double s = vmag > 0.0 ? vg.d / vmag : 0.0;
    const double ig_q_t = x.i_gq * c + x.i_gd * s;
    const double ig_d_t = -x.i_gq * s + x.i_gd * c;
    out.q_filter = reactive_power(vg, {x.i_gq, x.i_gd});

    const double e_dc = p.v_dc_ref - x.v_dc;
    dx.i_q_gsc = p.k_i_ol1 * e_dc;
    const double i_q_ref = x.i_q_gsc + p.k_p_ol1 * e_dc;
    dx.v_q_gsc = p.k_i_il1 * (i_q_ref - ig_q_t);

    const double e_q = q_del - out.q_filter;
    dx.i_d_gsc = p.k_i_ol2 * e_q - p.i_d_gsc_bias;
    const double i_d_ref = x.i_d_gsc + p.k_p_ol2 * e_q;
    dx.v_d_gsc = p.k_i_il2 * (i_d_ref - ig_d_t);

    const double vi_q_t = x.v_q_gsc + p.k_p_il1 * (i_q_ref - ig_q_t);
    const double vi_d_t = x.v_d_gsc + p.k_p_il2 * (i_d_ref - ig_d_t);
    const double v_iq = vi_q_t * c - vi_d_t * s;
    const double v_id = vi_q_t * s + vi_d_t * c;
    out.v_converter = {v_iq, v_id};

    // LCL filter.
    dx.v_cq = wb / p.c_f * (x.i_iq - x.i_gq + p.c_f * x.v_cd);
    dx.v_cd = wb / p.c_f * (x.i_id - x.i_gd - p.c_f * x.v_cq);
    dx.i_iq = wb / p.l_i * (v_iq - x.v_cq - (p.r_i + p.r_c) * x.i_iq + p.l_i * x.i_id + p.r_c * x.i_gq);
    dx.i_id = wb / p.l_i * (v_id - x.v_cd - (p.r_i + p.r_c) * x.i_id - p.l_i * x.i_iq + p.r_c * x.i_gd);
    dx.i_gq = wb / p.l_g * (x.v_cq - vg.q - (p.r_g + p.r_c) * x.i_gq + p.l_g * x.i_gd + p.r_c * x.i_iq);
    dx.i_gd = wb / p.l_g * (x.v_cd - vg.d - (p.r_g + p.r_c) * x.i_gd - p.l_g * x.i_gq + p.r_c * x.i_id);

    out.p_gsc = v_iq * x.i_iq + v_id * x.i_id;
    dx.v_dc = (out.p_pmsg - out.p_gsc) / (p.c_dc * x.v_dc);
    return out;
}

FullState full_derivatives(const FullState& x, DqPair grid_v, double q_plant_delivered, double v_w,
                           const WtParams& params) {
    const FullState dx = evaluate_full_model(x, grid_v, q_plant_delivered, v_w, params).dx;
    if (!std::isfinite(dx.omega_t) || !std::isfinite(dx.beta)) throw ModelBlowUp("non-finite drivetrain derivative");
    if (!std::isfinite(dx.i_sq) || !std::isfinite(dx.i_sd)) throw ModelBlowUp("non-finite PMSG stator derivative");
    if (!std::isfinite(dx.v_q_msc) || !std::isfinite(dx.v_d_msc)) throw ModelBlowUp("non-finite MSC derivative");
    if (!std::isfinite(dx.v_dc)) throw ModelBlowUp("non-finite DC-link derivative");
    if (!std::isfinite(dx.i_q_gsc) || !std::isfinite(dx.v_q_gsc) || !std::isfinite(dx.i_d_gsc) ||
        !std::isfinite(dx.v_d_gsc)) {
        throw ModelBlowUp("non-finite GSC controller derivative");
    }
    if (!std::isfinite(dx.v_cq) || !std::isfinite(dx.v_cd) || !std::isfinite(dx.i_iq) || !std::isfinite(dx.i_id) ||
        !std::isfinite(dx.i_gq) || !std::isfinite(dx.i_gd)) {
        throw ModelBlowUp("non-finite LCL filter derivative");
    }
    return dx;
}

}  // namespace wtdelay
