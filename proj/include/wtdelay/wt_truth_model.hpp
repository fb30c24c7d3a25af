#pragma once

// Full-order PMSG wind turbine: aerodynamics, single-mass drivetrain, pitch
// loop, PMSG stator, machine-side and grid-side converter controllers,
// DC link and LCL filter. All electrical quantities are per unit on the
// aggregated plant base; time is in seconds.

#include "wtdelay/model_core.hpp"

#include <array>
#include <cmath>
#include <string_view>

namespace wtdelay {

struct WtParams {
    PerUnitBase base{};
    int n_turbines = 29;
    double p_turb_nominal = 2.0;  // MW

    // Aerodynamics and drivetrain
    double rho = 1.225;        // kg/m^3
    double b_l = 40.0;         // m
    double omega_m_base = 2.0; // rad/s, mechanical speed at 1 pu
    double h = 3.0;            // s

    // Pitch loop (PI on the overspeed, rate and angle limited)
    double k_p_pitch = 10.0;       // deg/pu
    double k_i_pitch = 20.0;       // deg/(pu s)
    double omega_ref_pitch = 1.2;  // pu
    double pitch_rate_limit = 10.0;  // deg/s
    double pitch_min = 0.0;          // deg
    double pitch_max = 45.0;         // deg

    // PMSG
    double phi_pm = 1.0;
    double r_a = 0.01;
    double l_d = 0.4;
    double l_q = 0.4;

    // Machine-side converter
    double k_opt = 0.7134;
    double i_sd_ref = 0.0;
    double k_i_msc_il1 = 50.0;
    double k_i_msc_il2 = 50.0;
    double k_p_msc_il1 = 0.5;
    double k_p_msc_il2 = 0.5;

    // DC link
    double c_dc = 0.05;  // s (stored energy 0.5 c_dc v^2 per unit power)
    double v_dc_ref = 1.0;

    // Grid-side converter
    double k_i_ol1 = -45.0;
    double k_p_ol1 = -2.1;
    double k_i_il1 = 100.0;
    double k_p_il1 = 1.0;
    double k_i_ol2 = -20.0;
    double k_p_ol2 = -1.0;
    double k_i_il2 = 100.0;
    double k_p_il2 = 1.0;
    /// Constant bias subtracted from the i_dGSC integrator derivative. Zero in
    /// normal runs; used to inject a controlled bias.
    double i_d_gsc_bias = 0.0;

    // LCL filter
    double r_i = 0.003;
    double r_c = 0.1;
    double r_g = 0.003;
    double l_i = 0.15;
    double l_g = 8.75e-6 * 2.0 * 3.14159265358979323846 * 50.0;
    double c_f = 0.1;

    void validate() const;
    /// L_g / omega_elB, the grid-side inductor time constant.
    double lcl_grid_time_constant() const { return l_g / base.omega_elB; }
};

/// Gains of the grid-side converter and the LCL constants, which is all the
/// reduced model needs from the turbine.
struct GscGains {
    double k_i_il1, k_p_il1, k_i_ol2, k_p_ol2, k_i_il2, k_p_il2;
    double r_i, r_c, r_g, l_i, l_g, c_f;

    static GscGains from(const WtParams& p) {
        return {p.k_i_il1, p.k_p_il1, p.k_i_ol2, p.k_p_ol2, p.k_i_il2, p.k_p_il2,
                p.r_i,     p.r_c,     p.r_g,     p.l_i,     p.l_g,     p.c_f};
    }
};

struct FullState {
    static constexpr std::size_t kSize = 17;
    using Vector = Eigen::Matrix<double, kSize, 1>;

    double omega_t = 1.0;  // pu
    double beta = 0.0;     // deg
    double i_sq = 0.0, i_sd = 0.0;
    double v_q_msc = 0.0, v_d_msc = 0.0;
    double v_dc = 1.0;
    double i_q_gsc = 0.0, v_q_gsc = 0.0, i_d_gsc = 0.0, v_d_gsc = 0.0;
    double v_cq = 0.0, v_cd = 0.0, i_iq = 0.0, i_id = 0.0, i_gq = 0.0, i_gd = 0.0;

    Vector to_vector() const;
    static FullState from_vector(const Vector& v);
    static const std::array<std::string_view, kSize>& names();
    bool finite() const;
};

/// Betz limit on the power coefficient.
inline constexpr double kBetzLimit = 16.0 / 27.0;
/// Guard on the turbine-speed division in the torque computation.
inline constexpr double kOmegaGuard = 1e-3;

/// Exponential-polynomial power coefficient, clipped to [0, Betz].
double cp_curve(double lambda, double beta_deg);

double tip_speed_ratio(double omega_t, double v_w, const WtParams& params);

/// Aggregated aerodynamic power in per unit.
double turbine_power(double omega_t, double v_w, double beta_deg, const WtParams& params);

/// t_t = p_turb / omega_t in per unit. Throws ModelBlowUp below the speed guard.
double turbine_torque(double omega_t, double v_w, double beta_deg, const WtParams& params);

/// Reactive power delivered at the terminals, v_gd i_gq - v_gq i_gd.
inline double reactive_power(DqPair v, DqPair i) { return v.d * i.q - v.q * i.d; }

/// Full evaluation of the right-hand side plus the intermediate signals the
/// conservation checks need.
struct FullModelEval {
    FullState dx;
    double p_pmsg = 0.0;
    double p_gsc = 0.0;
    double q_filter = 0.0;
    double t_turbine = 0.0;
    double t_gen = 0.0;
    DqPair v_converter;  // v_iq, v_id in the grid frame
    DqPair v_stator;
};

FullModelEval evaluate_full_model(const FullState& x, DqPair grid_v, double q_plant_delivered, double v_w,
                                  const WtParams& params);

/// Stacked time derivative of the full-order model. Throws ModelBlowUp naming
/// the offending block on non-finite output.
FullState full_derivatives(const FullState& x, DqPair grid_v, double q_plant_delivered, double v_w,
                           const WtParams& params);

}  // namespace wtdelay
