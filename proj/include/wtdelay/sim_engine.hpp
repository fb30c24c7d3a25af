#pragma once

// Fixed-step integration of the coupled turbine + plant controller + grid
// boundary, logging at the PMU reporting rate.

#include "wtdelay/grid_scenarios.hpp"
#include "wtdelay/plant_controller.hpp"
#include "wtdelay/wt_truth_model.hpp"

#include <cmath>
#include <iosfwd>
#include <string>
#include <type_traits>
#include <vector>

namespace wtdelay {

namespace detail {
inline bool all_finite(double v) { return std::isfinite(v); }
template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
    return v.allFinite();
}
}  // namespace detail

/// Classical fourth-order Runge-Kutta step of dx/dt = f(t, x).
template <class Vec, class F>
Vec rk4_step(F&& f, const Vec& x, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step needs dt > 0");
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * dt, Vec(x + (0.5 * dt) * k1));
    const Vec k3 = f(t + 0.5 * dt, Vec(x + (0.5 * dt) * k2));
    const Vec k4 = f(t + dt, Vec(x + dt * k3));
    Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!detail::all_finite(out)) {
        throw ModelBlowUp("integration produced non-finite state at t = " + std::to_string(t));
    }
    return out;
}

struct SimConfig {
    double t_end = 60.0;
    double dt_sim = 1e-5;
    double dt_pmu = 1.0 / 60.0;
    unsigned long long seed = 0;  // carried for bookkeeping; the truth run is noise-free
    double wind_speed = 9.5;      // m/s
    ScenarioEvent scenario{};
    double comm_delay = 0.0;      // s, overrides the controller's value
    bool track_diagnostics = false;
    bool check_stability = true;

    void validate() const;
    /// Integration steps per reporting interval. dt_sim is snapped down so that
    /// the reporting interval is an exact multiple of it.
    long long steps_per_report() const;
    double effective_dt_sim() const;
    /// Number of logged samples, t_end / dt_pmu.
    std::size_t sample_count() const;
};

struct TruthLog {
    std::vector<double> times;
    std::vector<FullState> states;
    std::vector<double> q_plant_true;
    std::vector<double> q_plant_delivered;
    std::vector<DqPair> pcc_v;
    std::vector<DqPair> pcc_i;
    std::vector<double> theta;
    std::vector<double> e_th;  // Thevenin source magnitude in effect

    std::size_t size() const { return times.size(); }
};

struct SimDiagnostics {
    double initial_max_derivative = 0.0;
    int newton_iterations = 0;
    bool used_preroll = false;
    double fastest_time_constant = 0.0;  // 1 / max |eigenvalue| of the linearized loop
    double spectral_abscissa = 0.0;      // max real part of the eigenvalues
    double rk4_step_bound = 0.0;         // largest step keeping every mode inside the RK4 region
    double dt_sim = 0.0;
    std::size_t derivative_evaluations = 0;
    double max_energy_residual = 0.0;    // |C v dv/dt - (p_pmsg - p_gsc)|
    double max_qfilter_residual = 0.0;
};

struct SimResult {
    TruthLog log;
    SimDiagnostics diagnostics;
};

/// Steady operating point of the coupled system before any event.
struct Equilibrium {
    FullState x;
    double q_plant = 0.0;
    double max_derivative = 0.0;
    int iterations = 0;
    bool used_preroll = false;
};

Equilibrium find_equilibrium(const SimConfig& config, const WtParams& params, const PlantCtrlParams& ctrl,
                             const TheveninGrid& grid);

/// Eigenvalues of the finite-difference Jacobian of the closed loop (delay-free)
/// around `eq`, excluding the pitch state.
std::vector<Complex> closed_loop_eigenvalues(const Equilibrium& eq, const SimConfig& config, const WtParams& params,
                                             const PlantCtrlParams& ctrl, const TheveninGrid& grid);

/// |R(z)| of the classical RK4 stability polynomial.
double rk4_amplification(Complex z);

/// Largest step h with |R(h lambda)| <= 1 for every decaying eigenvalue.
double rk4_stable_step(const std::vector<Complex>& eigenvalues);

/// Fraction of rk4_stable_step the integration step may use.
inline constexpr double kRk4StepMargin = 0.8;

SimResult run_simulation(const SimConfig& config, const WtParams& params, const PlantCtrlParams& ctrl,
                         const TheveninGrid& grid);

/// Columnar CSV, one row per reporting instant.
void write_truth_csv(const TruthLog& log, std::ostream& os);

}  // namespace wtdelay
