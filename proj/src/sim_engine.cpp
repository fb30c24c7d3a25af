#include "wtdelay/sim_engine.hpp"

#include "wtdelay/csv.hpp"
#include "wtdelay/reduced_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace wtdelay {

void SimConfig::validate() const {
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
    if (!(dt_sim > 0.0)) throw std::invalid_argument("dt_sim must be positive");
    if (!(dt_pmu > 0.0)) throw std::invalid_argument("dt_pmu must be positive");
    if (dt_sim > dt_pmu) throw std::invalid_argument("dt_sim must not exceed dt_pmu");
    if (t_end < dt_pmu) throw std::invalid_argument("t_end must cover at least one reporting interval");
    if (!(comm_delay >= 0.0)) throw std::invalid_argument("comm_delay must be >= 0");
    if (!(wind_speed > 0.0)) throw std::invalid_argument("wind_speed must be positive");
    scenario.validate();
}

long long SimConfig::steps_per_report() const {
    const double ratio = dt_pmu / dt_sim;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-6 * ratio) return std::max(1LL, static_cast<long long>(nearest));
    return static_cast<long long>(std::ceil(ratio));
}

double SimConfig::effective_dt_sim() const { return dt_pmu / static_cast<double>(steps_per_report()); }

std::size_t SimConfig::sample_count() const {
    const double ratio = t_end / dt_pmu;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * ratio) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::floor(ratio));
}

namespace {

// Newton unknowns: the full state without the pitch angle, plus q_plant.
constexpr int kEqSize = static_cast<int>(FullState::kSize);
using EqVector = Eigen::Matrix<double, kEqSize, 1>;
using EqMatrix = Eigen::Matrix<double, kEqSize, kEqSize>;
constexpr int kPitchIndex = 1;
constexpr int kQIndex = kPitchIndex;  // q_plant occupies the slot the pitch angle vacates

DqPair thevenin_voltage(const SourceState& src, double theta_th, DqPair i) {
    const DqPair e = rotate_frame({src.e_mag, 0.0}, theta_th);
    return {e.q + src.r * i.q - src.x * i.d, e.d + src.r * i.d + src.x * i.q};
}

struct EqProblem {
    const SimConfig& cfg;
    const WtParams& p;
    const PlantCtrlParams& ctrl;
    const TheveninGrid& grid;
    SourceState src;

    FullState unpack(const EqVector& y) const {
        FullState::Vector v = y;
        v[kPitchIndex] = p.pitch_min;
        return FullState::from_vector(v);
    }

    EqVector pack(const FullState& x, double q) const {
        EqVector y = x.to_vector();
        y[kQIndex] = q;
        return y;
    }

    EqVector residual(const EqVector& y) const {
        const FullState x = unpack(y);
        const double q = y[kQIndex];
        const DqPair v = thevenin_voltage(src, grid.theta_th, {x.i_gq, x.i_gd});
        EqVector f = full_derivatives(x, v, q, cfg.wind_speed, p).to_vector();
        f[kQIndex] = plant_ctrl_rhs(q, v.magnitude(), ctrl);
        return f;
    }

    EqMatrix jacobian(const EqVector& y) const {
        EqMatrix j;
        for (int k = 0; k < kEqSize; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(y[k]));
            EqVector yp = y, ym = y;
            yp[k] += h;
            ym[k] -= h;
            j.col(k) = (residual(yp) - residual(ym)) / (2.0 * h);
        }
        return j;
    }
};

double mppt_speed(const SimConfig& cfg, const WtParams& p) {
    // Torque balance t_turbine(w) = k_opt w^2 with i_sd = 0, by bisection.
    const auto g = [&](double w) { return turbine_torque(w, cfg.wind_speed, p.pitch_min, p) - p.k_opt * w * w; };
    double lo = 0.05, hi = 3.0;
    if (g(lo) * g(hi) > 0.0) throw std::runtime_error("no MPPT operating point for the configured wind speed");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

FullState initial_guess(const EqProblem& prob) {
    const WtParams& p = prob.p;
    FullState x;
    x.omega_t = mppt_speed(prob.cfg, p);
    x.beta = p.pitch_min;
    x.i_sq = x.omega_t * x.omega_t * p.k_opt / p.phi_pm;
    x.i_sd = p.i_sd_ref;
    x.v_q_msc = p.r_a * x.i_sq;
    x.v_d_msc = p.r_a * x.i_sd;
    x.v_dc = p.v_dc_ref;

    const double power = x.omega_t * p.phi_pm * x.i_sq - p.r_a * x.i_sq * x.i_sq;
    const DqPair i_g = rotate_frame({power / prob.src.e_mag, 0.0}, prob.grid.theta_th);
    LclVariables known;
    known.i_g = i_g;
    known.v_g = thevenin_voltage(prob.src, prob.grid.theta_th, i_g);
    const LclVariables lcl = solve_lcl(GscGains::from(p), LclClosure::Converter, known);
    const double theta = std::atan2(known.v_g.d, known.v_g.q);
    const DqPair ig_t = rotate_frame(i_g, -theta);
    const DqPair vi_t = rotate_frame(lcl.v_i, -theta);
    x.i_q_gsc = ig_t.q;
    x.v_q_gsc = vi_t.q;
    x.i_d_gsc = ig_t.d;
    x.v_d_gsc = vi_t.d;
    x.v_cq = lcl.v_c.q;
    x.v_cd = lcl.v_c.d;
    x.i_iq = lcl.i_i.q;
    x.i_id = lcl.i_i.d;
    x.i_gq = i_g.q;
    x.i_gd = i_g.d;
    return x;
}

struct NewtonOutcome {
    EqVector y;
    double max_residual;
    int iterations;
    bool converged;
};

NewtonOutcome damped_newton(const EqProblem& prob, EqVector y) {
    constexpr double kTol = 1e-10;
    EqVector f = prob.residual(y);
    double norm = f.norm();
    int it = 0;
    for (; it < 60 && f.cwiseAbs().maxCoeff() > kTol; ++it) {
        const EqMatrix j = prob.jacobian(y);
        const EqVector step = j.fullPivLu().solve(-f);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            const EqVector trial = y + lambda * step;
            EqVector ft;
            try {
                ft = prob.residual(trial);
            } catch (const ModelBlowUp&) {
                continue;
            }
            if (ft.allFinite() && ft.norm() < norm) {
                y = trial;
                f = ft;
                norm = ft.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    const double res = f.cwiseAbs().maxCoeff();
    return {y, res, it, res <= kTol};
}

}  // namespace

Equilibrium find_equilibrium(const SimConfig& cfg, const WtParams& p, const PlantCtrlParams& ctrl,
                             const TheveninGrid& grid) {
    const EqProblem prob{cfg, p, ctrl, grid, source_state(0.0, cfg.scenario, grid)};
    const FullState guess = initial_guess(prob);
    const DqPair v0 = thevenin_voltage(prob.src, grid.theta_th, {guess.i_gq, guess.i_gd});
    const double q0 = dead_zone(v0.magnitude() - ctrl.v_ref, ctrl.dz_half_width) * ctrl.k_d;

    NewtonOutcome out = damped_newton(prob, prob.pack(guess, q0));
    bool preroll = false;
    if (!out.converged) {
        // Fallback: let the dynamics settle from the guess with heavier
        // plant-loop filtering, then polish with Newton again.
        PlantCtrlParams slow = ctrl;
        slow.t_fv = std::max(ctrl.t_fv, 1.0);
        FullState::Vector x = prob.unpack(out.y).to_vector();
        double q = out.y[kQIndex];
        const double dt = cfg.effective_dt_sim();
        const auto steps = static_cast<long long>(5.0 / dt);
        for (long long n = 0; n < steps; ++n) {
            const FullState xs = FullState::from_vector(x);
            const DqPair v = thevenin_voltage(prob.src, grid.theta_th, {xs.i_gq, xs.i_gd});
            const double qd = q;
            q += dt * plant_ctrl_rhs(q, v.magnitude(), slow);
            x = rk4_step(
                [&](double, const FullState::Vector& xv) {
                    const FullState s = FullState::from_vector(xv);
                    const DqPair vg = thevenin_voltage(prob.src, grid.theta_th, {s.i_gq, s.i_gd});
                    return full_derivatives(s, vg, qd, cfg.wind_speed, p).to_vector();
                },
                x, n * dt, dt);
        }
        out = damped_newton(prob, prob.pack(FullState::from_vector(x), q));
        preroll = true;
    }
    if (!out.converged) {
        std::ostringstream msg;
        msg << "initialization failed: Newton residual " << out.max_residual;
        throw std::runtime_error(msg.str());
    }
    return {prob.unpack(out.y), out.y[kQIndex], out.max_residual, out.iterations, preroll};
}

std::vector<Complex> closed_loop_eigenvalues(const Equilibrium& eq, const SimConfig& cfg, const WtParams& p,
                                             const PlantCtrlParams& ctrl, const TheveninGrid& grid) {
    const EqProblem prob{cfg, p, ctrl, grid, source_state(0.0, cfg.scenario, grid)};
    const EqMatrix j = prob.jacobian(prob.pack(eq.x, eq.q_plant));
    Eigen::EigenSolver<EqMatrix> solver(j, false);
    std::vector<Complex> out;
    for (int k = 0; k < kEqSize; ++k) out.push_back(solver.eigenvalues()[k]);
    return out;
}

double rk4_amplification(Complex z) {
    return std::abs(1.0 + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))));
}

double rk4_stable_step(const std::vector<Complex>& eigenvalues) {
    double bound = std::numeric_limits<double>::infinity();
    for (const Complex& l : eigenvalues) {
        if (l.real() >= 0.0 || std::abs(l) == 0.0) continue;
        // |R(h l)| <= 1 holds on [0, h*] along each ray; bisect for h*.
        double lo = 0.0, hi = 4.0 / std::abs(l);
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            (rk4_amplification(mid * l) <= 1.0 ? lo : hi) = mid;
        }
        bound = std::min(bound, lo);
    }
    return bound;
}

SimResult run_simulation(const SimConfig& cfg, const WtParams& p, const PlantCtrlParams& ctrl_in,
                         const TheveninGrid& grid) {
    cfg.validate();
    p.validate();
    grid.validate();
    PlantCtrlParams ctrl = ctrl_in;
    ctrl.comm_delay = cfg.comm_delay;
    ctrl.validate();

    SimResult result;
    SimDiagnostics& diag = result.diagnostics;
    const double dt = cfg.effective_dt_sim();
    diag.dt_sim = dt;

    const Equilibrium eq = find_equilibrium(cfg, p, ctrl, grid);
    diag.initial_max_derivative = eq.max_derivative;
    diag.newton_iterations = eq.iterations;
    diag.used_preroll = eq.used_preroll;

    if (cfg.check_stability) {
        double max_abs = 0.0;
        double abscissa = -std::numeric_limits<double>::infinity();
        const std::vector<Complex> eigs = closed_loop_eigenvalues(eq, cfg, p, ctrl, grid);
        for (const Complex& l : eigs) {
            max_abs = std::max(max_abs, std::abs(l));
            abscissa = std::max(abscissa, l.real());
        }
        diag.fastest_time_constant = max_abs > 0.0 ? 1.0 / max_abs : std::numeric_limits<double>::infinity();
        diag.spectral_abscissa = abscissa;
        diag.rk4_step_bound = rk4_stable_step(eigs);
        if (dt > kRk4StepMargin * diag.rk4_step_bound) {
            std::ostringstream msg;
            msg << "integration step " << dt << " s exceeds the RK4 stability bound " << diag.rk4_step_bound
                << " s (margin " << kRk4StepMargin << ")";
            throw std::runtime_error(msg.str());
        }
    }

    const std::size_t n_samples = cfg.sample_count();
    const long long spr = cfg.steps_per_report();
    const long long last_step = static_cast<long long>(n_samples - 1) * spr;

    TruthLog& log = result.log;
    log.times.reserve(n_samples);
    log.states.reserve(n_samples);
    log.q_plant_true.reserve(n_samples);
    log.q_plant_delivered.reserve(n_samples);
    log.pcc_v.reserve(n_samples);
    log.pcc_i.reserve(n_samples);
    log.theta.reserve(n_samples);
    log.e_th.reserve(n_samples);

    FullState::Vector x = eq.x.to_vector();
    const SourceState src0 = source_state(0.0, cfg.scenario, grid);
    PlantCtrlState pc = make_plant_ctrl_state(ctrl, eq.q_plant,
                                              thevenin_voltage(src0, grid.theta_th, {eq.x.i_gq, eq.x.i_gd}).magnitude());

    for (long long n = 0;; ++n) {
        const double t = static_cast<double>(n) * dt;
        const FullState xs = FullState::from_vector(x);
        const SourceState src_now = source_state(t, cfg.scenario, grid);
        const DqPair v_now = thevenin_voltage(src_now, grid.theta_th, {xs.i_gq, xs.i_gd});

        const double q_before = pc.q_plant;
        const double delivered = plant_ctrl_step(pc, ctrl, v_now.magnitude(), t, dt);

        if (n % spr == 0) {
            log.times.push_back(static_cast<double>(n / spr) * cfg.dt_pmu);
            log.states.push_back(xs);
            log.q_plant_true.push_back(q_before);
            log.q_plant_delivered.push_back(delivered);
            log.pcc_v.push_back(v_now);
            log.pcc_i.push_back({xs.i_gq, xs.i_gd});
            log.theta.push_back(std::atan2(v_now.d, v_now.q));
            log.e_th.push_back(src_now.e_mag);
            if (!xs.finite() || !std::isfinite(q_before) || !std::isfinite(delivered)) {
                throw ModelBlowUp("non-finite value in truth log at t = " + std::to_string(t));
            }
        }
        if (n == last_step) break;

        // Sources are held at their mid-step value so event edges fall on step
        // boundaries.
        const SourceState src_mid = source_state(t + 0.5 * dt, cfg.scenario, grid);
        x = rk4_step(
            [&](double, const FullState::Vector& xv) {
                const FullState s = FullState::from_vector(xv);
                const DqPair vg = thevenin_voltage(src_mid, grid.theta_th, {s.i_gq, s.i_gd});
                if (!cfg.track_diagnostics) return full_derivatives(s, vg, delivered, cfg.wind_speed, p).to_vector();
                const FullModelEval ev = evaluate_full_model(s, vg, delivered, cfg.wind_speed, p);
                ++diag.derivative_evaluations;
                const double energy = p.c_dc * s.v_dc * ev.dx.v_dc - (ev.p_pmsg - ev.p_gsc);
                diag.max_energy_residual = std::max(diag.max_energy_residual, std::abs(energy));
                const double q_ref = vg.d * s.i_gq - vg.q * s.i_gd;
                diag.max_qfilter_residual = std::max(diag.max_qfilter_residual, std::abs(ev.q_filter - q_ref));
                if (!ev.dx.finite()) throw ModelBlowUp("non-finite derivative at t = " + std::to_string(t));
                return ev.dx.to_vector();
            },
            x, t, dt);
    }
    return result;
}

void write_truth_csv(const TruthLog& log, std::ostream& os) {
    csv::Writer w(os);
    std::vector<std::string> header{"t"};
    for (auto n : FullState::names()) header.emplace_back(n);
    for (const char* n : {"q_plant_true", "q_plant_delivered", "v_pcc_q", "v_pcc_d", "i_pcc_q", "i_pcc_d", "theta",
                          "e_th"}) {
        header.emplace_back(n);
    }
    w.header(header);
    for (std::size_t k = 0; k < log.size(); ++k) {
        w.field(log.times[k]);
        const FullState::Vector v = log.states[k].to_vector();
        for (int j = 0; j < v.size(); ++j) w.field(v[j]);
        w.field(log.q_plant_true[k])
            .field(log.q_plant_delivered[k])
            .field(log.pcc_v[k].q)
            .field(log.pcc_v[k].d)
            .field(log.pcc_i[k].q)
            .field(log.pcc_i[k].d)
            .field(log.theta[k])
            .field(log.e_th[k]);
        w.end_row();
    }
}

}  // namespace wtdelay
