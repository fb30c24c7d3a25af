#include "wtdelay/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace wtdelay {

using nlohmann::json;

void EstimatorConfig::validate() const {
    if (!(window_min >= 0.0) || !(window_max >= window_min)) {
        throw std::invalid_argument("estimator window must satisfy 0 <= min <= max");
    }
}

void ExperimentPlan::validate() const {
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (scenarios.empty() || tve_levels.empty() || delays.empty()) {
        throw std::invalid_argument("experiment plan needs at least one scenario, TVE level and delay");
    }
    for (double d : delays) {
        if (!(d >= 0.0)) throw std::invalid_argument("delays must be >= 0");
    }
    for (double t : tve_levels) {
        if (!(t >= 0.0)) throw std::invalid_argument("TVE levels must be >= 0");
    }
}

ScenarioEvent AppConfig::scenario(const std::string& name) const {
    const auto it = scenarios.find(name);
    if (it != scenarios.end()) return it->second;
    return scenario_preset(name);
}

void AppConfig::validate() const {
    turbine.validate();
    controller.validate();
    grid.validate();
    simulation.validate();
    pmu.validate();
    ukf.validate();
    estimator.validate();
    experiment.validate();
    for (const auto& [name, ev] : scenarios) ev.validate();
    for (const auto& name : experiment.scenarios) scenario(name);
}

namespace {

// Field tables shared by the reader and the writer.
template <class P, class F>
void fields(P& p, F&& f) {
    if constexpr (std::is_same_v<std::remove_const_t<P>, WtParams>) {
        f("s_base", p.base.s_base);
        f("v_base", p.base.v_base);
        f("omega_elB", p.base.omega_elB);
        f("n_turbines", p.n_turbines);
        f("p_turb_nominal", p.p_turb_nominal);
        f("rho", p.rho);
        f("b_l", p.b_l);
        f("omega_m_base", p.omega_m_base);
        f("h", p.h);
        f("k_p_pitch", p.k_p_pitch);
        f("k_i_pitch", p.k_i_pitch);
        f("omega_ref_pitch", p.omega_ref_pitch);
        f("pitch_rate_limit", p.pitch_rate_limit);
        f("pitch_min", p.pitch_min);
        f("pitch_max", p.pitch_max);
        f("phi_pm", p.phi_pm);
        f("r_a", p.r_a);
        f("l_d", p.l_d);
        f("l_q", p.l_q);
        f("k_opt", p.k_opt);
        f("i_sd_ref", p.i_sd_ref);
        f("k_i_msc_il1", p.k_i_msc_il1);
        f("k_i_msc_il2", p.k_i_msc_il2);
        f("k_p_msc_il1", p.k_p_msc_il1);
        f("k_p_msc_il2", p.k_p_msc_il2);
        f("c_dc", p.c_dc);
        f("v_dc_ref", p.v_dc_ref);
        f("k_i_ol1", p.k_i_ol1);
        f("k_p_ol1", p.k_p_ol1);
        f("k_i_il1", p.k_i_il1);
        f("k_p_il1", p.k_p_il1);
        f("k_i_ol2", p.k_i_ol2);
        f("k_p_ol2", p.k_p_ol2);
        f("k_i_il2", p.k_i_il2);
        f("k_p_il2", p.k_p_il2);
        f("i_d_gsc_bias", p.i_d_gsc_bias);
        f("r_i", p.r_i);
        f("r_c", p.r_c);
        f("r_g", p.r_g);
        f("l_i", p.l_i);
        f("l_g", p.l_g);
        f("c_f", p.c_f);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, PlantCtrlParams>) {
        f("t_fv", p.t_fv);
        f("k_d", p.k_d);
        f("v_ref", p.v_ref);
        f("dz_half_width", p.dz_half_width);
        f("zoh_period", p.zoh_period);
        f("comm_delay", p.comm_delay);
        f("saturation_enabled", p.saturation_enabled);
        f("q_limit", p.q_limit);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, TheveninGrid>) {
        f("e_th", p.e_th);
        f("theta_th", p.theta_th);
        f("r_th", p.r_th);
        f("x_th", p.x_th);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, SimConfig>) {
        f("t_end", p.t_end);
        f("dt_sim", p.dt_sim);
        f("dt_pmu", p.dt_pmu);
        f("wind_speed", p.wind_speed);
        f("check_stability", p.check_stability);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, NoiseModel>) {
        f("tve_v", p.tve_v);
        f("tve_i", p.tve_i);
        f("floor_magnitude", p.floor_magnitude);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, EstimatorConfig>) {
        f("window_min", p.window_min);
        f("window_max", p.window_max);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, ExperimentPlan>) {
        f("scenarios", p.scenarios);
        f("tve_levels", p.tve_levels);
        f("delays", p.delays);
        f("n_trials", p.n_trials);
        f("base_seed", p.base_seed);
        f("output_dir", p.output_dir);
        f("workers", p.workers);
    } else if constexpr (std::is_same_v<std::remove_const_t<P>, ScenarioEvent>) {
        f("t_start", p.t_start);
        f("duration", p.duration);
        f("retained_voltage", p.retained_voltage);
        f("osc_amplitude", p.osc_amplitude);
        f("osc_frequency", p.osc_frequency);
        f("e_step", p.e_step);
        f("x_multiplier", p.x_multiplier);
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
    if (!j.is_object()) throw std::invalid_argument("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw std::invalid_argument("unknown config field '" + section + "." + key + "'");
    }
}

template <class P>
void read_section(const json& root, const char* name, P& p, std::set<std::string> extra = {}) {
    if (!root.contains(name)) return;
    const json& j = root.at(name);
    std::set<std::string> allowed = std::move(extra);
    fields(p, [&](const char* key, auto&) { allowed.insert(key); });
    check_keys(j, allowed, name);
    fields(p, [&](const char* key, auto& v) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(v);
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("bad value for '") + name + "." + key + "': " + e.what());
        }
    });
}

template <class P>
json write_section(const P& p) {
    json j = json::object();
    fields(p, [&](const char* key, const auto& v) { j[key] = v; });
    return j;
}

Vector6 vector6(const json& j, const char* what) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 6) throw std::invalid_argument(std::string(what) + " must have 6 entries");
    return Eigen::Map<const Vector6>(v.data());
}

std::vector<double> as_list(const Vector6& v) { return {v.data(), v.data() + 6}; }

PredictorScheme parse_scheme(const std::string& s) {
    if (s == "exact_hold") return PredictorScheme::ExactHold;
    if (s == "trapezoidal") return PredictorScheme::Trapezoidal;
    throw std::invalid_argument("unknown predictor scheme '" + s + "'");
}

}  // namespace

AppConfig parse_config(const json& root) {
    AppConfig c;
    check_keys(root,
               {"turbine", "plant_controller", "grid", "simulation", "pmu", "ukf", "estimator", "experiment",
                "scenarios"},
               "<root>");
    read_section(root, "turbine", c.turbine);
    read_section(root, "plant_controller", c.controller);
    read_section(root, "grid", c.grid);
    read_section(root, "simulation", c.simulation);
    read_section(root, "pmu", c.pmu);
    read_section(root, "estimator", c.estimator, {"predictor"});
    read_section(root, "experiment", c.experiment);
    if (root.contains("estimator") && root.at("estimator").contains("predictor")) {
        c.estimator.scheme = parse_scheme(root.at("estimator").at("predictor").get<std::string>());
    }

    if (root.contains("ukf")) {
        const json& u = root.at("ukf");
        check_keys(u, {"gamma", "kappa", "beta", "q_diag", "r_diag", "r_inflation", "r_floor", "p0_diag",
                       "trace_bound"},
                   "ukf");
        c.ukf.gamma = u.value("gamma", c.ukf.gamma);
        c.ukf.kappa = u.value("kappa", c.ukf.kappa);
        c.ukf.beta = u.value("beta", c.ukf.beta);
        c.ukf.r_inflation = u.value("r_inflation", c.ukf.r_inflation);
        c.ukf.r_floor = u.value("r_floor", c.ukf.r_floor);
        c.ukf.trace_bound = u.value("trace_bound", c.ukf.trace_bound);
        if (u.contains("q_diag")) c.ukf.q_diag = vector6(u.at("q_diag"), "ukf.q_diag");
        if (u.contains("p0_diag")) c.ukf.p0_diag = vector6(u.at("p0_diag"), "ukf.p0_diag");
        if (u.contains("r_diag") && !u.at("r_diag").is_null()) {
            const auto r = u.at("r_diag").get<std::vector<double>>();
            if (r.size() != 2) throw std::invalid_argument("ukf.r_diag must have 2 entries");
            c.ukf.r_diag = Vector2(r[0], r[1]);
        }
    }

    if (root.contains("scenarios")) {
        const json& s = root.at("scenarios");
        if (!s.is_object()) throw std::invalid_argument("config section 'scenarios' must be an object");
        for (const auto& [name, body] : s.items()) {
            ScenarioEvent ev;
            if (body.contains("kind")) {
                ev.kind = parse_event_kind(body.at("kind").get<std::string>());
            } else {
                ev = scenario_preset(name);
            }
            ev.name = name;
            json section{{name, body}};
            section[name].erase("kind");
            read_section(section, name.c_str(), ev);
            c.scenarios[name] = ev;
        }
    }
    c.validate();
    return c;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const AppConfig& c) {
    json j;
    j["turbine"] = write_section(c.turbine);
    j["plant_controller"] = write_section(c.controller);
    j["grid"] = write_section(c.grid);
    j["simulation"] = write_section(c.simulation);
    j["pmu"] = write_section(c.pmu);
    j["estimator"] = write_section(c.estimator);
    j["estimator"]["predictor"] = c.estimator.scheme == PredictorScheme::ExactHold ? "exact_hold" : "trapezoidal";
    j["experiment"] = write_section(c.experiment);
    json u;
    u["gamma"] = c.ukf.gamma;
    u["kappa"] = c.ukf.kappa;
    u["beta"] = c.ukf.beta;
    u["q_diag"] = as_list(c.ukf.q_diag);
    u["p0_diag"] = as_list(c.ukf.p0_diag);
    u["r_diag"] = c.ukf.r_diag ? json(std::vector<double>{(*c.ukf.r_diag)[0], (*c.ukf.r_diag)[1]}) : json(nullptr);
    u["r_inflation"] = c.ukf.r_inflation;
    u["r_floor"] = c.ukf.r_floor;
    u["trace_bound"] = c.ukf.trace_bound;
    j["ukf"] = u;
    json s = json::object();
    for (const auto& [name, ev] : c.scenarios) {
        s[name] = write_section(ev);
        s[name]["kind"] = std::string(to_string(ev.kind));
    }
    j["scenarios"] = s;
    return j;
}

}  // namespace wtdelay
