#pragma once

// Experiment configuration file (JSON). Every section is optional; missing
// fields keep their defaults and unknown fields are rejected.

#include "wtdelay/grid_scenarios.hpp"
#include "wtdelay/plant_controller.hpp"
#include "wtdelay/pmu_sensor.hpp"
#include "wtdelay/sim_engine.hpp"
#include "wtdelay/ukf.hpp"
#include "wtdelay/wt_truth_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wtdelay {

struct EstimatorConfig {
    double window_min = 0.0;  // s
    double window_max = 2.0;  // s
    PredictorScheme scheme = PredictorScheme::ExactHold;

    void validate() const;
};

struct ExperimentPlan {
    std::vector<std::string> scenarios{"3P", "1P", "FO", "LoL", "LiL"};
    std::vector<double> tve_levels{0.03, 0.01, 0.001};
    std::vector<double> delays{0.05, 0.1, 0.5};
    int n_trials = 100;
    std::uint64_t base_seed = 1;
    std::string output_dir = "results";
    int workers = 1;

    void validate() const;
    std::size_t cell_count() const { return scenarios.size() * tve_levels.size() * delays.size(); }
};

struct AppConfig {
    WtParams turbine;
    PlantCtrlParams controller;
    TheveninGrid grid;
    SimConfig simulation;
    NoiseModel pmu;
    UkfConfig ukf;
    EstimatorConfig estimator;
    ExperimentPlan experiment;
    /// Per-name scenario definitions layered over the built-in presets.
    std::map<std::string, ScenarioEvent> scenarios;

    /// Preset `name` with any override from the file applied.
    ScenarioEvent scenario(const std::string& name) const;
    void validate() const;
};

AppConfig parse_config(const nlohmann::json& j);
AppConfig load_config(const std::string& path);
nlohmann::json to_json(const AppConfig& config);

}  // namespace wtdelay
