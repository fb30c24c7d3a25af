#pragma once

// Thevenin equivalent of the external network and the scripted disturbances
// that stand in for the network events seen at the point of connection.

#include "wtdelay/model_core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace wtdelay {

struct TheveninGrid {
    double e_th = 1.0;      // pu
    double theta_th = 0.0;  // rad
    double r_th = 0.01;     // pu
    double x_th = 0.1;      // pu

    void validate() const;
};

enum class EventKind { None, ThreePhaseFault, SinglePhaseFault, ForcedOscillation, LoadLoss, LineLoss };

std::string_view to_string(EventKind kind);
/// Accepts the enum names and the short preset tags (3P, 1P, FO, LoL, LiL).
EventKind parse_event_kind(std::string_view name);

struct ScenarioEvent {
    std::string name = "none";
    EventKind kind = EventKind::None;
    double t_start = 0.0;   // s
    double duration = 0.0;  // s, only used by the faults
    double retained_voltage = 0.4;  // pu, fault source magnitude while active
    double osc_amplitude = 0.02;    // relative source ripple
    double osc_frequency = 0.1;     // Hz
    double e_step = 0.03;           // pu, load loss source step
    double x_multiplier = 1.5;      // line loss impedance scale

    void validate() const;
};

/// Named presets of the five studied scenarios plus "none".
ScenarioEvent scenario_preset(std::string_view name);
const std::vector<std::string>& scenario_preset_names();

/// Source magnitude and impedance in effect at time t.
struct SourceState {
    double e_mag;
    double r;
    double x;
};

SourceState source_state(double t, const ScenarioEvent& event, const TheveninGrid& grid);

/// True while a fault is applied, i.e. t in [t_start, t_start + duration).
bool event_active(double t, const ScenarioEvent& event);

struct GridBoundary {
    DqPair v;
    double theta;
};

/// PCC voltage of the Thevenin source carrying the plant injection i_pcc:
/// v = E e^{i theta_th} + (r_th + i x_th) i_pcc.
GridBoundary grid_boundary(double t, const ScenarioEvent& event, const TheveninGrid& grid, DqPair i_pcc);

}  // namespace wtdelay
