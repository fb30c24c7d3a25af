#include "wtdelay/grid_scenarios.hpp"

#include <cmath>
#include <stdexcept>

namespace wtdelay {

namespace {
constexpr double kEventSlack = 1e-9;
}

void TheveninGrid::validate() const {
    if (!(x_th > 0.0)) throw std::invalid_argument("Thevenin reactance must be positive");
    if (!(e_th > 0.0)) throw std::invalid_argument("Thevenin source magnitude must be positive");
    if (!(r_th >= 0.0)) throw std::invalid_argument("Thevenin resistance must be non-negative");
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::None: return "None";
    case EventKind::ThreePhaseFault: return "ThreePhaseFault";
    case EventKind::SinglePhaseFault: return "SinglePhaseFault";
    case EventKind::ForcedOscillation: return "ForcedOscillation";
    case EventKind::LoadLoss: return "LoadLoss";
    case EventKind::LineLoss: return "LineLoss";
    }
    return "None";
}

EventKind parse_event_kind(std::string_view name) {
    if (name == "None" || name == "none") return EventKind::None;
    if (name == "ThreePhaseFault" || name == "3P") return EventKind::ThreePhaseFault;
    if (name == "SinglePhaseFault" || name == "1P") return EventKind::SinglePhaseFault;
    if (name == "ForcedOscillation" || name == "FO") return EventKind::ForcedOscillation;
    if (name == "LoadLoss" || name == "LoL") return EventKind::LoadLoss;
    if (name == "LineLoss" || name == "LiL") return EventKind::LineLoss;
    throw std::invalid_argument("unknown scenario event kind: " + std::string(name));
}

void ScenarioEvent::validate() const {
    if (!(t_start >= 0.0)) throw std::invalid_argument("event t_start must be >= 0");
    if (!(duration >= 0.0)) throw std::invalid_argument("event duration must be >= 0");
    if (!(retained_voltage > 0.0)) throw std::invalid_argument("fault retained voltage must be positive");
    if (!(osc_frequency >= 0.0)) throw std::invalid_argument("oscillation frequency must be >= 0");
    if (!(x_multiplier > 0.0)) throw std::invalid_argument("line loss impedance multiplier must be positive");
}

ScenarioEvent scenario_preset(std::string_view name) {
    ScenarioEvent e;
    e.name = std::string(name);
    e.kind = parse_event_kind(name);
    switch (e.kind) {
    case EventKind::None: break;
    case EventKind::ThreePhaseFault:
        e.t_start = 5.0;
        e.duration = 0.1;
        e.retained_voltage = 0.4;
        break;
    case EventKind::SinglePhaseFault:
        e.t_start = 5.0;
        e.duration = 0.1;
        e.retained_voltage = 0.8;
        break;
    case EventKind::ForcedOscillation:
        e.t_start = 0.0;
        e.osc_amplitude = 0.02;
        e.osc_frequency = 0.1;
        break;
    case EventKind::LoadLoss:
        e.t_start = 5.0;
        e.e_step = 0.03;
        break;
    case EventKind::LineLoss:
        e.t_start = 5.0;
        e.x_multiplier = 1.5;
        break;
    }
    return e;
}

const std::vector<std::string>& scenario_preset_names() {
    static const std::vector<std::string> names{"3P", "1P", "FO", "LoL", "LiL"};
    return names;
}

bool event_active(double t, const ScenarioEvent& ev) {
    return t >= ev.t_start - kEventSlack && t < ev.t_start + ev.duration - kEventSlack;
}

SourceState source_state(double t, const ScenarioEvent& ev, const TheveninGrid& g) {
    SourceState s{g.e_th, g.r_th, g.x_th};
    const bool started = t >= ev.t_start - kEventSlack;
    switch (ev.kind) {
    case EventKind::None: break;
    case EventKind::ThreePhaseFault:
    case EventKind::SinglePhaseFault:
        if (event_active(t, ev)) s.e_mag = ev.retained_voltage * g.e_th;
        break;
    case EventKind::ForcedOscillation:
        if (started) {
            s.e_mag = g.e_th * (1.0 + ev.osc_amplitude * std::sin(2.0 * M_PI * ev.osc_frequency * (t - ev.t_start)));
        }
        break;
    case EventKind::LoadLoss:
        if (started) s.e_mag = g.e_th + ev.e_step;
        break;
    case EventKind::LineLoss:
        if (started) s.x = g.x_th * ev.x_multiplier;
        break;
    }
    return s;
}

GridBoundary grid_boundary(double t, const ScenarioEvent& ev, const TheveninGrid& g, DqPair i_pcc) {
    if (!(t >= 0.0)) throw std::invalid_argument("grid_boundary needs t >= 0");
    const SourceState s = source_state(t, ev, g);
    const DqPair e = rotate_frame({s.e_mag, 0.0}, g.theta_th);
    const DqPair v{e.q + s.r * i_pcc.q - s.x * i_pcc.d, e.d + s.r * i_pcc.d + s.x * i_pcc.q};
    return {v, std::atan2(v.d, v.q)};
}

}  // namespace wtdelay
