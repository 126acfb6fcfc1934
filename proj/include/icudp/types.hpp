#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icudp/errors.hpp"

namespace icudp {

/// Health state id, 1-based: states 1..H. SD/UD are handled separately.
using StateId = int;

enum class Action : std::uint8_t { Keep, Discharge };

enum class TerminalEvent : std::uint8_t {
    DischargedSd,     // successful discharge (no readmission/death in window)
    DischargedUd,     // readmitted or died within the T-day window
    InHospitalDeath,  // died in care; folded into UD probability estimates
    Censored,         // stay truncated; keep-transitions only
};

inline bool is_discharge(TerminalEvent e) {
    return e == TerminalEvent::DischargedSd || e == TerminalEvent::DischargedUd;
}

std::string to_string(TerminalEvent e);
TerminalEvent terminal_event_from_string(const std::string& s);

std::string to_string(Action a);
Action action_from_string(const std::string& s);

/// One ICU stay reduced to its per-period health states plus outcome label.
struct LabeledTrajectory {
    std::string stay_id;
    std::vector<StateId> states;  // x_0 .. x_{L-1}, each in 1..H
    TerminalEvent terminal_event = TerminalEvent::Censored;
    int t_window_days = 30;

    int length() const { return static_cast<int>(states.size()); }
    StateId last_state() const { return states.back(); }
};

void validate_states(const LabeledTrajectory& t, int h);

}  // namespace icudp
