#include "icudp/types.hpp"

namespace icudp {

std::string to_string(TerminalEvent e) {
    switch (e) {
        case TerminalEvent::DischargedSd: return "DISCHARGED_SD";
        case TerminalEvent::DischargedUd: return "DISCHARGED_UD";
        case TerminalEvent::InHospitalDeath: return "IN_HOSPITAL_DEATH";
        case TerminalEvent::Censored: return "CENSORED";
    }
    return "CENSORED";
}

TerminalEvent terminal_event_from_string(const std::string& s) {
    if (s == "DISCHARGED_SD") return TerminalEvent::DischargedSd;
    if (s == "DISCHARGED_UD") return TerminalEvent::DischargedUd;
    if (s == "IN_HOSPITAL_DEATH") return TerminalEvent::InHospitalDeath;
    if (s == "CENSORED") return TerminalEvent::Censored;
    throw DataError("unknown terminal event '" + s + "'");
}

std::string to_string(Action a) {
    return a == Action::Keep ? "K" : "D";
}

Action action_from_string(const std::string& s) {
    if (s == "K") return Action::Keep;
    if (s == "D") return Action::Discharge;
    throw DataError("unknown action '" + s + "'");
}

void validate_states(const LabeledTrajectory& t, int h) {
    if (t.states.empty())
        throw DataError("trajectory '" + t.stay_id + "' has no states");
    for (StateId x : t.states)
        if (x < 1 || x > h)
            throw DataError("trajectory '" + t.stay_id + "' has state " +
                            std::to_string(x) + " outside 1.." +
                            std::to_string(h));
}

}  // namespace icudp
