#pragma once

#include <cstdint>
#include <vector>

#include "icudp/mdp.hpp"
#include "icudp/types.hpp"

namespace icudp {

/// The four benchmarked discharge policies. OP consults its solved action
/// table; CP replays the recorded clinician action; RP1 flips a fair coin
/// each period; RP2 flips a gamma-biased coin once, at the clinician's
/// discharge step, to decide whether to extend the stay.
struct PolicySpec {
    enum class Kind : std::uint8_t { Op, Cp, Rp1, Rp2 };
    Kind kind = Kind::Cp;
    Policy op;           // used by Op
    double gamma = 0.0;  // used by Rp2, in [0,1]

    static PolicySpec make_op(Policy p);
    static PolicySpec make_cp();
    static PolicySpec make_rp1();
    static PolicySpec make_rp2(double gamma);
};

/// Replay position within one recorded trajectory. Random decisions are
/// counter-based functions of (seed, stay_id, step), so any subset of stays
/// reproduces bit-for-bit.
struct ReplayContext {
    const LabeledTrajectory* trajectory = nullptr;
    int step = 0;
    std::uint64_t seed = 0;
};

/// Recorded clinician action at a step: keep before the final state, then
/// discharge if the stay ended in a discharge. Throws ReplayExhausted past
/// the recorded horizon or at a non-discharge terminal.
Action cp_recorded_action(const LabeledTrajectory& traj, int step);

Action decide(const PolicySpec& spec, StateId state, const ReplayContext& ctx);

/// Step at which OP first discharges along the recorded states, or -1 when
/// OP defers beyond the recorded horizon.
int op_discharge_step(const Policy& op, const LabeledTrajectory& traj);

/// Fraction of test stays OP keeps past the clinician's discharge; the
/// matched RP2 then discharges the same expected number of stays.
double match_rp2_gamma(const Policy& op,
                       const std::vector<LabeledTrajectory>& test);

}  // namespace icudp
