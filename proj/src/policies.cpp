#include "icudp/policies.hpp"

#include "icudp/rng.hpp"

namespace icudp {

PolicySpec PolicySpec::make_op(Policy p) {
    PolicySpec s;
    s.kind = Kind::Op;
    s.op = std::move(p);
    return s;
}
PolicySpec PolicySpec::make_cp() {
    return PolicySpec{};
}
PolicySpec PolicySpec::make_rp1() {
    PolicySpec s;
    s.kind = Kind::Rp1;
    return s;
}
PolicySpec PolicySpec::make_rp2(double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw DataError("RP2 gamma must lie in [0,1]");
    PolicySpec s;
    s.kind = Kind::Rp2;
    s.gamma = gamma;
    return s;
}

Action cp_recorded_action(const LabeledTrajectory& traj, int step) {
    if (step < traj.length() - 1) return Action::Keep;
    if (step == traj.length() - 1 && is_discharge(traj.terminal_event))
        return Action::Discharge;
    throw ReplayExhaustedError(traj.stay_id);
}

namespace {

bool rp1_coin(const ReplayContext& ctx) {
    RngStream rng(derive_seed(ctx.seed, hash_tag(ctx.trajectory->stay_id),
                              static_cast<std::uint64_t>(ctx.step)));
    return rng.bernoulli(0.5);
}

bool rp2_extend_coin(const ReplayContext& ctx, double gamma) {
    RngStream rng(derive_seed(ctx.seed, hash_tag(ctx.trajectory->stay_id),
                              hash_tag("rp2-extend")));
    return rng.bernoulli(gamma);
}

}  // namespace

Action decide(const PolicySpec& spec, StateId state, const ReplayContext& ctx) {
    switch (spec.kind) {
        case PolicySpec::Kind::Op:
            return spec.op.at(state);
        case PolicySpec::Kind::Cp:
            return cp_recorded_action(*ctx.trajectory, ctx.step);
        case PolicySpec::Kind::Rp1:
            return rp1_coin(ctx) ? Action::Discharge : Action::Keep;
        case PolicySpec::Kind::Rp2: {
            // Keep until the clinician's recorded discharge step; there,
            // extend the stay with probability gamma.
            const auto& traj = *ctx.trajectory;
            if (ctx.step < traj.length() - 1) return Action::Keep;
            if (ctx.step == traj.length() - 1 &&
                is_discharge(traj.terminal_event))
                return rp2_extend_coin(ctx, spec.gamma) ? Action::Keep
                                                        : Action::Discharge;
            // past the recorded horizon: the extended stay runs on
            return Action::Keep;
        }
    }
    throw DataError("unknown policy kind");
}

int op_discharge_step(const Policy& op, const LabeledTrajectory& traj) {
    for (int t = 0; t < traj.length(); ++t)
        if (op.at(traj.states[t]) == Action::Discharge) return t;
    return -1;
}

double match_rp2_gamma(const Policy& op,
                       const std::vector<LabeledTrajectory>& test) {
    if (test.empty()) throw DataError("match_rp2_gamma: empty test set");
    int deferred = 0;
    for (const auto& traj : test)
        if (op_discharge_step(op, traj) < 0) ++deferred;
    return static_cast<double>(deferred) / static_cast<double>(test.size());
}

}  // namespace icudp
