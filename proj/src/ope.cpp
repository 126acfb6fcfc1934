#include "icudp/ope.hpp"

#include <algorithm>
#include <cmath>

#include "icudp/rng.hpp"
#include "icudp/stats.hpp"

namespace icudp {

std::vector<LabeledTrajectory> filter_discharged(
    const std::vector<LabeledTrajectory>& trajectories) {
    std::vector<LabeledTrajectory> out;
    for (const auto& t : trajectories)
        if (is_discharge(t.terminal_event)) out.push_back(t);
    return out;
}

namespace {

// Action at a simulated (off-record) state. CP never leaves the record, and
// an extended RP2 stay runs as kept until the cap forces a discharge.
Action simulated_action(const PolicySpec& spec, StateId state, int step,
                        const LabeledTrajectory& traj, std::uint64_t seed) {
    switch (spec.kind) {
        case PolicySpec::Kind::Op:
            return spec.op.at(state);
        case PolicySpec::Kind::Rp1: {
            RngStream rng(derive_seed(seed, hash_tag(traj.stay_id),
                                      static_cast<std::uint64_t>(step)));
            return rng.bernoulli(0.5) ? Action::Discharge : Action::Keep;
        }
        case PolicySpec::Kind::Rp2:
            return Action::Keep;
        case PolicySpec::Kind::Cp:
            break;
    }
    throw DataError("clinician policy cannot be simulated off-record");
}

struct SimResult {
    double cost = 0.0;
    int periods = 0;   // periods in care
    double ud_prob = 0.0;
    bool discharged_on_record = false;
    int discharge_step = -1;  // recorded step index when on record
    bool rolled_out = false;
    bool hit_cap = false;
};

// One pass over a recorded stay; `mc` indexes the rollout stream.
SimResult replay_one(const LabeledTrajectory& traj, const PolicySpec& spec,
                     const TransitionModel& model, const CostSpec& cost,
                     std::uint64_t seed, int mc, int horizon_cap) {
    const double alpha = cost.alpha;
    const double tail_factor = 1.0 / (1.0 - alpha);
    const int len = traj.length();

    SimResult r;
    double disc = 1.0;  // alpha^t

    for (int t = 0; t < len; ++t) {
        StateId x = traj.states[t];
        int xi = x - 1;
        Action a = decide(spec, x, ReplayContext{&traj, t, seed});

        if (a == Action::Discharge) {
            r.cost += disc * cost.g_discharge(xi);
            if (t == len - 1) {
                // coincides with the recorded discharge: recorded outcome
                bool ud = traj.terminal_event == TerminalEvent::DischargedUd;
                r.cost += disc * alpha * (ud ? cost.g_ud : cost.g_sd) * tail_factor;
                r.ud_prob = ud ? 1.0 : 0.0;
            } else {
                // counterfactual early discharge: expected outcome cost
                double g_out =
                    model.p_sd(xi) * cost.g_sd + model.p_ud(xi) * cost.g_ud;
                r.cost += disc * alpha * g_out * tail_factor;
                r.ud_prob = model.p_ud(xi);
            }
            r.periods = t + 1;
            r.discharged_on_record = true;
            r.discharge_step = t;
            return r;
        }

        r.cost += disc * cost.g_keep(xi);
        disc *= alpha;
    }

    // Kept past the recorded discharge: simulate under the model.
    r.rolled_out = true;
    RngStream rng(derive_seed(seed, hash_tag(traj.stay_id),
                              hash_tag("mc") + static_cast<std::uint64_t>(mc)));
    std::vector<double> row(model.h);
    int y = traj.states[len - 1] - 1;
    for (int t = len;; ++t) {
        for (int c = 0; c < model.h; ++c) row[c] = model.keep(y, c);
        y = rng.categorical(row);

        if (t >= horizon_cap) {
            if (spec.kind == PolicySpec::Kind::Rp2) {
                // extension rule: force the discharge at the cap
                r.cost += disc * cost.g_discharge(y);
                double g_out =
                    model.p_sd(y) * cost.g_sd + model.p_ud(y) * cost.g_ud;
                r.cost += disc * alpha * g_out * tail_factor;
                r.ud_prob = model.p_ud(y);
                r.periods = t + 1;
            } else {
                // kept forever from here; closed-form tail, flagged
                r.cost += disc * cost.g_keep(y) * tail_factor;
                r.hit_cap = true;
                r.periods = t;
            }
            return r;
        }

        Action a = simulated_action(spec, y + 1, t, traj, seed);
        if (a == Action::Discharge) {
            r.cost += disc * cost.g_discharge(y);
            double g_out =
                model.p_sd(y) * cost.g_sd + model.p_ud(y) * cost.g_ud;
            r.cost += disc * alpha * g_out * tail_factor;
            r.ud_prob = model.p_ud(y);
            r.periods = t + 1;
            return r;
        }
        r.cost += disc * cost.g_keep(y);
        disc *= alpha;
    }
}

}  // namespace

TrajectoryCostResult trajectory_cost(const LabeledTrajectory& traj,
                                     const PolicySpec& spec,
                                     const TransitionModel& model,
                                     const CostSpec& cost, int n_mc,
                                     std::uint64_t seed, int horizon_cap) {
    if (!is_discharge(traj.terminal_event))
        throw DataError("trajectory '" + traj.stay_id +
                        "' does not end in a discharge");
    if (n_mc < 1) throw DataError("n_mc must be >= 1");
    validate_states(traj, model.h);
    cost.validate(model.h);

    SimResult first = replay_one(traj, spec, model, cost, seed, 0, horizon_cap);
    TrajectoryCostResult out;
    if (!first.rolled_out) {
        // no deviation past the record: the replay is deterministic
        out.cost = first.cost;
        out.mean_periods = first.periods;
        return out;
    }
    out.deviated = true;
    double cost_sum = first.cost;
    double period_sum = first.periods;
    out.hit_horizon_cap = first.hit_cap;
    for (int mc = 1; mc < n_mc; ++mc) {
        SimResult s = replay_one(traj, spec, model, cost, seed, mc, horizon_cap);
        cost_sum += s.cost;
        period_sum += s.periods;
        out.hit_horizon_cap = out.hit_horizon_cap || s.hit_cap;
    }
    out.cost = cost_sum / n_mc;
    out.mean_periods = period_sum / n_mc;
    return out;
}

std::vector<double> policy_costs(const std::vector<LabeledTrajectory>& test,
                                 const PolicySpec& spec,
                                 const TransitionModel& model,
                                 const CostSpec& cost, const OpeConfig& opts) {
    std::vector<double> costs;
    costs.reserve(test.size());
    for (const auto& traj : test)
        costs.push_back(trajectory_cost(traj, spec, model, cost, opts.n_mc,
                                        opts.seed, opts.horizon_cap)
                            .cost);
    return costs;
}

PolicyCostEstimate bootstrap_bounds(std::span<const double> costs, int B,
                                    double delta, std::uint64_t seed) {
    if (costs.empty()) throw DataError("bootstrap needs at least one cost");
    if (B < 1) throw DataError("bootstrap needs B >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw DataError("delta must lie in (0,1)");

    const int n = static_cast<int>(costs.size());
    RngStream rng(derive_seed(seed, hash_tag("bootstrap")));
    std::vector<double> means(B);
    for (int j = 0; j < B; ++j) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += costs[rng.uniform_int(n)];
        means[j] = sum / n;
    }
    std::sort(means.begin(), means.end());

    PolicyCostEstimate est;
    est.mean_cost = mean(costs);
    double q = (1.0 - delta) / 2.0;
    est.lower_bound = percentile_sorted(means, q);
    est.upper_bound = percentile_sorted(means, 1.0 - q);
    // tiny B can place both percentiles on one side of the point estimate;
    // widen so the interval always contains it
    est.lower_bound = std::min(est.lower_bound, est.mean_cost);
    est.upper_bound = std::max(est.upper_bound, est.mean_cost);
    return est;
}

std::vector<CurvePoint> performance_curves(
    const TransitionModel& model, const CostSpec& cost_template,
    std::span<const double> gud_grid,
    const std::vector<LabeledTrajectory>& test, const OpeConfig& opts) {
    for (double g : gud_grid)
        if (g < 0.0) throw DataError("g_UD grid values must be >= 0");

    std::vector<CurvePoint> curve;
    for (double gud : gud_grid) {
        CostSpec cost = cost_template;
        cost.g_ud = gud;
        Policy op = policy_iteration(model, cost).policy;
        double gamma = match_rp2_gamma(op, test);
        PolicySpec rp2 = PolicySpec::make_rp2(gamma);
        PolicySpec op_spec = PolicySpec::make_op(op);

        CurvePoint pt;
        pt.g_ud = gud;
        pt.rp2_gamma = gamma;

        double op_ud = 0.0, rp2_ud = 0.0, cp_ud = 0.0;
        double op_los = 0.0, rp2_los = 0.0, cp_los = 0.0;
        int rp2_los_n = 0;
        for (const auto& traj : test) {
            const int len = traj.length();
            bool recorded_ud =
                traj.terminal_event == TerminalEvent::DischargedUd;

            cp_ud += recorded_ud ? 1.0 : 0.0;
            cp_los += len;

            int step = op_discharge_step(op, traj);
            if (step >= 0) {
                pt.op.n_discharged += 1;
                op_ud += step == len - 1 ? (recorded_ud ? 1.0 : 0.0)
                                         : model.p_ud(traj.states[step] - 1);
                op_los += step + 1;
            } else {
                // OP defers: expected stay = record + simulated continuation
                auto res = trajectory_cost(traj, op_spec, model, cost,
                                           opts.n_mc, opts.seed,
                                           opts.horizon_cap);
                op_los += res.mean_periods;
            }

            Action rp2_final = decide(
                rp2, traj.last_state(),
                ReplayContext{&traj, len - 1, opts.seed});
            if (rp2_final == Action::Discharge) {
                pt.rp2.n_discharged += 1;
                rp2_ud += recorded_ud ? 1.0 : 0.0;
                rp2_los += len;
                rp2_los_n += 1;
            }
        }
        const double n = static_cast<double>(test.size());
        pt.cp.n_discharged = static_cast<int>(test.size());
        pt.cp.frac_ud = test.empty() ? 0.0 : cp_ud / n;
        pt.cp.mean_expected_los_periods = test.empty() ? 0.0 : cp_los / n;
        pt.op.frac_ud =
            pt.op.n_discharged > 0 ? op_ud / pt.op.n_discharged : 0.0;
        pt.op.mean_expected_los_periods = test.empty() ? 0.0 : op_los / n;
        pt.rp2.frac_ud =
            pt.rp2.n_discharged > 0 ? rp2_ud / pt.rp2.n_discharged : 0.0;
        pt.rp2.mean_expected_los_periods =
            rp2_los_n > 0 ? rp2_los / rp2_los_n : 0.0;
        curve.push_back(pt);
    }
    return curve;
}

std::vector<CalibrationRow> policy_calibration(
    const std::vector<LabeledTrajectory>& test, const CostSpec& cost,
    int n_buckets) {
    if (test.empty()) throw DataError("calibration needs trajectories");
    if (n_buckets < 1) throw DataError("n_buckets must be >= 1");

    // realized clinician cost per stay (recorded outcome, no simulation)
    std::vector<double> costs;
    std::vector<double> ud;
    costs.reserve(test.size());
    for (const auto& traj : test) {
        if (!is_discharge(traj.terminal_event))
            throw DataError("calibration expects discharged stays");
        double disc = 1.0, c = 0.0;
        for (int t = 0; t < traj.length() - 1; ++t) {
            c += disc * cost.g_keep(traj.states[t] - 1);
            disc *= cost.alpha;
        }
        c += disc * cost.g_discharge(traj.last_state() - 1);
        bool is_ud = traj.terminal_event == TerminalEvent::DischargedUd;
        c += disc * cost.alpha * (is_ud ? cost.g_ud : cost.g_sd) /
             (1.0 - cost.alpha);
        costs.push_back(c);
        ud.push_back(is_ud ? 1.0 : 0.0);
    }

    std::vector<double> sorted = costs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 0; b <= n_buckets; ++b)
        edges.push_back(
            percentile_sorted(sorted, static_cast<double>(b) / n_buckets));
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const int nb = static_cast<int>(edges.size()) - 1;

    if (nb < 1) {  // all costs identical: a single bucket
        CalibrationRow row;
        row.cost_lo = row.cost_hi = sorted.front();
        row.n = static_cast<int>(test.size());
        row.ud_rate = mean(ud);
        return {row};
    }

    std::vector<CalibrationRow> rows(nb);
    for (int b = 0; b < nb; ++b) {
        rows[b].cost_lo = edges[b];
        rows[b].cost_hi = edges[b + 1];
    }
    std::vector<double> ud_sum(nb, 0.0);
    for (std::size_t i = 0; i < costs.size(); ++i) {
        auto it = std::upper_bound(edges.begin(), edges.end(), costs[i]);
        int b = std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, nb - 1);
        rows[b].n += 1;
        ud_sum[b] += ud[i];
    }
    for (int b = 0; b < nb; ++b)
        rows[b].ud_rate = rows[b].n > 0 ? ud_sum[b] / rows[b].n : 0.0;
    return rows;
}

}  // namespace icudp
