#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icudp/mdp.hpp"
#include "icudp/policies.hpp"
#include "icudp/transitions.hpp"
#include "icudp/types.hpp"

namespace icudp {

struct OpeConfig {
    int n_mc = 100;        // Monte-Carlo rollouts per trajectory
    int n_bootstrap = 2000;
    double delta = 0.95;   // confidence level
    int horizon_cap = 1000;
    std::uint64_t seed = 0;
};

/// Test sets for policy evaluation consist of stays the clinician discharged.
std::vector<LabeledTrajectory> filter_discharged(
    const std::vector<LabeledTrajectory>& trajectories);

struct TrajectoryCostResult {
    double cost = 0.0;            // mean discounted cost over rollouts
    double mean_periods = 0.0;    // expected periods in care under the policy
    bool deviated = false;        // kept past the recorded discharge
    bool hit_horizon_cap = false; // some rollout was cut off, tail applied
};

/// Discounted cost of one recorded stay under an evaluated policy. The
/// recorded states are followed while the policy keeps; a discharge before
/// the recorded one closes the stay with the model's outcome odds; keeping
/// past the recorded discharge switches to Monte-Carlo rollouts under the
/// supplied transition model. A discharge at the recorded step uses the
/// recorded outcome, which makes CP replay exact.
TrajectoryCostResult trajectory_cost(const LabeledTrajectory& traj,
                                     const PolicySpec& spec,
                                     const TransitionModel& model,
                                     const CostSpec& cost, int n_mc,
                                     std::uint64_t seed, int horizon_cap = 1000);

/// Per-trajectory costs for a whole test set, in input order.
std::vector<double> policy_costs(const std::vector<LabeledTrajectory>& test,
                                 const PolicySpec& spec,
                                 const TransitionModel& model,
                                 const CostSpec& cost, const OpeConfig& opts);

struct PolicyCostEstimate {
    double mean_cost = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

/// Percentile bootstrap over per-trajectory costs: B resampled means, bounds
/// at the (1±delta)/2 empirical quantiles.
PolicyCostEstimate bootstrap_bounds(std::span<const double> costs, int B,
                                    double delta, std::uint64_t seed);

struct PolicyCurveStats {
    int n_discharged = 0;      // stays discharged at or before the clinician
    double frac_ud = 0.0;      // UD fraction among those stays
    double mean_expected_los_periods = 0.0;  // over all stays
};

struct CurvePoint {
    double g_ud = 0.0;
    double rp2_gamma = 0.0;
    PolicyCurveStats op, rp2, cp;
};

/// Sweep g(UD), solve OP per grid point, replay the test set, and match an
/// RP2 baseline to OP's discharge volume.
std::vector<CurvePoint> performance_curves(const TransitionModel& model,
                                           const CostSpec& cost_template,
                                           std::span<const double> gud_grid,
                                           const std::vector<LabeledTrajectory>& test,
                                           const OpeConfig& opts);

struct CalibrationRow {
    double cost_lo = 0.0;
    double cost_hi = 0.0;
    int n = 0;
    double ud_rate = 0.0;
};

/// Bucket stays by realized clinician cost (decile edges) and report the
/// observed UD rate per bucket.
std::vector<CalibrationRow> policy_calibration(
    const std::vector<LabeledTrajectory>& test, const CostSpec& cost,
    int n_buckets = 10);

}  // namespace icudp
