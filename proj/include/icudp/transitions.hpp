#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "icudp/types.hpp"

namespace icudp {

/// Estimated MDP transition structure. Keep dynamics are an HxH row-stochastic
/// matrix; a discharge moves to SD/UD with per-state probabilities. SD and UD
/// are unreachable under keep by construction.
struct TransitionModel {
    int h = 0;
    Eigen::MatrixXd keep;  // P(x_next | x, K), rows sum to 1
    Eigen::VectorXd p_ud;  // P(UD | x, D)
    Eigen::VectorXd p_sd;  // 1 - p_ud, exactly

    // raw count tables, kept for audit
    Eigen::MatrixXd keep_counts;     // transitions x -> x_next
    Eigen::VectorXd keep_exposure;   // visits of x with a successor
    Eigen::VectorXd ud_events;       // UD discharges + in-hospital deaths at x
    Eigen::VectorXd outcome_events;  // discharges + in-hospital deaths at x

    void validate() const;  // row sums, probability ranges
};

/// Keep matrix from observed within-stay transitions. Rows never observed
/// under keep become self-loops.
Eigen::MatrixXd estimate_keep_matrix(
    const std::vector<LabeledTrajectory>& trajectories, int h);

/// Discharge-outcome probabilities with the in-hospital-death correction and
/// add-one-half smoothing. States with no outcome observations fall back to
/// the global empirical rate.
std::pair<Eigen::VectorXd, Eigen::VectorXd> estimate_discharge_outcomes(
    const std::vector<LabeledTrajectory>& trajectories, int h,
    double smoothing = 0.5);

TransitionModel estimate_transition_model(
    const std::vector<LabeledTrajectory>& trajectories, int h,
    double smoothing = 0.5);

struct R2Triple {
    double keep = 0.0;
    double sd = 0.0;
    double ud = 0.0;
};

/// Goodness of fit on a held-out set: expected cell counts are model
/// probabilities times observed per-state exposure; R^2 against observed
/// counts, computed over all cells of each table.
R2Triple validate_r2(const TransitionModel& model,
                     const std::vector<LabeledTrajectory>& test);

struct SojournFit {
    bool absorbing = false;  // self-loop state, infinite sojourn
    double gamma = 0.0;      // f(t) = gamma * exp(-lambda t)
    double lambda = 0.0;
    double r2 = 0.0;
    std::vector<double> lifetime_counts;  // histogram, index = sojourn - 1
};

/// Simulate first-exit times from `state` under the keep matrix and fit an
/// exponential decay to the lifetime histogram (count-weighted log-linear
/// least squares). R^2 is computed against the histogram frequencies.
SojournFit sojourn_exponential_check(const TransitionModel& model,
                                     StateId state, int n_sims,
                                     std::uint64_t seed);

}  // namespace icudp
