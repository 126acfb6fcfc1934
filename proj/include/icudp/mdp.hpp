#pragma once

#include <Eigen/Dense>
#include <vector>

#include "icudp/transitions.hpp"
#include "icudp/types.hpp"

namespace icudp {

/// Per-stage costs for the discharge MDP. Keeping a patient accrues
/// g_keep(x) each period; a discharge pays g_discharge(x) immediately and
/// then the absorbing outcome cost g_sd or g_ud every period thereafter.
struct CostSpec {
    Eigen::VectorXd g_keep;       // per health state
    Eigen::VectorXd g_discharge;  // per health state
    double g_sd = 0.0;
    double g_ud = 0.0;
    double alpha = 0.95;  // discount, in (0,1)
    int t_days = 30;      // outcome window used when labeling trajectories

    /// State-independent costs; defaults follow g(x,K)=1, g(x,D)=0, g(SD)=0.
    static CostSpec uniform(int h, double gud, double alpha = 0.95,
                            double gkeep = 1.0, double gdischarge = 0.0,
                            double gsd = 0.0, int t_days = 30);

    void validate(int h) const;
};

/// Stationary deterministic policy over health states 1..H.
struct Policy {
    std::vector<Action> action;

    Action at(StateId x) const { return action[static_cast<std::size_t>(x - 1)]; }
    int h() const { return static_cast<int>(action.size()); }
    bool operator==(const Policy&) const = default;

    static Policy discharge_everywhere(int h);
    static Policy keep_everywhere(int h);
};

/// Value function over {1..H, SD, UD}. The absorbing values are pinned to
/// g/(1-alpha) and never change.
struct ValueFunction {
    Eigen::VectorXd j;  // health states, index x-1
    double j_sd = 0.0;
    double j_ud = 0.0;

    double at(StateId x) const { return j(x - 1); }
    static ValueFunction zeros(int h, const CostSpec& cost);
};

struct BackupResult {
    ValueFunction value;
    Policy greedy;
};

/// One Bellman optimality backup. Ties between keep and discharge resolve
/// to keep.
BackupResult bellman_backup(const ValueFunction& j, const TransitionModel& model,
                            const CostSpec& cost);

/// Exact cost of a stationary policy by direct linear solve of
/// (I - alpha * P_mu) J = g_mu with the absorbing rows eliminated by their
/// closed forms. Verifies the residual to 1e-9.
ValueFunction policy_evaluation(const Policy& mu, const TransitionModel& model,
                                const CostSpec& cost);

struct SolveResult {
    Policy policy;
    ValueFunction value;
    int iterations = 0;
    /// Value of mu^k after each evaluation step; componentwise non-increasing
    /// for policy iteration.
    std::vector<Eigen::VectorXd> j_trace;
};

/// Policy iteration: evaluate, improve greedily, stop when the value is a
/// Bellman fixed point. mu0 defaults to discharge-everywhere.
SolveResult policy_iteration(const TransitionModel& model, const CostSpec& cost);
SolveResult policy_iteration(const TransitionModel& model, const CostSpec& cost,
                             const Policy& mu0);

/// Successive Bellman backups from J=0 until the sup-norm step falls below
/// tol*(1-alpha)/(2*alpha); kept as a cross-check for policy iteration.
SolveResult value_iteration(const TransitionModel& model, const CostSpec& cost,
                            double tol = 1e-8);

/// Exhaustive oracle: evaluates all 2^H deterministic stationary policies and
/// returns the pointwise-minimal value with its canonical greedy policy.
/// Guarded to H <= 12.
SolveResult enumerate_policies(const TransitionModel& model,
                               const CostSpec& cost);

}  // namespace icudp
