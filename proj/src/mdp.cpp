#include "icudp/mdp.hpp"

#include <cmath>
#include <limits>

namespace icudp {

CostSpec CostSpec::uniform(int h, double gud, double alpha, double gkeep,
                           double gdischarge, double gsd, int t_days) {
    CostSpec c;
    c.g_keep = Eigen::VectorXd::Constant(h, gkeep);
    c.g_discharge = Eigen::VectorXd::Constant(h, gdischarge);
    c.g_sd = gsd;
    c.g_ud = gud;
    c.alpha = alpha;
    c.t_days = t_days;
    return c;
}

void CostSpec::validate(int h) const {
    if (g_keep.size() != h || g_discharge.size() != h)
        throw DataError("cost vectors do not match H");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DataError("discount alpha must lie in (0,1)");
    if (!g_keep.allFinite() || !g_discharge.allFinite() ||
        !std::isfinite(g_sd) || !std::isfinite(g_ud))
        throw DataError("stage costs must be finite");
}

Policy Policy::discharge_everywhere(int h) {
    Policy p;
    p.action.assign(static_cast<std::size_t>(h), Action::Discharge);
    return p;
}

Policy Policy::keep_everywhere(int h) {
    Policy p;
    p.action.assign(static_cast<std::size_t>(h), Action::Keep);
    return p;
}

ValueFunction ValueFunction::zeros(int h, const CostSpec& cost) {
    ValueFunction v;
    v.j = Eigen::VectorXd::Zero(h);
    v.j_sd = cost.g_sd / (1.0 - cost.alpha);
    v.j_ud = cost.g_ud / (1.0 - cost.alpha);
    return v;
}

namespace {

inline double discharge_value(int x, const TransitionModel& model,
                              const CostSpec& cost, const ValueFunction& j) {
    return cost.g_discharge(x) +
           cost.alpha * (model.p_sd(x) * j.j_sd + model.p_ud(x) * j.j_ud);
}

}  // namespace

BackupResult bellman_backup(const ValueFunction& j, const TransitionModel& model,
                            const CostSpec& cost) {
    const int h = model.h;
    cost.validate(h);
    BackupResult out;
    out.value.j.resize(h);
    out.value.j_sd = cost.g_sd / (1.0 - cost.alpha);
    out.value.j_ud = cost.g_ud / (1.0 - cost.alpha);
    out.greedy.action.resize(h);

    Eigen::VectorXd keep_cont = model.keep * j.j;  // E[J(x_next) | x, K]
    for (int x = 0; x < h; ++x) {
        double keep_val = cost.g_keep(x) + cost.alpha * keep_cont(x);
        double disch_val = discharge_value(x, model, cost, j);
        if (keep_val <= disch_val) {  // tie keeps the patient
            out.value.j(x) = keep_val;
            out.greedy.action[x] = Action::Keep;
        } else {
            out.value.j(x) = disch_val;
            out.greedy.action[x] = Action::Discharge;
        }
    }
    return out;
}

ValueFunction policy_evaluation(const Policy& mu, const TransitionModel& model,
                                const CostSpec& cost) {
    const int h = model.h;
    cost.validate(h);
    if (mu.h() != h) throw DataError("policy does not match H");

    ValueFunction v = ValueFunction::zeros(h, cost);

    // Rows for kept states couple through alpha * P(.|x,K); discharge rows are
    // constants once the absorbing values are substituted (Eq. for SD/UD).
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(h, h);
    Eigen::VectorXd b(h);
    for (int x = 0; x < h; ++x) {
        if (mu.action[x] == Action::Keep) {
            a.row(x) -= cost.alpha * model.keep.row(x);
            b(x) = cost.g_keep(x);
        } else {
            b(x) = discharge_value(x, model, cost, v);
        }
    }
    v.j = a.partialPivLu().solve(b);

    double residual = (a * v.j - b).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-9))
        throw NumericError("policy evaluation residual " +
                           std::to_string(residual) + " exceeds 1e-9");
    return v;
}

SolveResult policy_iteration(const TransitionModel& model,
                             const CostSpec& cost) {
    return policy_iteration(model, cost,
                            Policy::discharge_everywhere(model.h));
}

SolveResult policy_iteration(const TransitionModel& model, const CostSpec& cost,
                             const Policy& mu0) {
    SolveResult res;
    res.policy = mu0;
    // Termination: at most 2^H distinct deterministic policies, each strictly
    // better than the last; in practice a handful of sweeps.
    const int hard_cap = 100000;
    for (int k = 0; k < hard_cap; ++k) {
        ValueFunction j_mu = policy_evaluation(res.policy, model, cost);
        res.j_trace.push_back(j_mu.j);
        BackupResult backup = bellman_backup(j_mu, model, cost);
        res.iterations = k + 1;
        double gap = (backup.value.j - j_mu.j).lpNorm<Eigen::Infinity>();
        if (gap <= 1e-12) {
            // J_mu is the Bellman fixed point; report the greedy policy so the
            // tie rule matches the enumeration oracle's canonical policy.
            res.policy = backup.greedy;
            res.value = j_mu;
            return res;
        }
        if (backup.greedy == res.policy) {
            res.value = j_mu;
            return res;
        }
        res.policy = backup.greedy;
    }
    throw NumericError("policy iteration failed to converge");
}

SolveResult value_iteration(const TransitionModel& model, const CostSpec& cost,
                            double tol) {
    if (!(tol > 0.0)) throw DataError("value iteration tol must be positive");
    SolveResult res;
    ValueFunction j = ValueFunction::zeros(model.h, cost);
    const double stop = tol * (1.0 - cost.alpha) / (2.0 * cost.alpha);
    const int hard_cap = 10000000;
    for (int k = 0; k < hard_cap; ++k) {
        BackupResult backup = bellman_backup(j, model, cost);
        res.iterations = k + 1;
        double step = (backup.value.j - j.j).lpNorm<Eigen::Infinity>();
        j = backup.value;
        if (step < stop) {
            res.policy = backup.greedy;
            res.value = j;
            return res;
        }
    }
    throw NumericError("value iteration failed to converge");
}

SolveResult enumerate_policies(const TransitionModel& model,
                               const CostSpec& cost) {
    const int h = model.h;
    if (h > 12) throw TooLargeError(h);

    Eigen::VectorXd best =
        Eigen::VectorXd::Constant(h, std::numeric_limits<double>::infinity());
    for (std::uint32_t mask = 0; mask < (1u << h); ++mask) {
        Policy mu;
        mu.action.resize(h);
        for (int x = 0; x < h; ++x)
            mu.action[x] =
                (mask >> x) & 1u ? Action::Discharge : Action::Keep;
        ValueFunction j = policy_evaluation(mu, model, cost);
        best = best.cwiseMin(j.j);
    }

    // Canonical optimal policy: greedy with respect to the pointwise-minimal
    // value, ties to keep — the same tie rule the iterative solvers use.
    ValueFunction j_star = ValueFunction::zeros(h, cost);
    j_star.j = best;
    BackupResult backup = bellman_backup(j_star, model, cost);

    SolveResult res;
    res.policy = backup.greedy;
    res.value = j_star;
    res.iterations = 1 << h;
    return res;
}

}  // namespace icudp
