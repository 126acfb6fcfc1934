#include "icudp/transitions.hpp"

#include <cmath>

#include "icudp/rng.hpp"
#include "icudp/stats.hpp"

namespace icudp {

void TransitionModel::validate() const {
    if (keep.rows() != h || keep.cols() != h)
        throw DataError("keep matrix shape does not match H");
    for (int x = 0; x < h; ++x) {
        double row_sum = keep.row(x).sum();
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw NumericError("keep row " + std::to_string(x + 1) +
                               " sums to " + std::to_string(row_sum));
        for (int y = 0; y < h; ++y)
            if (keep(x, y) < 0.0 || keep(x, y) > 1.0)
                throw NumericError("keep entry out of [0,1]");
    }
    for (int x = 0; x < h; ++x) {
        if (p_ud(x) < 0.0 || p_ud(x) > 1.0)
            throw NumericError("p_ud out of [0,1]");
        if (p_ud(x) + p_sd(x) != 1.0)
            throw NumericError("p_ud + p_sd must equal 1 exactly");
    }
}

Eigen::MatrixXd estimate_keep_matrix(
    const std::vector<LabeledTrajectory>& trajectories, int h) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(h, h);
    for (const auto& traj : trajectories) {
        validate_states(traj, h);
        for (int t = 0; t + 1 < traj.length(); ++t)
            counts(traj.states[t] - 1, traj.states[t + 1] - 1) += 1.0;
    }
    Eigen::MatrixXd keep = Eigen::MatrixXd::Zero(h, h);
    for (int x = 0; x < h; ++x) {
        double exposure = counts.row(x).sum();
        if (exposure > 0.0)
            keep.row(x) = counts.row(x) / exposure;
        else
            keep(x, x) = 1.0;  // never observed under keep: state persists
    }
    return keep;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> estimate_discharge_outcomes(
    const std::vector<LabeledTrajectory>& trajectories, int h,
    double smoothing) {
    Eigen::VectorXd ud = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(h);
    for (const auto& traj : trajectories) {
        validate_states(traj, h);
        int x = traj.last_state() - 1;
        switch (traj.terminal_event) {
            case TerminalEvent::DischargedSd:
                total(x) += 1.0;
                break;
            case TerminalEvent::DischargedUd:
                ud(x) += 1.0;
                total(x) += 1.0;
                break;
            case TerminalEvent::InHospitalDeath:
                // counted as an unsuccessful outcome at the last observed state
                ud(x) += 1.0;
                total(x) += 1.0;
                break;
            case TerminalEvent::Censored:
                break;  // keep-transitions only
        }
    }

    double global_ud = total.sum() > 0.0 ? ud.sum() / total.sum() : 0.5;
    Eigen::VectorXd p_ud(h), p_sd(h);
    for (int x = 0; x < h; ++x) {
        if (total(x) > 0.0)
            p_ud(x) = (ud(x) + smoothing) / (total(x) + 2.0 * smoothing);
        else
            p_ud(x) = global_ud;
        p_sd(x) = 1.0 - p_ud(x);
    }
    return {p_ud, p_sd};
}

TransitionModel estimate_transition_model(
    const std::vector<LabeledTrajectory>& trajectories, int h,
    double smoothing) {
    TransitionModel model;
    model.h = h;
    model.keep_counts = Eigen::MatrixXd::Zero(h, h);
    model.ud_events = Eigen::VectorXd::Zero(h);
    model.outcome_events = Eigen::VectorXd::Zero(h);
    for (const auto& traj : trajectories) {
        validate_states(traj, h);
        for (int t = 0; t + 1 < traj.length(); ++t)
            model.keep_counts(traj.states[t] - 1, traj.states[t + 1] - 1) += 1.0;
        int x = traj.last_state() - 1;
        if (traj.terminal_event == TerminalEvent::DischargedUd ||
            traj.terminal_event == TerminalEvent::InHospitalDeath)
            model.ud_events(x) += 1.0;
        if (traj.terminal_event != TerminalEvent::Censored)
            model.outcome_events(x) += 1.0;
    }
    model.keep_exposure = model.keep_counts.rowwise().sum();
    model.keep = estimate_keep_matrix(trajectories, h);
    std::tie(model.p_ud, model.p_sd) =
        estimate_discharge_outcomes(trajectories, h, smoothing);
    model.validate();
    return model;
}

R2Triple validate_r2(const TransitionModel& model,
                     const std::vector<LabeledTrajectory>& test) {
    const int h = model.h;
    Eigen::MatrixXd keep_obs = Eigen::MatrixXd::Zero(h, h);
    Eigen::VectorXd sd_obs = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd ud_obs = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd outcome_exposure = Eigen::VectorXd::Zero(h);

    long n_transitions = 0;
    for (const auto& traj : test) {
        validate_states(traj, h);
        for (int t = 0; t + 1 < traj.length(); ++t) {
            keep_obs(traj.states[t] - 1, traj.states[t + 1] - 1) += 1.0;
            ++n_transitions;
        }
        int x = traj.last_state() - 1;
        switch (traj.terminal_event) {
            case TerminalEvent::DischargedSd:
                sd_obs(x) += 1.0;
                outcome_exposure(x) += 1.0;
                ++n_transitions;
                break;
            case TerminalEvent::DischargedUd:
            case TerminalEvent::InHospitalDeath:
                ud_obs(x) += 1.0;
                outcome_exposure(x) += 1.0;
                ++n_transitions;
                break;
            case TerminalEvent::Censored:
                break;
        }
    }
    if (n_transitions == 0) throw EmptyTestError();

    Eigen::VectorXd keep_exposure = keep_obs.rowwise().sum();
    std::vector<double> obs, exp;
    obs.reserve(static_cast<std::size_t>(h) * h);
    exp.reserve(static_cast<std::size_t>(h) * h);
    for (int x = 0; x < h; ++x)
        for (int y = 0; y < h; ++y) {
            obs.push_back(keep_obs(x, y));
            exp.push_back(model.keep(x, y) * keep_exposure(x));
        }
    R2Triple r2;
    r2.keep = r_squared(obs, exp);

    std::vector<double> sd_o(h), sd_e(h), ud_o(h), ud_e(h);
    for (int x = 0; x < h; ++x) {
        sd_o[x] = sd_obs(x);
        sd_e[x] = model.p_sd(x) * outcome_exposure(x);
        ud_o[x] = ud_obs(x);
        ud_e[x] = model.p_ud(x) * outcome_exposure(x);
    }
    r2.sd = r_squared(sd_o, sd_e);
    r2.ud = r_squared(ud_o, ud_e);
    return r2;
}

SojournFit sojourn_exponential_check(const TransitionModel& model,
                                     StateId state, int n_sims,
                                     std::uint64_t seed) {
    if (n_sims < 100) throw DataError("sojourn check needs n_sims >= 100");
    if (state < 1 || state > model.h) throw DataError("state out of range");
    const int x = state - 1;

    SojournFit fit;
    if (model.keep(x, x) >= 1.0 - 1e-12) {
        fit.absorbing = true;
        return fit;
    }

    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(state)));
    std::vector<double> row(model.h);
    for (int y = 0; y < model.h; ++y) row[y] = model.keep(x, y);

    std::vector<double> counts;
    for (int s = 0; s < n_sims; ++s) {
        int sojourn = 1;
        while (rng.categorical(row) == x) ++sojourn;
        if (static_cast<std::size_t>(sojourn) > counts.size())
            counts.resize(sojourn, 0.0);
        counts[sojourn - 1] += 1.0;
    }
    fit.lifetime_counts = counts;

    // count-weighted log-linear fit of ln(freq) = ln(gamma) - lambda * t
    std::vector<double> xs, ys, ws;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] <= 0.0) continue;
        double freq = counts[i] / n_sims;
        xs.push_back(static_cast<double>(i + 1));
        ys.push_back(std::log(freq));
        ws.push_back(counts[i]);
    }
    LineFit line = weighted_line_fit(xs, ys, ws);
    fit.lambda = -line.slope;
    fit.gamma = std::exp(line.intercept);

    std::vector<double> obs_freq, fit_freq;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double t = static_cast<double>(i + 1);
        obs_freq.push_back(counts[i] / n_sims);
        fit_freq.push_back(fit.gamma * std::exp(-fit.lambda * t));
    }
    fit.r2 = r_squared(obs_freq, fit_freq);
    return fit;
}

}  // namespace icudp
