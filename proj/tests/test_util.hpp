#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "icudp/mdp.hpp"
#include "icudp/rng.hpp"
#include "icudp/transitions.hpp"

namespace icudp::test {

inline TransitionModel model_from(Eigen::MatrixXd keep, Eigen::VectorXd p_ud) {
    TransitionModel m;
    m.h = static_cast<int>(keep.rows());
    m.keep = std::move(keep);
    m.p_ud = std::move(p_ud);
    m.p_sd = (1.0 - m.p_ud.array()).matrix();
    m.keep_counts = Eigen::MatrixXd::Zero(m.h, m.h);
    m.keep_exposure = Eigen::VectorXd::Zero(m.h);
    m.ud_events = Eigen::VectorXd::Zero(m.h);
    m.outcome_events = Eigen::VectorXd::Zero(m.h);
    m.validate();
    return m;
}

inline TransitionModel random_model(int h, std::uint64_t seed) {
    RngStream rng(seed);
    Eigen::MatrixXd keep(h, h);
    for (int x = 0; x < h; ++x) {
        double sum = 0.0;
        for (int y = 0; y < h; ++y) {
            keep(x, y) = 0.05 + rng.uniform01();
            sum += keep(x, y);
        }
        keep.row(x) /= sum;
    }
    Eigen::VectorXd p_ud(h);
    for (int x = 0; x < h; ++x) p_ud(x) = rng.uniform01();
    return model_from(std::move(keep), std::move(p_ud));
}

/// Independent oracle: evaluate a fixed policy by fixed-point iteration of
/// its one-policy Bellman operator instead of a linear solve.
inline Eigen::VectorXd iterative_policy_value(const Policy& mu,
                                              const TransitionModel& model,
                                              const CostSpec& cost,
                                              int sweeps) {
    const int h = model.h;
    const double j_sd = cost.g_sd / (1.0 - cost.alpha);
    const double j_ud = cost.g_ud / (1.0 - cost.alpha);
    Eigen::VectorXd j = Eigen::VectorXd::Zero(h);
    for (int s = 0; s < sweeps; ++s) {
        Eigen::VectorXd next(h);
        for (int x = 0; x < h; ++x) {
            if (mu.action[x] == Action::Keep)
                next(x) = cost.g_keep(x) + cost.alpha * model.keep.row(x) * j;
            else
                next(x) = cost.g_discharge(x) +
                          cost.alpha * (model.p_sd(x) * j_sd +
                                        model.p_ud(x) * j_ud);
        }
        j = next;
    }
    return j;
}

inline double spearman_rho(const std::vector<double>& a,
                           const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            r[idx[k]] = static_cast<double>(k);
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= ra.size();
    mb /= rb.size();
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

}  // namespace icudp::test
