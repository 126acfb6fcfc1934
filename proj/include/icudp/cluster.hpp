#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "icudp/errors.hpp"
#include "icudp/types.hpp"

namespace icudp {

struct MinMaxScaler {
    Eigen::VectorXd mins, maxs;

    static MinMaxScaler fit(const Eigen::MatrixXd& data);

    /// Maps each feature into [0,1]; constant features map to 0.
    Eigen::VectorXd transform(const Eigen::VectorXd& row) const;
    Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const;
};

struct KMeansOptions {
    int max_iter = 300;
    int n_restarts = 5;
};

struct KMeansFit {
    Eigen::MatrixXd centroids;       // k x F
    std::vector<int> assignment;     // 0-based cluster index per row
    double wcss = 0.0;
    std::vector<double> wcss_trace;  // objective per Lloyd pass, non-increasing
    int iterations = 0;
};

/// Lloyd's algorithm from k-means++ starts; best of n_restarts by WCSS.
/// Restart streams derive from (seed, restart index).
KMeansFit kmeans_fit(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                     const KMeansOptions& opts = {});

/// Fitted discretization: scaler plus centroids in scaled space.
struct StateModel {
    MinMaxScaler scaler;
    Eigen::MatrixXd centroids;  // H x F
    int h = 0;
    std::uint64_t seed = 0;
};

StateModel fit_state_model(const Eigen::MatrixXd& raw_data, int k,
                           std::uint64_t seed, const KMeansOptions& opts = {});

/// Nearest centroid by Euclidean distance; ties break to the lowest index.
/// Returns a 1-based state id. The point must already be scaled.
StateId assign(const StateModel& model, const Eigen::VectorXd& scaled_point);

StateId assign_raw(const StateModel& model, const Eigen::VectorXd& raw_point);

/// Elbow diagnostics: one best-of-restarts fit per k, ascending in k.
/// Each fit also tries a warm start grown from the previous best solution,
/// which makes the returned WCSS weakly decreasing in k.
std::vector<std::pair<int, double>> wcss_curve(const Eigen::MatrixXd& data,
                                               std::vector<int> ks,
                                               std::uint64_t seed,
                                               const KMeansOptions& opts = {});

}  // namespace icudp
