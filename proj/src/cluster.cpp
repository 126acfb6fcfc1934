#include "icudp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icudp/rng.hpp"

namespace icudp {

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& data) {
    if (data.rows() < 1) throw DataError("scaler needs at least one row");
    if (!data.allFinite()) throw DataError("scaler input must be finite");
    MinMaxScaler s;
    s.mins = data.colwise().minCoeff();
    s.maxs = data.colwise().maxCoeff();
    return s;
}

Eigen::VectorXd MinMaxScaler::transform(const Eigen::VectorXd& row) const {
    Eigen::VectorXd out(row.size());
    for (Eigen::Index f = 0; f < row.size(); ++f) {
        double range = maxs(f) - mins(f);
        out(f) = range > 0.0 ? (row(f) - mins(f)) / range : 0.0;
    }
    return out;
}

Eigen::MatrixXd MinMaxScaler::transform(const Eigen::MatrixXd& data) const {
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index f = 0; f < data.cols(); ++f) {
        double range = maxs(f) - mins(f);
        if (range > 0.0)
            out.col(f) = (data.col(f).array() - mins(f)) / range;
        else
            out.col(f).setZero();
    }
    return out;
}

namespace {

struct Assignment {
    std::vector<int> cluster;     // per row
    std::vector<double> sq_dist;  // per row, to its centroid
    double wcss = 0.0;
};

// Argmin over centroids of ||x - c||^2 via the expansion |c|^2 - 2 x.c;
// the |x|^2 term is common to all centroids. Ties go to the lowest index.
Assignment assign_all(const Eigen::MatrixXd& data,
                      const Eigen::MatrixXd& centroids) {
    const auto n = data.rows();
    const auto k = centroids.rows();
    Eigen::MatrixXd cross = data * centroids.transpose();  // n x k
    Eigen::VectorXd cnorm = centroids.rowwise().squaredNorm();
    Eigen::VectorXd xnorm = data.rowwise().squaredNorm();

    Assignment a;
    a.cluster.resize(n);
    a.sq_dist.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_score = cnorm(0) - 2.0 * cross(i, 0);
        for (Eigen::Index j = 1; j < k; ++j) {
            double score = cnorm(j) - 2.0 * cross(i, j);
            if (score < best_score) {
                best_score = score;
                best = static_cast<int>(j);
            }
        }
        a.cluster[i] = best;
        a.sq_dist[i] = std::max(0.0, xnorm(i) + best_score);
        a.wcss += a.sq_dist[i];
    }
    return a;
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& data, int k,
                              RngStream& rng) {
    const auto n = data.rows();
    Eigen::MatrixXd centroids(k, data.cols());
    std::vector<bool> taken(n, false);

    int first = rng.uniform_int(static_cast<int>(n));
    centroids.row(0) = data.row(first);
    taken[first] = true;

    std::vector<double> d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d2[i] = (data.row(i) - centroids.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        Eigen::Index pick = -1;
        if (total > 0.0) {
            double u = rng.uniform01() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        } else {
            // all remaining distances zero (duplicates); pick any untaken row
            for (Eigen::Index i = 0; i < n; ++i)
                if (!taken[i]) {
                    pick = i;
                    break;
                }
            if (pick < 0) pick = rng.uniform_int(static_cast<int>(n));
        }
        centroids.row(c) = data.row(pick);
        taken[pick] = true;
        for (Eigen::Index i = 0; i < n; ++i)
            d2[i] = std::min(d2[i],
                             (data.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

KMeansFit lloyd(const Eigen::MatrixXd& data, Eigen::MatrixXd centroids,
                int max_iter) {
    const auto n = data.rows();
    const int k = static_cast<int>(centroids.rows());

    Assignment a = assign_all(data, centroids);
    KMeansFit fit;
    fit.wcss_trace.push_back(a.wcss);

    for (int iter = 0; iter < max_iter; ++iter) {
        // update step
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
        std::vector<int> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(a.cluster[i]) += data.row(i);
            counts[a.cluster[i]] += 1;
        }
        std::vector<bool> reseeded(n, false);
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centroids.row(c) = sums.row(c) / counts[c];
            } else {
                // empty cluster: reseed at the point farthest from its centroid
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (reseeded[i]) continue;
                    if (a.sq_dist[i] > far_d) {
                        far_d = a.sq_dist[i];
                        far = i;
                    }
                }
                centroids.row(c) = data.row(far);
                reseeded[far] = true;
            }
        }

        Assignment next = assign_all(data, centroids);
        fit.wcss_trace.push_back(next.wcss);
        fit.iterations = iter + 1;
        bool stable = next.cluster == a.cluster;
        a = std::move(next);
        if (stable) break;
    }

    fit.centroids = std::move(centroids);
    fit.assignment = std::move(a.cluster);
    fit.wcss = a.wcss;
    return fit;
}

// Grow a centroid set to k rows by repeatedly adding the data row farthest
// from the current set.
Eigen::MatrixXd grow_centroids(const Eigen::MatrixXd& prev,
                               const Eigen::MatrixXd& data, int k) {
    Eigen::MatrixXd centroids(k, data.cols());
    centroids.topRows(prev.rows()) = prev;
    std::vector<double> d2(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < prev.rows(); ++c)
            best = std::min(best, (data.row(i) - prev.row(c)).squaredNorm());
        d2[i] = best;
    }
    for (Eigen::Index c = prev.rows(); c < k; ++c) {
        Eigen::Index far = 0;
        for (Eigen::Index i = 1; i < data.rows(); ++i)
            if (d2[i] > d2[far]) far = i;
        centroids.row(c) = data.row(far);
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            d2[i] = std::min(d2[i],
                             (data.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

}  // namespace

KMeansFit kmeans_fit(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                     const KMeansOptions& opts) {
    if (k < 1) throw DataError("k must be >= 1");
    if (k > data.rows()) throw TooFewPointsError(k, data.rows());
    if (!data.allFinite()) throw DataError("k-means input must be finite");

    KMeansFit best;
    bool have = false;
    for (int r = 0; r < std::max(1, opts.n_restarts); ++r) {
        RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        KMeansFit fit = lloyd(data, kmeanspp_init(data, k, rng), opts.max_iter);
        if (!have || fit.wcss < best.wcss) {
            best = std::move(fit);
            have = true;
        }
    }
    return best;
}

StateModel fit_state_model(const Eigen::MatrixXd& raw_data, int k,
                           std::uint64_t seed, const KMeansOptions& opts) {
    StateModel model;
    model.scaler = MinMaxScaler::fit(raw_data);
    Eigen::MatrixXd scaled = model.scaler.transform(raw_data);
    KMeansFit fit = kmeans_fit(scaled, k, seed, opts);
    model.centroids = std::move(fit.centroids);
    model.h = k;
    model.seed = seed;
    return model;
}

StateId assign(const StateModel& model, const Eigen::VectorXd& scaled_point) {
    int best = 0;
    double best_d = (scaled_point.transpose() - model.centroids.row(0)).squaredNorm();
    for (Eigen::Index c = 1; c < model.centroids.rows(); ++c) {
        double d = (scaled_point.transpose() - model.centroids.row(c)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best + 1;
}

StateId assign_raw(const StateModel& model, const Eigen::VectorXd& raw_point) {
    return assign(model, model.scaler.transform(raw_point));
}

std::vector<std::pair<int, double>> wcss_curve(const Eigen::MatrixXd& data,
                                               std::vector<int> ks,
                                               std::uint64_t seed,
                                               const KMeansOptions& opts) {
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (!ks.empty() && ks.back() > data.rows())
        throw TooFewPointsError(ks.back(), data.rows());

    std::vector<std::pair<int, double>> curve;
    Eigen::MatrixXd prev_centroids;
    for (int k : ks) {
        KMeansFit best = kmeans_fit(data, k, derive_seed(seed, k), opts);
        if (prev_centroids.rows() > 0 && prev_centroids.rows() < k) {
            KMeansFit warm = lloyd(data, grow_centroids(prev_centroids, data, k),
                                   opts.max_iter);
            if (warm.wcss < best.wcss) best = std::move(warm);
        }
        curve.emplace_back(k, best.wcss);
        prev_centroids = best.centroids;
    }
    return curve;
}

}  // namespace icudp
