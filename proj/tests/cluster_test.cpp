#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "icudp/cluster.hpp"
#include "icudp/rng.hpp"

using namespace icudp;

namespace {

Eigen::MatrixXd uniform_cloud(int n, int f, std::uint64_t seed) {
    RngStream rng(seed);
    Eigen::MatrixXd data(n, f);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) data(i, j) = rng.uniform01();
    return data;
}

// exhaustive optimal 1-D 2-means over contiguous splits of sorted data
double best_1d_two_means_wcss(std::vector<double> xs,
                              std::vector<double>* centroids_out) {
    std::sort(xs.begin(), xs.end());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t cut = 1; cut < xs.size(); ++cut) {
        auto sse = [&](std::size_t lo, std::size_t hi, double* c) {
            double m = 0.0;
            for (std::size_t i = lo; i < hi; ++i) m += xs[i];
            m /= static_cast<double>(hi - lo);
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) s += (xs[i] - m) * (xs[i] - m);
            *c = m;
            return s;
        };
        double c1 = 0.0, c2 = 0.0;
        double total = sse(0, cut, &c1) + sse(cut, xs.size(), &c2);
        if (total < best) {
            best = total;
            if (centroids_out) *centroids_out = {c1, c2};
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("min-max scaler maps the observed range onto [0,1]") {
    Eigen::MatrixXd data(2, 1);
    data << 0.0, 10.0;
    auto scaler = MinMaxScaler::fit(data);
    Eigen::VectorXd p(1);
    p << 5.0;
    CHECK(scaler.transform(p)(0) == 0.5);
    p << 0.0;
    CHECK(scaler.transform(p)(0) == 0.0);
    p << 10.0;
    CHECK(scaler.transform(p)(0) == 1.0);
}

TEST_CASE("constant features map to zero") {
    Eigen::MatrixXd data(3, 1);
    data << 3.0, 3.0, 3.0;
    auto scaler = MinMaxScaler::fit(data);
    Eigen::VectorXd p(1);
    p << 3.0;
    CHECK(scaler.transform(p)(0) == 0.0);
}

TEST_CASE("scaled training data lies in the unit box") {
    Eigen::MatrixXd data = uniform_cloud(40, 3, 5);
    data *= 25.0;
    auto scaler = MinMaxScaler::fit(data);
    Eigen::MatrixXd scaled = scaler.transform(data);
    CHECK(scaled.minCoeff() >= 0.0);
    CHECK(scaled.maxCoeff() <= 1.0);
}

TEST_CASE("separated duplicates split into their two locations") {
    Eigen::MatrixXd data(10, 2);
    for (int i = 0; i < 5; ++i) data.row(i) << 0.0, 0.0;
    for (int i = 5; i < 10; ++i) data.row(i) << 1.0, 1.0;
    auto fit = kmeans_fit(data, 2, 3);
    CHECK(fit.wcss == doctest::Approx(0.0));
    std::vector<double> sums = {fit.centroids.row(0).sum(),
                                fit.centroids.row(1).sum()};
    std::sort(sums.begin(), sums.end());
    CHECK(sums[0] == doctest::Approx(0.0));
    CHECK(sums[1] == doctest::Approx(2.0));
}

TEST_CASE("k equal to n gives zero within-cluster scatter") {
    Eigen::MatrixXd data = uniform_cloud(8, 2, 11);
    auto fit = kmeans_fit(data, 8, 1);
    CHECK(fit.wcss == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("k greater than n is rejected") {
    Eigen::MatrixXd data = uniform_cloud(4, 2, 1);
    CHECK_THROWS_AS(kmeans_fit(data, 5, 1), TooFewPointsError);
}

TEST_CASE("1-D clustering matches the exhaustive contiguous-split oracle") {
    std::vector<double> xs = {0.0, 0.1, 0.9, 1.0};
    Eigen::MatrixXd data(4, 1);
    for (int i = 0; i < 4; ++i) data(i, 0) = xs[i];

    std::vector<double> oracle_centroids;
    double oracle_wcss = best_1d_two_means_wcss(xs, &oracle_centroids);

    auto fit = kmeans_fit(data, 2, 17);
    CHECK(fit.wcss == doctest::Approx(oracle_wcss).epsilon(1e-12));
    std::vector<double> got = {fit.centroids(0, 0), fit.centroids(1, 0)};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(0.05));
    CHECK(got[1] == doctest::Approx(0.95));
}

TEST_CASE("Lloyd objective never increases") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Eigen::MatrixXd data = uniform_cloud(60, 3, derive_seed(100, seed));
        auto fit = kmeans_fit(data, 5, seed, KMeansOptions{300, 1});
        for (std::size_t i = 1; i < fit.wcss_trace.size(); ++i)
            CHECK(fit.wcss_trace[i] <= fit.wcss_trace[i - 1] + 1e-12);
    }
}

TEST_CASE("every training point ends up with its nearest centroid") {
    Eigen::MatrixXd data = uniform_cloud(80, 3, 23);
    auto fit = kmeans_fit(data, 6, 23);
    for (int i = 0; i < data.rows(); ++i) {
        double assigned =
            (data.row(i) - fit.centroids.row(fit.assignment[i])).squaredNorm();
        for (int c = 0; c < 6; ++c) {
            double d = (data.row(i) - fit.centroids.row(c)).squaredNorm();
            CHECK(assigned <= d + 1e-12);
        }
    }
}

TEST_CASE("identical data and seed reproduce centroids bit for bit") {
    Eigen::MatrixXd data = uniform_cloud(50, 4, 31);
    auto a = kmeans_fit(data, 4, 9);
    auto b = kmeans_fit(data, 4, 9);
    CHECK(a.centroids == b.centroids);
    CHECK(a.wcss == b.wcss);
}

TEST_CASE("assign returns the matching centroid and breaks ties low") {
    StateModel model;
    model.h = 3;
    model.centroids.resize(3, 2);
    model.centroids << 0.0, 0.0, 1.0, 0.0, 0.3, 0.7;
    model.scaler.mins = Eigen::VectorXd::Zero(2);
    model.scaler.maxs = Eigen::VectorXd::Ones(2);

    Eigen::VectorXd p(2);
    p << 0.3, 0.7;
    CHECK(assign(model, p) == 3);  // exact centroid match
    p << 0.5, 0.0;                 // equidistant between centroids 1 and 2
    CHECK(assign(model, p) == 1);
}

TEST_CASE("assign agrees with a linear-scan oracle on random points") {
    Eigen::MatrixXd data = uniform_cloud(30, 3, 41);
    StateModel model = fit_state_model(data, 5, 41);
    RngStream rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd p(3);
        for (int j = 0; j < 3; ++j) p(j) = rng.uniform01();
        int best = 0;
        double best_d = (p.transpose() - model.centroids.row(0)).squaredNorm();
        for (int c = 1; c < 5; ++c) {
            double d = (p.transpose() - model.centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        CHECK(assign(model, p) == best + 1);
    }
}

TEST_CASE("wcss curve endpoints match the closed forms") {
    Eigen::MatrixXd data = uniform_cloud(12, 2, 51);
    auto curve = wcss_curve(data, {1, 12}, 3);

    // k = 1: total squared scatter about the global mean
    Eigen::RowVectorXd mean = data.colwise().mean();
    double scatter = (data.rowwise() - mean).squaredNorm();
    CHECK(curve[0].second == doctest::Approx(scatter).epsilon(1e-12));
    // k = n: zero
    CHECK(curve[1].second == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("wcss curve is weakly decreasing in k") {
    Eigen::MatrixXd data = uniform_cloud(70, 3, 61);
    auto curve = wcss_curve(data, {1, 2, 3, 5, 8, 13}, 7);
    for (std::size_t i = 1; i < curve.size(); ++i)
        CHECK(curve[i].second <= curve[i - 1].second + 1e-12);
}

TEST_CASE("separated duplicates have zero wcss at k=2") {
    Eigen::MatrixXd data(10, 2);
    for (int i = 0; i < 5; ++i) data.row(i) << 0.0, 0.0;
    for (int i = 5; i < 10; ++i) data.row(i) << 1.0, 1.0;
    auto curve = wcss_curve(data, {2}, 5);
    CHECK(curve[0].second == doctest::Approx(0.0));
}

}  // TEST_SUITE
