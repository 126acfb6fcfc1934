#include <doctest.h>

#include <cmath>

#include "icudp/rng.hpp"
#include "icudp/transitions.hpp"
#include "test_util.hpp"

using namespace icudp;
using test::model_from;

namespace {

LabeledTrajectory traj(std::string id, std::vector<StateId> states,
                       TerminalEvent ev) {
    LabeledTrajectory t;
    t.stay_id = std::move(id);
    t.states = std::move(states);
    t.terminal_event = ev;
    return t;
}

// simulate keep-chain trajectories of fixed length from a known matrix
std::vector<LabeledTrajectory> simulate_chain(const Eigen::MatrixXd& keep,
                                              int n_trajs, int len,
                                              std::uint64_t seed) {
    const int h = static_cast<int>(keep.rows());
    std::vector<std::vector<double>> rows(h, std::vector<double>(h));
    for (int x = 0; x < h; ++x)
        for (int y = 0; y < h; ++y) rows[x][y] = keep(x, y);
    std::vector<LabeledTrajectory> out;
    for (int i = 0; i < n_trajs; ++i) {
        RngStream rng(derive_seed(seed, i));
        LabeledTrajectory t;
        t.stay_id = "sim-" + std::to_string(i);
        t.terminal_event = TerminalEvent::Censored;
        int x = rng.uniform_int(h);
        for (int s = 0; s < len; ++s) {
            t.states.push_back(x + 1);
            x = rng.categorical(rows[x]);
        }
        out.push_back(std::move(t));
    }
    return out;
}

Eigen::MatrixXd random_stochastic(int h, std::uint64_t seed) {
    RngStream rng(seed);
    Eigen::MatrixXd keep(h, h);
    for (int x = 0; x < h; ++x) {
        double sum = 0.0;
        for (int y = 0; y < h; ++y) {
            keep(x, y) = 0.1 + rng.uniform01();
            sum += keep(x, y);
        }
        keep.row(x) /= sum;
    }
    return keep;
}

}  // namespace

TEST_SUITE("transitions") {

TEST_CASE("keep matrix from hand-countable trajectories") {
    // two departures from state 1: one self-loop, one to state 2
    auto m = estimate_keep_matrix({traj("a", {1, 1, 2}, TerminalEvent::Censored)},
                                  2);
    CHECK(m(0, 0) == doctest::Approx(0.5));
    CHECK(m(0, 1) == doctest::Approx(0.5));
    // state 2 never observed under keep: self-loop fallback
    CHECK(m(1, 1) == 1.0);
    CHECK(m(1, 0) == 0.0);
}

TEST_CASE("constant trajectory gives a pure self-loop") {
    auto m = estimate_keep_matrix(
        {traj("a", {3, 3, 3, 3}, TerminalEvent::Censored)}, 3);
    CHECK(m(2, 2) == 1.0);
    CHECK(m(0, 0) == 1.0);  // unobserved rows are identity
    CHECK(m(1, 1) == 1.0);
}

TEST_CASE("rows are stochastic within 1e-12") {
    auto trajs = simulate_chain(random_stochastic(6, 9), 50, 30, 17);
    auto model = estimate_transition_model(trajs, 6);
    for (int x = 0; x < 6; ++x)
        CHECK(std::abs(model.keep.row(x).sum() - 1.0) <= 1e-12);
}

TEST_CASE("discharge outcomes follow the hand count with smoothing") {
    std::vector<LabeledTrajectory> trajs = {
        traj("a", {1}, TerminalEvent::DischargedSd),
        traj("b", {1}, TerminalEvent::DischargedSd),
        traj("c", {1}, TerminalEvent::DischargedUd),
        traj("d", {2, 1}, TerminalEvent::InHospitalDeath),
    };
    // raw count: (1 UD + 1 IHD) / (3 discharges + 1 IHD) = 0.5, and the
    // add-half smoothing keeps it there: (2 + .5)/(4 + 1) = 0.5
    auto [p_ud, p_sd] = estimate_discharge_outcomes(trajs, 2);
    CHECK(p_ud(0) == 0.5);
    CHECK(p_sd(0) == 0.5);
}

TEST_CASE("state with only successful discharges sits at the smoothing floor") {
    std::vector<LabeledTrajectory> trajs = {
        traj("a", {1}, TerminalEvent::DischargedSd),
        traj("b", {1}, TerminalEvent::DischargedSd),
        traj("c", {1}, TerminalEvent::DischargedSd),
    };
    auto [p_ud, p_sd] = estimate_discharge_outcomes(trajs, 1);
    CHECK(p_ud(0) == doctest::Approx(0.5 / 4.0));
    CHECK(p_sd(0) == doctest::Approx(1.0 - 0.5 / 4.0));
}

TEST_CASE("states never discharged fall back to the global rate") {
    std::vector<LabeledTrajectory> trajs = {
        traj("a", {1}, TerminalEvent::DischargedUd),
        traj("b", {1}, TerminalEvent::DischargedSd),
        traj("c", {1}, TerminalEvent::DischargedSd),
        traj("d", {2, 2, 2}, TerminalEvent::Censored),
    };
    auto [p_ud, p_sd] = estimate_discharge_outcomes(trajs, 2);
    CHECK(p_ud(1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("p_ud + p_sd is exactly one") {
    auto trajs = simulate_chain(random_stochastic(5, 3), 40, 10, 23);
    trajs.push_back(traj("x", {1, 2}, TerminalEvent::DischargedUd));
    trajs.push_back(traj("y", {3}, TerminalEvent::DischargedSd));
    auto model = estimate_transition_model(trajs, 5);
    for (int x = 0; x < 5; ++x)
        CHECK(model.p_ud(x) + model.p_sd(x) == 1.0);
}

TEST_CASE("censored stays contribute keep transitions but no outcomes") {
    std::vector<LabeledTrajectory> trajs = {
        traj("a", {1, 2}, TerminalEvent::Censored),
        traj("b", {1}, TerminalEvent::DischargedSd),
    };
    auto model = estimate_transition_model(trajs, 2);
    CHECK(model.keep_exposure(0) == 1.0);
    CHECK(model.outcome_events(0) == 1.0);
    CHECK(model.outcome_events(1) == 0.0);
}

TEST_CASE("counting identity: transitions = visits minus terminals") {
    auto trajs = simulate_chain(random_stochastic(4, 5), 30, 12, 31);
    auto model = estimate_transition_model(trajs, 4);
    long visits = 0;
    for (const auto& t : trajs) visits += t.length();
    CHECK(model.keep_counts.sum() ==
          doctest::Approx(static_cast<double>(visits - 30)));
}

TEST_CASE("estimator consistency: row L1 error shrinks with sample size") {
    Eigen::MatrixXd truth = random_stochastic(5, 101);
    auto max_row_l1 = [&](long n_transitions) {
        int len = 21;
        int n_trajs = static_cast<int>(n_transitions / (len - 1));
        auto trajs = simulate_chain(truth, n_trajs, len, 47);
        auto est = estimate_keep_matrix(trajs, 5);
        double worst = 0.0;
        for (int x = 0; x < 5; ++x)
            worst = std::max(worst, (est.row(x) - truth.row(x)).lpNorm<1>());
        return worst;
    };
    double coarse = max_row_l1(1000);
    double fine = max_row_l1(100000);
    CHECK(fine < coarse);
    CHECK(fine <= 0.05);
}

TEST_CASE("validate_r2 is exact when the model matches the test set") {
    auto trajs = simulate_chain(random_stochastic(4, 8), 60, 15, 53);
    trajs.push_back(traj("t1", {1, 2, 3}, TerminalEvent::DischargedSd));
    trajs.push_back(traj("t2", {2, 4}, TerminalEvent::DischargedUd));
    // smoothing off so the model reproduces the empirical frequencies exactly
    auto model = estimate_transition_model(trajs, 4, 0.0);
    R2Triple r2 = validate_r2(model, trajs);
    CHECK(r2.keep == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r2.sd == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r2.ud == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("validate_r2 on held-out data from the same chain stays high") {
    Eigen::MatrixXd truth = random_stochastic(5, 13);
    auto train = simulate_chain(truth, 400, 26, 61);
    auto test = simulate_chain(truth, 400, 26, 62);
    auto model = estimate_transition_model(train, 5);
    R2Triple r2 = validate_r2(model, test);
    CHECK(r2.keep >= 0.95);
}

TEST_CASE("a uniform model scores well below the matched model") {
    Eigen::MatrixXd truth = random_stochastic(5, 29);
    auto test = simulate_chain(truth, 400, 26, 71);
    auto matched = estimate_transition_model(test, 5);

    TransitionModel uniform = model_from(
        Eigen::MatrixXd::Constant(5, 5, 0.2), Eigen::VectorXd::Constant(5, 0.5));
    R2Triple r2_matched = validate_r2(matched, test);
    R2Triple r2_uniform = validate_r2(uniform, test);
    CHECK(r2_uniform.keep < r2_matched.keep);
    CHECK(r2_uniform.keep < 0.9);
}

TEST_CASE("validate_r2 rejects an empty test set") {
    auto model = model_from(Eigen::MatrixXd::Identity(2, 2),
                            Eigen::VectorXd::Constant(2, 0.5));
    std::vector<LabeledTrajectory> empty;
    CHECK_THROWS_AS(validate_r2(model, empty), EmptyTestError);
    // censored single-state stays carry no transitions either
    std::vector<LabeledTrajectory> no_transitions = {
        traj("a", {1}, TerminalEvent::Censored)};
    CHECK_THROWS_AS(validate_r2(model, no_transitions), EmptyTestError);
}

TEST_CASE("sojourn times are all one period when the self-loop is zero") {
    Eigen::MatrixXd keep(2, 2);
    keep << 0.0, 1.0, 1.0, 0.0;
    auto model = model_from(keep, Eigen::VectorXd::Constant(2, 0.5));
    SojournFit fit = sojourn_exponential_check(model, 1, 500, 1);
    CHECK_FALSE(fit.absorbing);
    CHECK(fit.lifetime_counts.size() == 1);
    CHECK(fit.lifetime_counts[0] == 500.0);
}

TEST_CASE("geometric sojourns recover lambda = ln 2 for a half self-loop") {
    Eigen::MatrixXd keep(2, 2);
    keep << 0.5, 0.5, 0.2, 0.8;
    auto model = model_from(keep, Eigen::VectorXd::Constant(2, 0.5));
    SojournFit fit = sojourn_exponential_check(model, 1, 10000, 7);
    CHECK(fit.lambda == doctest::Approx(std::log(2.0)).epsilon(0.10));
    CHECK(fit.r2 >= 0.95);
}

TEST_CASE("absorbing self-loop states are flagged instead of fitted") {
    Eigen::MatrixXd keep(2, 2);
    keep << 1.0, 0.0, 0.5, 0.5;
    auto model = model_from(keep, Eigen::VectorXd::Constant(2, 0.5));
    SojournFit fit = sojourn_exponential_check(model, 1, 500, 1);
    CHECK(fit.absorbing);
}

TEST_CASE("sojourn check validates its inputs") {
    auto model = model_from(Eigen::MatrixXd::Identity(2, 2),
                            Eigen::VectorXd::Constant(2, 0.5));
    CHECK_THROWS_AS(sojourn_exponential_check(model, 1, 50, 1), DataError);
    CHECK_THROWS_AS(sojourn_exponential_check(model, 3, 500, 1), DataError);
}

}  // TEST_SUITE
