#include <doctest.h>

#include "icudp/mdp.hpp"
#include "test_util.hpp"

using namespace icudp;
using test::iterative_policy_value;
using test::model_from;
using test::random_model;

TEST_SUITE("mdp") {

TEST_CASE("single self-loop state: closed-form keep and discharge values") {
    // keep forever: J = 1/(1-alpha) = 20; discharge into certain UD with
    // g_UD = 3: 0.95 * 3/0.05 = 57, so the optimal action is keep
    auto model = model_from(Eigen::MatrixXd::Ones(1, 1),
                            Eigen::VectorXd::Ones(1));
    CostSpec cost = CostSpec::uniform(1, 3.0);

    ValueFunction keep_val =
        policy_evaluation(Policy::keep_everywhere(1), model, cost);
    CHECK(keep_val.at(1) == doctest::Approx(20.0).epsilon(1e-12));

    ValueFunction disch_val =
        policy_evaluation(Policy::discharge_everywhere(1), model, cost);
    CHECK(disch_val.at(1) == doctest::Approx(57.0).epsilon(1e-12));

    SolveResult res = policy_iteration(model, cost);
    CHECK(res.policy.at(1) == Action::Keep);
    CHECK(std::abs(res.value.at(1) - 20.0) <= 1e-9);
    CHECK(res.iterations <= 2);
}

TEST_CASE("zero UD penalty discharges the single state") {
    auto model = model_from(Eigen::MatrixXd::Ones(1, 1),
                            Eigen::VectorXd::Ones(1));
    CostSpec cost = CostSpec::uniform(1, 0.0);
    SolveResult res = policy_iteration(model, cost);
    CHECK(res.policy.at(1) == Action::Discharge);
    CHECK(std::abs(res.value.at(1)) <= 1e-12);
}

TEST_CASE("backup of the zero value function picks the cheaper action") {
    auto model = random_model(4, 7);
    CostSpec cost = CostSpec::uniform(4, 0.0);  // g_ud = g_sd = g_d = 0
    ValueFunction j = ValueFunction::zeros(4, cost);
    BackupResult res = bellman_backup(j, model, cost);
    for (int x = 1; x <= 4; ++x) {
        CHECK(res.value.at(x) == 0.0);  // min(1, 0)
        CHECK(res.greedy.at(x) == Action::Discharge);
    }
}

TEST_CASE("policy evaluation matches the fixed-point iteration oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto model = random_model(4, seed);
        RngStream rng(derive_seed(seed, 99));
        CostSpec cost = CostSpec::uniform(4, rng.uniform(0.5, 5.0));
        Policy mu;
        for (int x = 0; x < 4; ++x)
            mu.action.push_back(rng.bernoulli(0.5) ? Action::Keep
                                                   : Action::Discharge);
        ValueFunction exact = policy_evaluation(mu, model, cost);
        Eigen::VectorXd iter = iterative_policy_value(mu, model, cost, 10000);
        CHECK((exact.j - iter).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
}

TEST_CASE("discharge-everywhere with zero costs evaluates to zero") {
    auto model = random_model(5, 11);
    CostSpec cost = CostSpec::uniform(5, 0.0);
    ValueFunction v =
        policy_evaluation(Policy::discharge_everywhere(5), model, cost);
    CHECK(v.j.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("policy iteration equals exhaustive enumeration on random MDPs") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto model = random_model(8, derive_seed(1000, seed));
        RngStream rng(derive_seed(2000, seed));
        CostSpec cost = CostSpec::uniform(8, rng.uniform(0.5, 5.0));

        SolveResult pi = policy_iteration(model, cost);
        SolveResult enumd = enumerate_policies(model, cost);
        CHECK(pi.policy == enumd.policy);
        CHECK((pi.value.j - enumd.value.j).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("policy iteration and value iteration agree") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto model = random_model(8, derive_seed(3000, seed));
        RngStream rng(derive_seed(4000, seed));
        CostSpec cost = CostSpec::uniform(8, rng.uniform(0.5, 5.0));
        SolveResult pi = policy_iteration(model, cost);
        SolveResult vi = value_iteration(model, cost, 1e-8);
        CHECK((pi.value.j - vi.value.j).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
}

TEST_CASE("Bellman operator is an alpha-contraction") {
    auto model = random_model(6, 42);
    CostSpec cost = CostSpec::uniform(6, 2.0);
    RngStream rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        ValueFunction a = ValueFunction::zeros(6, cost);
        ValueFunction b = ValueFunction::zeros(6, cost);
        for (int x = 0; x < 6; ++x) {
            a.j(x) = rng.uniform(-50.0, 50.0);
            b.j(x) = rng.uniform(-50.0, 50.0);
        }
        double before = (a.j - b.j).lpNorm<Eigen::Infinity>();
        auto ta = bellman_backup(a, model, cost);
        auto tb = bellman_backup(b, model, cost);
        double after = (ta.value.j - tb.value.j).lpNorm<Eigen::Infinity>();
        CHECK(after <= cost.alpha * before + 1e-12);
    }
}

TEST_CASE("policy iteration improves monotonically") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto model = random_model(8, derive_seed(5000, seed));
        RngStream rng(derive_seed(6000, seed));
        CostSpec cost = CostSpec::uniform(8, rng.uniform(0.5, 5.0));
        SolveResult res = policy_iteration(model, cost);
        for (std::size_t k = 1; k < res.j_trace.size(); ++k)
            CHECK(((res.j_trace[k] - res.j_trace[k - 1]).array() <= 1e-12)
                      .all());
    }
}

TEST_CASE("solution is a Bellman fixed point with exact absorbing values") {
    auto model = random_model(8, 77);
    CostSpec cost = CostSpec::uniform(8, 2.5, 0.95, 1.0, 0.0, -0.5);
    SolveResult res = policy_iteration(model, cost);
    BackupResult backup = bellman_backup(res.value, model, cost);
    CHECK((backup.value.j - res.value.j).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(res.value.j_sd == cost.g_sd / (1.0 - cost.alpha));
    CHECK(res.value.j_ud == cost.g_ud / (1.0 - cost.alpha));
}

TEST_CASE("optimal cost is componentwise monotone in the UD penalty") {
    auto model = random_model(6, 123);
    for (double gud : {0.0, 0.5, 1.0, 2.0}) {
        CostSpec lo = CostSpec::uniform(6, gud);
        CostSpec hi = CostSpec::uniform(6, gud + 0.7);
        Eigen::VectorXd j_lo = policy_iteration(model, lo).value.j;
        Eigen::VectorXd j_hi = policy_iteration(model, hi).value.j;
        CHECK(((j_hi - j_lo).array() >= -1e-12).all());
    }
}

TEST_CASE("zero-penalty extreme discharges everywhere") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto model = random_model(7, derive_seed(7000, seed));
        CostSpec cost = CostSpec::uniform(7, 0.0);
        SolveResult res = policy_iteration(model, cost);
        for (int x = 1; x <= 7; ++x)
            CHECK(res.policy.at(x) == Action::Discharge);
    }
}

TEST_CASE("two symmetric states get the same action") {
    Eigen::MatrixXd keep(2, 2);
    keep << 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd p_ud = Eigen::VectorXd::Constant(2, 0.3);
    auto model = model_from(keep, p_ud);
    CostSpec cost = CostSpec::uniform(2, 2.0);
    SolveResult res = enumerate_policies(model, cost);
    CHECK(res.policy.at(1) == res.policy.at(2));
    CHECK(res.value.at(1) == doctest::Approx(res.value.at(2)));
}

TEST_CASE("heavy discounting makes values approach one-step costs") {
    auto model = random_model(5, 55);
    CostSpec cost = CostSpec::uniform(5, 3.0, 0.1);
    SolveResult res = value_iteration(model, cost, 1e-10);
    for (int x = 1; x <= 5; ++x) {
        double disch = cost.alpha * model.p_ud(x - 1) * cost.g_ud /
                       (1.0 - cost.alpha);
        double bound = std::min(1.0 + cost.alpha * 10.0 / 0.9, disch);
        CHECK(res.value.at(x) <= bound + 1e-9);
    }
    CHECK(res.iterations < 50);
}

TEST_CASE("value iteration leaves absorbing values untouched") {
    auto model = random_model(4, 66);
    CostSpec cost = CostSpec::uniform(4, 1.5, 0.95, 1.0, 0.0, -1.0);
    SolveResult res = value_iteration(model, cost, 1e-8);
    CHECK(res.value.j_sd == cost.g_sd / (1.0 - cost.alpha));
    CHECK(res.value.j_ud == cost.g_ud / (1.0 - cost.alpha));
}

TEST_CASE("enumeration rejects H > 12") {
    auto model = random_model(13, 5);
    CostSpec cost = CostSpec::uniform(13, 1.0);
    CHECK_THROWS_AS(enumerate_policies(model, cost), TooLargeError);
}

TEST_CASE("enumeration on H=1 compares both stationary policies") {
    auto model = model_from(Eigen::MatrixXd::Ones(1, 1),
                            Eigen::VectorXd::Ones(1));
    CostSpec cost = CostSpec::uniform(1, 3.0);
    SolveResult res = enumerate_policies(model, cost);
    CHECK(res.iterations == 2);
    CHECK(res.policy.at(1) == Action::Keep);
    CHECK(res.value.at(1) == doctest::Approx(20.0).epsilon(1e-12));
}

}  // TEST_SUITE
