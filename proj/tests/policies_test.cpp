#include <doctest.h>

#include <cmath>

#include "icudp/ope.hpp"
#include "icudp/policies.hpp"
#include "icudp/synth.hpp"
#include "test_util.hpp"

using namespace icudp;

namespace {

LabeledTrajectory discharge_traj(std::string id, std::vector<StateId> states,
                                 bool ud = false) {
    LabeledTrajectory t;
    t.stay_id = std::move(id);
    t.states = std::move(states);
    t.terminal_event =
        ud ? TerminalEvent::DischargedUd : TerminalEvent::DischargedSd;
    return t;
}

GroundTruthModel small_truth(std::uint64_t seed) {
    GroundTruthModel::MakeOptions opts;
    opts.h = 6;
    opts.n_features = 3;
    return GroundTruthModel::make(opts, seed);
}

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("clinician replay keeps until the recorded discharge") {
    auto traj = discharge_traj("a", {4, 2, 1});
    CHECK(cp_recorded_action(traj, 0) == Action::Keep);
    CHECK(cp_recorded_action(traj, 1) == Action::Keep);
    CHECK(cp_recorded_action(traj, 2) == Action::Discharge);
    CHECK_THROWS_AS(cp_recorded_action(traj, 3), ReplayExhaustedError);

    LabeledTrajectory censored = traj;
    censored.terminal_event = TerminalEvent::Censored;
    CHECK_THROWS_AS(cp_recorded_action(censored, 2), ReplayExhaustedError);
}

TEST_CASE("the optimal-policy table depends only on the state") {
    Policy table;
    table.action = {Action::Keep, Action::Discharge, Action::Keep};
    PolicySpec spec = PolicySpec::make_op(table);
    auto traj = discharge_traj("a", {2, 2, 2});
    for (int step = 0; step < 3; ++step)
        CHECK(decide(spec, 2, ReplayContext{&traj, step, 5}) ==
              Action::Discharge);
}

TEST_CASE("rp1 decisions are reproducible from the seed") {
    auto traj = discharge_traj("stay-99", {1, 1, 1, 1, 1, 1, 1, 1});
    PolicySpec rp1 = PolicySpec::make_rp1();
    std::vector<Action> first, second;
    for (int step = 0; step < 8; ++step) {
        first.push_back(decide(rp1, 1, ReplayContext{&traj, step, 123}));
        second.push_back(decide(rp1, 1, ReplayContext{&traj, step, 123}));
    }
    CHECK(first == second);
    // and a different seed flips at least one of eight coins, almost surely
    std::vector<Action> other;
    for (int step = 0; step < 8; ++step)
        other.push_back(decide(rp1, 1, ReplayContext{&traj, step, 124}));
    CHECK(first != other);
}

TEST_CASE("rp1 coins are fair") {
    auto traj = discharge_traj("fair", std::vector<StateId>(4000, 1));
    PolicySpec rp1 = PolicySpec::make_rp1();
    int discharges = 0;
    for (int step = 0; step < 4000; ++step)
        if (decide(rp1, 1, ReplayContext{&traj, step, 7}) == Action::Discharge)
            ++discharges;
    CHECK(discharges > 1800);
    CHECK(discharges < 2200);
}

TEST_CASE("rp2 with gamma=0 discharges exactly when the clinician does") {
    PolicySpec rp2 = PolicySpec::make_rp2(0.0);
    for (int len : {1, 2, 5}) {
        auto traj = discharge_traj("s" + std::to_string(len),
                                   std::vector<StateId>(len, 1));
        for (int step = 0; step + 1 < len; ++step)
            CHECK(decide(rp2, 1, ReplayContext{&traj, step, 3}) ==
                  Action::Keep);
        CHECK(decide(rp2, 1, ReplayContext{&traj, len - 1, 3}) ==
              Action::Discharge);
    }
}

TEST_CASE("rp2 with gamma=1 extends every stay") {
    PolicySpec rp2 = PolicySpec::make_rp2(1.0);
    for (int i = 0; i < 20; ++i) {
        auto traj = discharge_traj("s" + std::to_string(i), {3, 2, 1});
        CHECK(decide(rp2, 1, ReplayContext{&traj, 2, static_cast<std::uint64_t>(i)}) ==
              Action::Keep);
    }
}

TEST_CASE("rp2 rejects gamma outside the unit interval") {
    CHECK_THROWS_AS(PolicySpec::make_rp2(-0.1), DataError);
    CHECK_THROWS_AS(PolicySpec::make_rp2(1.1), DataError);
}

TEST_CASE("gamma matching is the deferred-stay fraction") {
    // OP discharges state 1, keeps state 2
    Policy op;
    op.action = {Action::Discharge, Action::Keep};
    std::vector<LabeledTrajectory> test;
    // 3 stays that visit state 1 (OP discharges on record), 1 that never does
    test.push_back(discharge_traj("a", {2, 1}));
    test.push_back(discharge_traj("b", {1}));
    test.push_back(discharge_traj("c", {2, 2, 1}));
    test.push_back(discharge_traj("d", {2, 2}));
    CHECK(match_rp2_gamma(op, test) == doctest::Approx(0.25));

    Policy discharge_all = Policy::discharge_everywhere(2);
    CHECK(match_rp2_gamma(discharge_all, test) == 0.0);
    CHECK_THROWS_AS(match_rp2_gamma(op, std::vector<LabeledTrajectory>{}),
                    DataError);
}

TEST_CASE("matched rp2 discharges as many stays as OP in expectation") {
    GroundTruthModel gt = small_truth(11);
    auto cohort = sample_cohort(gt, 2000, 21);
    auto test = filter_discharged(cohort);
    REQUIRE(test.size() >= 1000);

    TransitionModel model = gt.to_transition_model();
    CostSpec cost = CostSpec::uniform(gt.h_true, 2.0);
    Policy op = policy_iteration(model, cost).policy;
    double gamma = match_rp2_gamma(op, test);

    int op_discharged = 0;
    for (const auto& t : test)
        if (op_discharge_step(op, t) >= 0) ++op_discharged;

    PolicySpec rp2 = PolicySpec::make_rp2(gamma);
    int rp2_discharged = 0;
    for (const auto& t : test) {
        int last = t.length() - 1;
        if (decide(rp2, t.states[last], ReplayContext{&t, last, 77}) ==
            Action::Discharge)
            ++rp2_discharged;
    }

    // binomial check at the 0.01 significance level (z = 2.576)
    double n = static_cast<double>(test.size());
    double expect = n * (1.0 - gamma);
    double sigma = std::sqrt(n * gamma * (1.0 - gamma));
    CHECK(op_discharged == static_cast<int>(expect + 0.5));
    CHECK(std::abs(rp2_discharged - expect) <= 2.576 * sigma + 1.0);
}

TEST_CASE("op_discharge_step scans the recorded states in order") {
    Policy op;
    op.action = {Action::Keep, Action::Discharge, Action::Keep};
    CHECK(op_discharge_step(op, discharge_traj("a", {1, 3, 2, 1})) == 2);
    CHECK(op_discharge_step(op, discharge_traj("b", {2})) == 0);
    CHECK(op_discharge_step(op, discharge_traj("c", {1, 3, 3})) == -1);
}

}  // TEST_SUITE
