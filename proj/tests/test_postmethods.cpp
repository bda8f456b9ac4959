#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "fairbench/errors.hpp"
#include "fairbench/postmethods.hpp"
#include "fairbench/rng.hpp"
#include "oracles.hpp"

using namespace fairbench;

TEST_SUITE_BEGIN("postmethods");

namespace {

std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

using oracles::cartesian_oracle;
using oracles::evaluate_policy_naively;
using oracles::grid_oracle;
using oracles::random_fit_instance;
using oracles::CartesianOracleResult;
using oracles::GridOracleResult;
using oracles::PolicyOutcome;
using oracles::RandomFitInstance;

}  // namespace

TEST_CASE("fit selects the top score per group in the exact-parity example") {
    const std::vector<double> scores = {0.9, 0.7, 0.2, 0.8, 0.3, 0.1};
    const std::vector<int> labels = {1, 0, 0, 1, 0, 0};
    const auto enc = oracles::partition_encoding({0, 0, 0, 1, 1, 1}, 2);

    const ThresholdPolicy policy = fit_error_parity(scores, labels, unit_weights(6), enc,
                                                    FairnessNotion::dem_par, 0.0);
    CHECK_FALSE(policy.infeasible);
    CHECK(policy.achieved_violation == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(policy.fit_accuracy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(policy.thresholds[0] == doctest::Approx(0.9));
    CHECK(policy.thresholds[1] == doctest::Approx(0.8));

    const std::vector<int> hard = apply_thresholds(scores, enc, policy);
    CHECK(hard == std::vector<int>{1, 0, 0, 1, 0, 0});
}

TEST_CASE("a loose tolerance admits the uniform 0.5 policy") {
    // naive thresholding is accuracy-perfect here, and its violation is small
    const std::vector<double> scores = {0.9, 0.6, 0.2, 0.8, 0.55, 0.1};
    const std::vector<int> labels = {1, 1, 0, 1, 1, 0};
    const auto enc = oracles::partition_encoding({0, 0, 0, 1, 1, 1}, 2);

    const ThresholdPolicy policy = fit_error_parity(scores, labels, unit_weights(6), enc,
                                                    FairnessNotion::dem_par, 10.0);
    CHECK_FALSE(policy.infeasible);
    CHECK(policy.fit_accuracy == doctest::Approx(1.0));
}

TEST_CASE("a single group always fits with zero violation") {
    const std::vector<double> scores = {0.9, 0.4, 0.6, 0.2};
    const std::vector<int> labels = {1, 0, 1, 0};
    const auto enc = oracles::partition_encoding({0, 0, 0, 0}, 1);
    const ThresholdPolicy policy = fit_error_parity(scores, labels, unit_weights(4), enc,
                                                    FairnessNotion::dem_par, 0.0);
    CHECK_FALSE(policy.infeasible);
    CHECK(policy.achieved_violation == 0.0);
    CHECK(policy.fit_accuracy == doctest::Approx(1.0));
}

TEST_CASE("apply_thresholds") {
    const std::vector<double> scores = {0.7, 0.4, 0.6, 0.3};
    const auto enc = oracles::partition_encoding({0, 0, 1, 1}, 2);
    ThresholdPolicy policy;
    policy.group_names = enc.group_names;

    SUBCASE("all thresholds 0.5 reduce to harden") {
        policy.thresholds = {0.5, 0.5};
        const std::vector<int> hard = apply_thresholds(scores, enc, policy);
        CHECK(hard == harden(scores));
    }

    SUBCASE("a saturating threshold silences its group") {
        policy.thresholds = {1.1, 0.0};
        const std::vector<int> hard = apply_thresholds(scores, enc, policy);
        CHECK(hard == std::vector<int>{0, 0, 1, 1});
    }

    SUBCASE("mismatched groups are an application error") {
        policy.thresholds = {0.5, 0.5};
        policy.group_names = {"other", "names"};
        CHECK_THROWS_AS(apply_thresholds(scores, enc, policy), FitError);
    }

    SUBCASE("raising a score never turns a prediction off") {
        policy.thresholds = {0.65, 0.45};
        Rng rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> base(4);
            for (double& s : base) s = rng.uniform();
            const std::vector<int> before = apply_thresholds(base, enc, policy);
            std::vector<double> raised = base;
            const std::size_t which = rng.uniform_int(4);
            raised[which] = std::min(1.0, raised[which] + rng.uniform() * 0.5);
            const std::vector<int> after = apply_thresholds(raised, enc, policy);
            for (std::size_t i = 0; i < 4; ++i)
                if (i != which) CHECK(after[i] == before[i]);
            CHECK(after[which] >= before[which]);
        }
    }
}

TEST_CASE("fit preconditions") {
    const auto enc = oracles::partition_encoding({0, 0, 1, 1}, 2);
    const std::vector<double> scores = {0.9, 0.2, 0.8, 0.4};
    const std::vector<double> w = unit_weights(4);

    // group g1 has no positive labels: eq_opp cannot be fitted
    const std::vector<int> labels = {1, 0, 0, 0};
    try {
        fit_error_parity(scores, labels, w, enc, FairnessNotion::eq_opp, 0.1);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("g1") != std::string::npos);
    }

    CHECK_THROWS_AS(fit_error_parity(scores, labels, w, enc, FairnessNotion::forp, 0.1),
                    FitError);
}

TEST_CASE("fit matches the independent grid oracle and respects the cartesian bound") {
    Rng rng(20250);
    int feasible_seen = 0;
    int infeasible_seen = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const FairnessNotion notion =
            std::array{FairnessNotion::dem_par, FairnessNotion::eq_opp,
                       FairnessNotion::pred_eq}[trial % 3];
        const RandomFitInstance instance = random_fit_instance(rng);
        const double tolerance =
            std::array{0.0, 0.05, 0.15, 0.4, 1.0}[rng.uniform_int(5)];

        const auto enc = oracles::partition_encoding(instance.groups, instance.group_count);
        const ThresholdPolicy policy = fit_error_parity(
            instance.scores, instance.labels, instance.weights, enc, notion, tolerance);
        const GridOracleResult oracle = grid_oracle(instance, notion, tolerance);

        // replaying the fitted policy reproduces its recorded numbers
        const PolicyOutcome replay =
            evaluate_policy_naively(policy.thresholds, instance.scores, instance.labels,
                                    instance.weights, instance.groups, instance.group_count,
                                    notion);
        REQUIRE(replay.defined);
        CHECK(replay.violation == doctest::Approx(policy.achieved_violation).epsilon(1e-10));
        CHECK(replay.accuracy == doctest::Approx(policy.fit_accuracy).epsilon(1e-10));

        if (oracle.any_feasible) {
            ++feasible_seen;
            CHECK_FALSE(policy.infeasible);
            CHECK(policy.achieved_violation <= tolerance + 1e-12);
            CHECK(std::abs(policy.fit_accuracy - oracle.best_accuracy) <= 1e-9);

            const CartesianOracleResult cartesian =
                cartesian_oracle(instance, notion, tolerance);
            REQUIRE(cartesian.any_feasible);
            CHECK(policy.fit_accuracy <= cartesian.best_accuracy + 1e-9);
        } else {
            ++infeasible_seen;
            CHECK(policy.infeasible);
            CHECK(policy.achieved_violation == doctest::Approx(oracle.min_violation).epsilon(1e-10));
        }
    }
    CHECK(feasible_seen > 0);  // the sweep must exercise both branches
    CHECK(infeasible_seen >= 0);
}

TEST_CASE("threshold policies survive a JSON round trip") {
    const std::vector<double> scores = {0.9, 0.7, 0.2, 0.8, 0.3, 0.1};
    const std::vector<int> labels = {1, 0, 0, 1, 0, 0};
    const auto enc = oracles::partition_encoding({0, 0, 0, 1, 1, 1}, 2);
    const ThresholdPolicy policy = fit_error_parity(scores, labels, unit_weights(6), enc,
                                                    FairnessNotion::dem_par, 0.0);
    const ThresholdPolicy back = policy_from_json(policy_to_json(policy));
    CHECK(back.thresholds == policy.thresholds);
    CHECK(back.notion == policy.notion);
    CHECK(back.tolerance == policy.tolerance);
    CHECK(back.group_names == policy.group_names);
    CHECK(back.infeasible == policy.infeasible);
    CHECK(apply_thresholds(scores, enc, back) == apply_thresholds(scores, enc, policy));
}

TEST_CASE("with infinite tolerance the policy beats the plain 0.5 threshold") {
    Rng rng(31337);
    for (int trial = 0; trial < 30; ++trial) {
        const RandomFitInstance instance = random_fit_instance(rng);
        const auto enc = oracles::partition_encoding(instance.groups, instance.group_count);
        const ThresholdPolicy policy = fit_error_parity(
            instance.scores, instance.labels, instance.weights, enc, FairnessNotion::dem_par,
            std::numeric_limits<double>::infinity());
        const std::vector<int> naive = harden(instance.scores);
        const double naive_accuracy = accuracy(naive, instance.labels, instance.weights);
        CHECK(policy.fit_accuracy >= naive_accuracy - 1e-12);
    }
}

TEST_SUITE_END();
