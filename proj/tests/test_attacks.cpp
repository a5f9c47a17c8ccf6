#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "holdout/bounds.hpp"
#include "holdout/linear_scan.hpp"
#include "holdout/majority.hpp"
#include "holdout/naive_bayes.hpp"
#include "holdout/oracle.hpp"
#include "holdout/plurality.hpp"

using namespace holdout;

namespace {

LabelVector random_labels(std::size_t n, std::size_t m, std::uint64_t seed) {
    const AttackRandomness rnd(seed);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rnd.uniform_label(0x44, i, m);
    return LabelVector(std::move(y), m);
}

}  // namespace

TEST(Plurality, EmptyEvidenceGivesUniformGuess) {
    // A single query never clears the margin at n = 4, m = 2 unless it is perfect.
    const AccuracyVector alpha(4, {2});
    EXPECT_TRUE(above_threshold_queries(alpha, 2).empty());
    PluralityVote vote(3);
    std::vector<std::size_t> counts(3, 0);
    const AttackRandomness rnd(6);
    for (std::size_t p = 0; p < 3000; ++p) {
        vote.reset();
        ++counts[vote.decide(p, rnd)];
    }
    for (std::size_t c : counts) EXPECT_NEAR(static_cast<double>(c), 1000.0, 120.0);
}

TEST(Plurality, UnanimousVotesWin) {
    PluralityVote vote(4);
    for (int i = 0; i < 5; ++i) vote.add(2);
    EXPECT_EQ(vote.decide(0, AttackRandomness(1)), 2u);
}

TEST(Plurality, ThresholdMargin) {
    EXPECT_NEAR(plurality_threshold_margin(100, 4), std::sqrt(0.75) / (3.0 * 20.0), 1e-15);
    const AccuracyVector alpha(100, {20, 40, 30, 25});
    // cutoff = 0.25 + 0.01443 = 0.26443
    EXPECT_EQ(above_threshold_queries(alpha, 4), (std::vector<std::size_t>{1, 2}));
}

TEST(Plurality, BiasPositiveButNotAboveNaiveBayes) {
    double nb = 0.0, pl = 0.0;
    constexpr int kTrials = 6;
    for (int t = 0; t < kTrials; ++t) {
        const LabelVector y = random_labels(10'000, 2, 500 + t);
        HoldoutOracle a(y), b(y);
        const AttackRandomness rnd(t);
        nb += nb_attack(a, 2000, nullptr, rnd).bias();
        pl += thresholded_plurality_attack(b, 2000, rnd).bias();
    }
    EXPECT_GT(pl / kTrials, 0.0);
    EXPECT_LE(pl / kTrials, nb / kTrials);
}

TEST(Majority, FlipRuleOnSingleQuery) {
    const std::vector<Label> row = {1};
    const std::uint8_t keep[1] = {0};
    const std::uint8_t flip[1] = {1};
    EXPECT_EQ(majority_decide(0, row, keep, AttackRandomness(1)), 1u);
    EXPECT_EQ(majority_decide(0, row, flip, AttackRandomness(1)), 0u);
    EXPECT_EQ(majority_flips(AccuracyVector(10, {7})), (std::vector<std::uint8_t>{0}));
    EXPECT_EQ(majority_flips(AccuracyVector(10, {3})), (std::vector<std::uint8_t>{1}));
}

TEST(Majority, WorkedExample) {
    // Values (1, 1, 2) with accuracies (0.6, 0.4, 0.55): the second query flips.
    const std::vector<Label> row = {0, 0, 1};
    const auto flip = majority_flips(AccuracyVector(20, {12, 8, 11}));
    EXPECT_EQ(majority_decide(0, row, flip, AttackRandomness(1)), 1u);
}

TEST(Majority, RequiresTwoClasses) {
    HoldoutOracle oracle(random_labels(10, 3, 1));
    EXPECT_THROW(majority_attack_binary(oracle, 5, AttackRandomness(1)), UnsupportedError);
}

TEST(Majority, SingleQueryAgreesWithNaiveBayes) {
    // With k = 1 both rules copy or flip the query; they differ only on ties.
    for (std::uint64_t s = 0; s < 10; ++s) {
        const LabelVector y = random_labels(101, 2, s);
        HoldoutOracle a(y), b(y);
        const AttackRandomness rnd(s);
        const AttackOutcome nb = nb_attack(a, 1, nullptr, rnd);
        const AttackOutcome mj = majority_attack_binary(b, 1, rnd);
        EXPECT_EQ(nb.matches, mj.matches);
    }
}

TEST(LinearScan, BinaryResolvesOnePointPerQuery) {
    const LabelVector y = random_labels(1000, 2, 3);
    HoldoutOracle oracle(y);
    const AttackOutcome out = linear_scan_attack(oracle, 101, AttackRandomness(3));
    EXPECT_EQ(out.queries_used, 101u);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(out.prediction[i], y[i]);
}

class LinearScanFull : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LinearScanFull, ExhaustiveBudgetRecoversEverything) {
    const std::size_t m = GetParam(), n = 200;
    const LabelVector y = random_labels(n, m, m);
    HoldoutOracle oracle(y);
    const AttackOutcome out = linear_scan_attack(oracle, n * (m - 1) + 1, AttackRandomness(m));
    EXPECT_EQ(out.matches, n);
    EXPECT_EQ(out.bias_fraction(), Rational(static_cast<std::int64_t>(m) - 1, static_cast<std::int64_t>(m)));
    EXPECT_NEAR(expected_linear_scan_bias(n, m, n * (m - 1) + 1), 1.0 - 1.0 / static_cast<double>(m), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(ClassCounts, LinearScanFull, ::testing::Values(2, 3, 5, 10));

TEST(LinearScan, ZeroQueriesHasNoBias) {
    EXPECT_EQ(expected_linear_scan_bias(100, 7, 0), 0.0);
    EXPECT_EQ(expected_linear_scan_bias(100, 7, 1), 0.0);
}

TEST(LinearScan, CostPmfSumsToOne) {
    for (std::size_t m : {2, 3, 4, 10, 100}) {
        const auto pmf = linear_scan_cost_pmf(m);
        EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-12);
        EXPECT_EQ(pmf[0], 0.0);
    }
    // m = 3: start right (1/3) or either candidate order resolves in one query.
    EXPECT_NEAR(linear_scan_cost_pmf(3)[1], 1.0, 1e-12);
}

TEST(LinearScan, BinaryExpectationIsHalfPerResolvedPoint) {
    // m = 2: every query after q0 resolves one point, lifting accuracy by 1/2 on average.
    EXPECT_NEAR(expected_linear_scan_bias(1000, 2, 101), 100.0 * 0.5 / 1000.0, 1e-12);
}

TEST(LinearScan, SimulationAgreesWithExpectation) {
    const std::size_t n = 2000, m = 6, k = 900;
    double sum = 0.0, sum_sq = 0.0;
    constexpr int kTrials = 30;
    for (int t = 0; t < kTrials; ++t) {
        HoldoutOracle oracle(random_labels(n, m, 900 + t));
        const double b = linear_scan_attack(oracle, k, AttackRandomness(t)).bias();
        sum += b;
        sum_sq += b * b;
    }
    const double mean = sum / kTrials;
    const double se = std::sqrt((sum_sq / kTrials - mean * mean) / (kTrials - 1));
    EXPECT_NEAR(mean, expected_linear_scan_bias(n, m, k), 3.0 * se + 1e-3);
}

TEST(Bounds, WorkedExample) {
    const BoundReport r = upper_bound_epsilon(10'000, 10, 100, 0.01);
    EXPECT_NEAR(r.b, 925.65, 0.01);
    EXPECT_NEAR(r.epsilon, 0.19242, 1e-4);
    EXPECT_EQ(r.regime, BoundRegime::Sqrt);
}

TEST(Bounds, LinearRegimeAndLimits) {
    const BoundReport lin = upper_bound_epsilon(1000, 10, 50, 0.05);
    EXPECT_EQ(lin.regime, BoundRegime::Linear);
    EXPECT_DOUBLE_EQ(lin.epsilon, 2.0 * lin.b / 1000.0);
    EXPECT_EQ(upper_bound_epsilon(1000, 2, 0, 1.0).epsilon, 0.0);
    EXPECT_THROW(upper_bound_epsilon(1000, 2, 1, 0.0), DomainError);
    EXPECT_THROW(upper_bound_epsilon(1000, 1, 1, 0.5), DomainError);
}

TEST(Bounds, ExpectedBoundAtZeroQueries) {
    const double n = 1e4, m = 2, l = std::log(n + 1);
    EXPECT_NEAR(expected_accuracy_bound(10'000, 2, 0), 1.0 / n + 2.0 * std::max(std::sqrt(l / (n * m)), l / n), 1e-15);
    EXPECT_GT(expected_accuracy_bound(10'000, 2, 100), expected_accuracy_bound(10'000, 2, 0));
}

TEST(Bounds, NbScaleExamples) {
    EXPECT_NEAR(nb_lower_bound(10'000, 2, 100), 0.05, 1e-15);
    EXPECT_NEAR(nb_lower_bound(10'000, 2, 400), 0.1, 1e-15);
    EXPECT_NEAR(nb_lower_bound(10'000, 4, 100), 0.025, 1e-15);
}
