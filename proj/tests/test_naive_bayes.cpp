#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "holdout/naive_bayes.hpp"
#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"

using namespace holdout;

namespace {

LabelVector random_labels(std::size_t n, std::size_t m, std::uint64_t seed) {
    const AttackRandomness rnd(seed);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rnd.uniform_label(0x33, i, m);
    return LabelVector(std::move(y), m);
}

std::vector<Label> to_vector(const LabelVector& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Conf, HandComputedValues) {
    const AccuracyVector alpha(10, {6, 3});
    const std::vector<Label> s = {0, 1};
    EXPECT_NEAR(conf(0, s, alpha, 2), std::log(0.42), 1e-12);
    EXPECT_NEAR(conf(1, s, alpha, 2), std::log(0.12), 1e-12);
}

TEST(Conf, UninformativeAccuraciesGiveEqualValues) {
    const AccuracyVector alpha(12, {4, 4, 4, 4});
    const std::vector<Label> s = {0, 2, 2, 1};
    for (Label l = 0; l < 3; ++l) EXPECT_NEAR(conf(l, s, alpha, 3), 4.0 * std::log(1.0 / 3.0), 1e-12);
}

TEST(Conf, ZeroFactorIsNegativeInfinity) {
    const AccuracyVector alpha(4, {4});
    const std::vector<Label> s = {1};
    EXPECT_EQ(conf(0, s, alpha, 3), kNegInf);
    EXPECT_EQ(conf(1, s, alpha, 3), 0.0);
}

TEST(Conf, RejectsMismatchedInput) {
    const AccuracyVector alpha(4, {2, 2});
    const std::vector<Label> s = {1};
    EXPECT_THROW(conf(0, s, alpha, 2), InputError);
    const std::vector<Label> bad = {0, 5};
    EXPECT_THROW(conf(0, bad, alpha, 2), InputError);
}

TEST(NaiveBayes, ExactQueryIsCopied) {
    const auto y = LabelVector::from_one_based({1, 3, 2, 2, 3}, 3);
    const QueryMatrix q = QueryMatrix::from_columns({to_vector(y)}, 5, 3);
    HoldoutOracle oracle(y);
    const AccuracyVector alpha = oracle.submit(q);
    const LabelVector pred = nb_predict(q, NbWeights::from_counts(alpha, 3), nullptr, AttackRandomness(1));
    EXPECT_EQ(to_vector(pred), to_vector(y));
}

TEST(NaiveBayes, PriorBreaksEqualConfidence) {
    // One query at accuracy exactly 1/2 with m = 2 carries no evidence.
    const auto y = LabelVector::from_one_based({1, 2}, 2);
    const QueryMatrix q = QueryMatrix::from_columns({{0, 0}}, 2, 2);
    const AccuracyVector alpha(2, {1});
    const PriorTable prior(2, 2, {0.9, 0.1, 0.9, 0.1});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const LabelVector pred = nb_predict(q, NbWeights::from_counts(alpha, 2), &prior, AttackRandomness(seed));
        EXPECT_EQ(pred[0], 0u);
        EXPECT_EQ(pred[1], 0u);
    }
    (void)y;
}

TEST(NaiveBayes, ScorerMatchesConfArgmax) {
    const std::size_t n = 60, m = 4, k = 9;
    const LabelVector y = random_labels(n, m, 2);
    const AttackRandomness rnd(5);
    const UniformQueries q(n, k, m, rnd);
    HoldoutOracle oracle(y);
    const AccuracyVector alpha = oracle.submit(q);
    const NbWeights weights = NbWeights::from_counts(alpha, m);
    NbScorer scorer(weights);
    std::vector<Label> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        q.fill_row(i, row);
        const auto scores = confidence_scores(row, alpha, m);
        double best = kNegInf;
        for (const auto& s : scores) best = std::max(best, s.log_value);
        scorer.maximizers(row);
        for (Label l = 0; l < m; ++l) {
            const bool is_max = best == kNegInf || std::abs(scores[l].log_value - best) <= 1e-9 * std::max(1.0, std::abs(best));
            EXPECT_EQ(scorer.tied()[l] != 0, is_max) << "point " << i << " label " << l;
        }
    }
}

TEST(NaiveBayes, DeterministicGivenSeed) {
    const LabelVector y = random_labels(500, 5, 1);
    HoldoutOracle a(y), b(y);
    const AttackOutcome x = nb_attack(a, 40, nullptr, AttackRandomness(77));
    const AttackOutcome z = nb_attack(b, 40, nullptr, AttackRandomness(77));
    EXPECT_EQ(to_vector(x.prediction), to_vector(z.prediction));
    EXPECT_EQ(x.queries_used, 40u);
}

TEST(NaiveBayes, EquivariantUnderLabelPermutation) {
    const std::size_t n = 400, m = 5;
    const std::vector<Label> sigma = {3, 0, 4, 1, 2};
    const LabelVector y = random_labels(n, m, 9);
    std::vector<Label> permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = sigma[y[i]];
    HoldoutOracle plain(y);
    HoldoutOracle relabeled(LabelVector(permuted, m));
    const AttackOutcome a = nb_attack(plain, 30, nullptr, AttackRandomness(123));
    const AttackOutcome b = nb_attack(relabeled, 30, nullptr, AttackRandomness(123, sigma));
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(b.prediction[i], sigma[a.prediction[i]]);
    EXPECT_EQ(a.matches, b.matches);
}

TEST(NaiveBayes, BiasPositiveAtModerateK) {
    const LabelVector y = random_labels(10'000, 2, 4);
    HoldoutOracle oracle(y);
    const AttackOutcome out = nb_attack(oracle, 1000, nullptr, AttackRandomness(4));
    // Typical bias is about 0.15; random guessing has SD 0.005.
    EXPECT_GT(out.bias(), 0.05);
}

TEST(NaiveBayes, MeanBiasGrowsWithK) {
    const std::size_t n = 2000, m = 3;
    double prev = -1.0;
    for (std::size_t k : {8, 64, 512}) {
        double sum = 0.0;
        for (std::uint64_t t = 0; t < 8; ++t) {
            HoldoutOracle oracle(random_labels(n, m, 100 + t));
            sum += nb_attack(oracle, k, nullptr, AttackRandomness(t)).bias();
        }
        EXPECT_GT(sum / 8, prev);
        prev = sum / 8;
    }
}

TEST(NaiveBayes, ZeroQueriesRejected) {
    HoldoutOracle oracle(random_labels(10, 2, 1));
    EXPECT_THROW(nb_attack(oracle, 0, nullptr, AttackRandomness(1)), InputError);
}

TEST(NbWeights, GainVanishesAtChanceAccuracy) {
    const AccuracyVector alpha(12, {4, 6, 2});
    const NbWeights w = NbWeights::from_counts(alpha, 3);
    EXPECT_EQ(w.gain(0), 0.0);
    EXPECT_GT(w.gain(1), 0.0);
    EXPECT_LT(w.gain(2), 0.0);
}
