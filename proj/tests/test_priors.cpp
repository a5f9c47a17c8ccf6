#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "holdout/logits_io.hpp"
#include "holdout/naive_bayes.hpp"
#include "holdout/oracle.hpp"
#include "holdout/priors.hpp"
#include "holdout/synth_logits.hpp"

using namespace holdout;

TEST(Softmax, WorkedExamples) {
    const LogitsTable zeros(1, 4, {0, 0, 0, 0});
    const PriorTable u = prior_from_logits(zeros);
    for (Label l = 0; l < 4; ++l) EXPECT_NEAR(u.at(0, l), 0.25, 1e-15);

    const LogitsTable two(1, 2, {std::log(9.0), 0.0});
    const PriorTable p = prior_from_logits(two);
    EXPECT_NEAR(p.at(0, 0), 0.9, 1e-15);
    EXPECT_NEAR(p.at(0, 1), 0.1, 1e-15);
}

TEST(Softmax, HighTemperatureFlattens) {
    const LogitsTable t(1, 3, {5.0, -2.0, 1.0});
    const PriorTable p = prior_from_logits(t, 1e6);
    for (Label l = 0; l < 3; ++l) EXPECT_NEAR(p.at(0, l), 1.0 / 3.0, 1e-4);
    EXPECT_THROW(prior_from_logits(t, 0.0), InputError);
}

TEST(Softmax, LargeLogitsStayFinite) {
    const LogitsTable t(1, 2, {1000.0, 999.0});
    const PriorTable p = prior_from_logits(t);
    EXPECT_NEAR(p.at(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Logits, NonFiniteRejected) {
    EXPECT_THROW(LogitsTable(1, 2, {0.0, std::nan("")}), InputError);
    EXPECT_THROW(LogitsTable(1, 2, {0.0, INFINITY}), InputError);
    std::istringstream in("1,2\n3,inf\n");
    EXPECT_THROW(read_logits_csv(in), InputError);
}

TEST(LeastConfident, TieAndOrderRules) {
    const PriorTable same(4, 2, {0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3});
    EXPECT_EQ(least_confident_subset(same, 2), (std::vector<std::size_t>{0, 1}));

    const PriorTable mixed(3, 2, {1.0, 0.0, 0.5, 0.5, 0.0, 1.0});
    EXPECT_EQ(least_confident_subset(mixed, 1), (std::vector<std::size_t>{1}));

    const PriorTable four(4, 2, {0.9, 0.1, 0.5, 0.5, 0.7, 0.3, 0.4, 0.6});
    // Top probabilities are 0.9, 0.5, 0.7, 0.6.
    EXPECT_EQ(least_confident_subset(four, 2), (std::vector<std::size_t>{1, 3}));
    EXPECT_THROW(least_confident_subset(four, 0), InputError);
    EXPECT_THROW(least_confident_subset(four, 5), InputError);
}

TEST(TopR, WorkedExample) {
    const PriorTable prior(1, 3, {0.5, 0.3, 0.2});
    const std::vector<std::size_t> subset = {0};
    const RestrictedProblem p = top_r_restrict(prior, 2, subset);
    EXPECT_EQ(p.candidates, (std::vector<Label>{0, 1}));
    EXPECT_NEAR(p.prior.at(0, 0), 0.625, 1e-15);
    EXPECT_NEAR(p.prior.at(0, 1), 0.375, 1e-15);
    const std::vector<Label> pick_second = {1};
    EXPECT_EQ(lift_prediction(p, pick_second)[0], 1u);
    const std::vector<Label> out_of_range = {2};
    EXPECT_THROW(lift_prediction(p, out_of_range), InputError);
}

TEST(TopR, FirstCandidateEverywhereIsArgmax) {
    const PriorTable prior(3, 3, {0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.1, 0.1, 0.8});
    const std::vector<std::size_t> subset = {0, 2};
    const RestrictedProblem p = top_r_restrict(prior, 2, subset);
    const LabelVector lifted = lift_prediction(p, std::vector<Label>{0, 0});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(lifted[i], prior.argmax(i));
}

TEST(TopR, FullRestrictionRoundTrips) {
    const PriorTable prior(4, 3, {0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.1, 0.1, 0.8, 1.0 / 3, 1.0 / 3, 1.0 / 3});
    const std::vector<std::size_t> all = {0, 1, 2, 3};
    const RestrictedProblem p = top_r_restrict(prior, 3, all);
    const std::vector<Label> full = {2, 0, 1, 2};
    std::vector<Label> reduced(4);
    for (std::size_t q = 0; q < 4; ++q) {
        const auto cand = p.candidates_of(q);
        reduced[q] = static_cast<Label>(std::find(cand.begin(), cand.end(), full[q]) - cand.begin());
        for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(p.prior.at(q, static_cast<Label>(c)), prior.at(q, cand[c]));
    }
    const LabelVector lifted = lift_prediction(p, reduced);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(lifted[i], full[i]);
}

TEST(TopR, LiftedQueriesShiftAccuraciesUniformly) {
    const PriorTable prior(5, 3, {0.6, 0.3, 0.1, 0.2, 0.7, 0.1, 0.1, 0.1, 0.8, 0.5, 0.4, 0.1, 0.3, 0.3, 0.4});
    const std::vector<std::size_t> subset = {1, 3};
    const RestrictedProblem p = top_r_restrict(prior, 2, subset);
    const UniformQueries reduced(2, 6, 2, AttackRandomness(3));
    const LiftedQueries<UniformQueries> lifted(p, reduced);
    std::vector<Label> row(6), red(6);
    for (std::size_t i = 0; i < 5; ++i) {
        lifted.fill_row(i, row);
        if (i == 0 || i == 2 || i == 4) {
            EXPECT_EQ(row, std::vector<Label>(6, prior.argmax(i)));
        } else {
            const std::size_t q = i == 1 ? 0 : 1;
            reduced.fill_row(q, red);
            for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(row[j], p.candidates_of(q)[red[j]]);
        }
    }
}

TEST(TopR, RecenteredEstimates) {
    const AccuracyVector alpha(100, {30, 34, 26});
    const auto est = recentered_accuracy(alpha, 20, 2);
    EXPECT_NEAR(est[0], 0.5, 1e-15);
    EXPECT_NEAR(est[1], 0.7, 1e-15);
    EXPECT_NEAR(est[2], 0.3, 1e-15);
}

TEST(TopR, AccuracyNeverExceedsCandidateCoverage) {
    const SyntheticLogits s = synth_logits(3000, 20, 0.6, std::vector<RecallTarget>{{2, 0.75}}, 5);
    const PriorTable prior = prior_from_logits(s.logits);
    const auto subset = least_confident_subset(prior, 1000);
    const RestrictedProblem p = top_r_restrict(prior, 2, subset);
    HoldoutOracle oracle(s.labels);
    const AttackOutcome out = restricted_nb_attack(oracle, p, 3000, AttackRandomness(5));
    EXPECT_LE(static_cast<double>(out.matches) / 3000.0, top_r_recall(s.logits, s.labels, 2) + 1e-12);
}

TEST(Synth, RecallsMatchTargets) {
    const std::vector<RecallTarget> targets = {{2, 0.853}, {4, 0.910}, {10, 0.953}};
    const SyntheticLogits s = synth_logits(20'000, 1000, 0.751, targets, 42);
    EXPECT_NEAR(top_r_recall(s.logits, s.labels, 1), 0.751, 0.01);
    for (const RecallTarget& t : targets) EXPECT_NEAR(top_r_recall(s.logits, s.labels, t.r), t.recall, 0.01);
}

TEST(Synth, PerfectTopOneAndSeedDeterminism) {
    const SyntheticLogits s = synth_logits(500, 7, 1.0, {}, 1);
    for (std::size_t i = 0; i < 500; ++i) EXPECT_EQ(s.logits.argmax(i), s.labels[i]);
    const SyntheticLogits t = synth_logits(500, 7, 1.0, {}, 1);
    for (std::size_t i = 0; i < 500; ++i) EXPECT_EQ(s.logits.row(i)[3], t.logits.row(i)[3]);
}

TEST(Synth, InfeasibleTargetsRejected) {
    EXPECT_THROW(rank_profile(10, 0.5, std::vector<RecallTarget>{{2, 0.4}}), InputError);
    EXPECT_THROW(rank_profile(10, 0.1, std::vector<RecallTarget>{{2, 0.5}}), InputError);
    EXPECT_THROW(rank_profile(10, 0.5, std::vector<RecallTarget>{{11, 0.9}}), InputError);
}

TEST(Synth, UninformativePriorMatchesPlainNaiveBayes) {
    // m = 2 with top-1 at 1/2: every prior row is (1/2, 1/2) up to 1e-9.
    double plain = 0.0, with_prior = 0.0;
    for (std::uint64_t t = 0; t < 6; ++t) {
        const SyntheticLogits s = synth_logits(4000, 2, 0.5, {}, 70 + t);
        const PriorTable prior = prior_from_logits(s.logits);
        HoldoutOracle a(s.labels), b(s.labels);
        plain += nb_attack(a, 300, nullptr, AttackRandomness(t)).bias();
        with_prior += nb_attack(b, 300, &prior, AttackRandomness(t)).bias();
    }
    EXPECT_NEAR(plain / 6, with_prior / 6, 0.01);
}

TEST(LogitsIo, CsvRoundTripIsExact) {
    const SyntheticLogits s = synth_logits(50, 6, 0.5, {}, 3);
    std::stringstream buf;
    write_logits_csv(buf, s.logits);
    const LogitsTable back = read_logits_csv(buf);
    ASSERT_EQ(back.rows(), 50u);
    ASSERT_EQ(back.num_classes(), 6u);
    for (std::size_t i = 0; i < 50; ++i) {
        for (Label l = 0; l < 6; ++l) EXPECT_EQ(back.at(i, l), s.logits.at(i, l));
    }
}

TEST(LogitsIo, BinaryRoundTripAtFloatPrecision) {
    const SyntheticLogits s = synth_logits(50, 6, 0.5, {}, 3);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_logits_binary(buf, s.logits);
    EXPECT_EQ(buf.str().substr(0, 4), "LGTS");
    EXPECT_EQ(buf.str().size(), 16u + 50u * 6u * 4u);
    const LogitsTable back = read_logits_binary(buf);
    for (std::size_t i = 0; i < 50; ++i) {
        for (Label l = 0; l < 6; ++l) EXPECT_EQ(back.at(i, l), static_cast<double>(static_cast<float>(s.logits.at(i, l))));
    }
}

TEST(LogitsIo, MalformedInputRejected) {
    std::istringstream ragged("1,2,3\n4,5\n");
    EXPECT_THROW(read_logits_csv(ragged), InputError);
    std::istringstream empty("");
    EXPECT_THROW(read_logits_csv(empty), InputError);
    std::istringstream truncated(std::string("LGTS\x02\0\0\0\x02\0\0\0\0\0\0\0", 16));
    EXPECT_THROW(read_logits_binary(truncated), InputError);
}

TEST(LogitsIo, LabelsAreOneBased) {
    std::istringstream in("1\n3\n2\n");
    const LabelVector y = read_labels(in, 3);
    EXPECT_EQ(y[0], 0u);
    EXPECT_EQ(y[1], 2u);
    std::ostringstream out;
    write_labels(out, y);
    EXPECT_EQ(out.str(), "1\n3\n2\n");
    std::istringstream bad("1\n0\n");
    EXPECT_THROW(read_labels(bad, 3), InputError);
    std::istringstream junk("1\nx\n");
    EXPECT_THROW(read_labels(junk, 3), InputError);
}
