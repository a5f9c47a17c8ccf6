#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"
#include "holdout/random.hpp"

namespace holdout {

/// Accuracy margin above 1/m a query needs to be kept: sqrt(1 - 1/m) / (3 sqrt(m n)).
inline double plurality_threshold_margin(std::size_t n, std::size_t m) {
    const double md = static_cast<double>(m);
    return std::sqrt(1.0 - 1.0 / md) / (3.0 * std::sqrt(md * static_cast<double>(n)));
}

/// Indices of queries whose accuracy is at least 1/m + margin, in query order.
inline std::vector<std::size_t> above_threshold_queries(const AccuracyVector& alpha, std::size_t m) {
    const double cutoff = 1.0 / static_cast<double>(m) + plurality_threshold_margin(alpha.n(), m);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha.value(j) >= cutoff) kept.push_back(j);
    }
    return kept;
}

/// Plurality of `votes` over m labels with uniform random tie-breaking.
/// An empty vote is a tie among all labels.
class PluralityVote {
public:
    explicit PluralityVote(std::size_t m) : counts_(m), tied_(m) {}

    void reset() { std::fill(counts_.begin(), counts_.end(), 0); }
    void add(Label l) { ++counts_[l]; }

    Label decide(std::size_t point, const AttackRandomness& rnd) {
        std::uint32_t best = 0;
        for (std::uint32_t c : counts_) best = std::max(best, c);
        std::size_t count = 0;
        Label only = 0;
        for (std::size_t l = 0; l < counts_.size(); ++l) {
            tied_[l] = counts_[l] == best ? 1 : 0;
            if (tied_[l]) {
                ++count;
                only = static_cast<Label>(l);
            }
        }
        return count == 1 ? only : rnd.break_tie(point, tied_);
    }

private:
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint8_t> tied_;
};

/// Thresholded-plurality attack: keep queries with accuracy >= 1/m + gamma,
/// draw v ~ Pois(k/8) per point, and output the plurality of the point's
/// values on the first min(v, |J|) kept queries.
inline AttackOutcome thresholded_plurality_attack(HoldoutOracle& oracle, std::size_t k, const AttackRandomness& rnd) {
    if (k == 0) throw InputError("thresholded_plurality_attack needs k >= 1");
    const std::size_t n = oracle.size();
    const std::size_t m = oracle.num_classes();
    const UniformQueries queries(n, k, m, rnd);
    const AccuracyVector alpha = oracle.submit(queries);
    const std::vector<std::size_t> kept = above_threshold_queries(alpha, m);

    const PoissonSampler poisson(static_cast<double>(k) / 8.0);
    PluralityVote vote(m);
    std::vector<Label> row(k);
    std::vector<Label> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitMix64 gen(rnd.stream_seed(AttackRandomness::kPoissonStream, i));
        const std::size_t v = static_cast<std::size_t>(poisson(gen));
        const std::size_t take = std::min(v, kept.size());
        vote.reset();
        if (take > 0) {
            queries.fill_row(i, row);
            for (std::size_t p = 0; p < take; ++p) vote.add(row[kept[p]]);
        }
        out[i] = vote.decide(i, rnd);
    }
    return oracle.evaluate(LabelVector(std::move(out), m));
}

}  // namespace holdout
