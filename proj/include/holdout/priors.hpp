#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/naive_bayes.hpp"
#include "holdout/oracle.hpp"
#include "holdout/prior_table.hpp"
#include "holdout/queries.hpp"
#include "holdout/types.hpp"

namespace holdout {

/// n x m model scores, row-major.
class LogitsTable {
public:
    LogitsTable(std::size_t rows, std::size_t num_classes, std::vector<double> scores)
        : rows_(rows), num_classes_(num_classes), scores_(std::move(scores)) {
        if (num_classes_ < 2) throw InputError("LogitsTable needs at least two classes");
        if (scores_.size() != rows_ * num_classes_) throw InputError("LogitsTable size mismatch");
        for (std::size_t idx = 0; idx < scores_.size(); ++idx) {
            if (!std::isfinite(scores_[idx])) {
                throw InputError("non-finite logit at row " + std::to_string(idx / num_classes_ + 1) + ", column " +
                                 std::to_string(idx % num_classes_ + 1));
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::span<const double> row(std::size_t i) const noexcept { return {scores_.data() + i * num_classes_, num_classes_}; }
    double at(std::size_t i, Label l) const noexcept { return scores_[i * num_classes_ + l]; }

    /// Lowest-index label with the largest score.
    Label argmax(std::size_t i) const noexcept {
        const auto r = row(i);
        return static_cast<Label>(std::max_element(r.begin(), r.end()) - r.begin());
    }

private:
    std::size_t rows_;
    std::size_t num_classes_;
    std::vector<double> scores_;
};

/// Row-wise softmax of logits / temperature.
inline PriorTable prior_from_logits(const LogitsTable& logits, double temperature = 1.0) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InputError("temperature must be positive");
    const std::size_t n = logits.rows();
    const std::size_t m = logits.num_classes();
    std::vector<double> probs(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = logits.row(i);
        const double top = *std::max_element(r.begin(), r.end());
        double sum = 0.0;
        double* out = probs.data() + i * m;
        for (std::size_t l = 0; l < m; ++l) {
            out[l] = std::exp((r[l] - top) / temperature);
            sum += out[l];
        }
        for (std::size_t l = 0; l < m; ++l) out[l] /= sum;
    }
    return PriorTable(n, m, std::move(probs));
}

/// The `size` points with the smallest top probability, returned in index
/// order. Equal confidences prefer the lower index.
inline std::vector<std::size_t> least_confident_subset(const PriorTable& prior, std::size_t size) {
    const std::size_t n = prior.rows();
    if (size < 1 || size > n) throw InputError("subset size must be in [1, n]");
    std::vector<double> confidence(n);
    for (std::size_t i = 0; i < n; ++i) confidence[i] = prior.max_probability(i);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        return confidence[a] != confidence[b] ? confidence[a] < confidence[b] : a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(size - 1), idx.end(), less);
    idx.resize(size);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Candidate-restricted attack problem over a subset of points. Reduced label
/// c at selected point p stands for original label candidates[p * R + c].
struct RestrictedProblem {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t r = 0;
    std::vector<std::size_t> selected;
    std::vector<Label> candidates;  // selected.size() x r
    PriorTable prior;               // selected.size() x r, renormalized over candidates
    std::vector<Label> committed;   // original label used at every point outside `selected`

    std::size_t size() const noexcept { return selected.size(); }
    std::span<const Label> candidates_of(std::size_t p) const noexcept { return {candidates.data() + p * r, r}; }
};

/// Keeps the R most probable labels (ties to the lower label) at each point of
/// `subset` and renormalizes the prior over them. Every other point is
/// committed to its prior argmax.
inline RestrictedProblem top_r_restrict(const PriorTable& prior, std::size_t r, std::span<const std::size_t> subset) {
    const std::size_t n = prior.rows();
    const std::size_t m = prior.num_classes();
    if (r < 2 || r > m) throw InputError("R must satisfy 2 <= R <= m");
    if (subset.empty()) throw InputError("subset must be non-empty");
    std::vector<std::uint8_t> in_subset(n, 0);
    for (std::size_t i : subset) {
        if (i >= n) throw InputError("subset index out of range");
        if (in_subset[i]) throw InputError("subset has a repeated index");
        in_subset[i] = 1;
    }

    std::vector<Label> candidates(subset.size() * r);
    std::vector<double> reduced(subset.size() * r);
    std::vector<Label> order(m);
    for (std::size_t p = 0; p < subset.size(); ++p) {
        const auto row = prior.row(subset[p]);
        std::iota(order.begin(), order.end(), Label{0});
        auto higher = [&](Label a, Label b) { return row[a] != row[b] ? row[a] > row[b] : a < b; };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r), order.end(), higher);
        double mass = 0.0;
        for (std::size_t c = 0; c < r; ++c) mass += row[order[c]];
        for (std::size_t c = 0; c < r; ++c) {
            candidates[p * r + c] = order[c];
            reduced[p * r + c] = mass > 0.0 ? row[order[c]] / mass : 1.0 / static_cast<double>(r);
        }
    }

    std::vector<Label> committed(n);
    for (std::size_t i = 0; i < n; ++i) committed[i] = prior.argmax(i);
    return RestrictedProblem{n,
                             m,
                             r,
                             std::vector<std::size_t>(subset.begin(), subset.end()),
                             std::move(candidates),
                             PriorTable(subset.size(), r, std::move(reduced)),
                             std::move(committed)};
}

/// Maps a reduced prediction (one candidate index per selected point) back to
/// original labels; unselected points take their committed label.
inline LabelVector lift_prediction(const RestrictedProblem& problem, std::span<const Label> reduced) {
    if (reduced.size() != problem.size()) throw InputError("reduced prediction length differs from subset size");
    std::vector<Label> out(problem.committed);
    for (std::size_t p = 0; p < problem.size(); ++p) {
        if (reduced[p] >= problem.r) throw InputError("candidate index out of range at subset position " + std::to_string(p));
        out[problem.selected[p]] = problem.candidates[p * problem.r + reduced[p]];
    }
    return LabelVector(std::move(out), problem.m);
}

inline LabelVector lift_prediction(const RestrictedProblem& problem, const LabelVector& reduced) {
    return lift_prediction(problem, reduced.labels());
}

/// Presents reduced queries (selected points x k over [R]) as full n x k
/// queries over [m]. Unselected rows hold the committed label in every column,
/// which shifts all accuracies by the same unknown amount.
template <QueryRows Reduced>
class LiftedQueries {
public:
    LiftedQueries(const RestrictedProblem& problem, const Reduced& reduced) : problem_(&problem), reduced_(&reduced) {
        if (reduced.rows() != problem.size() || reduced.num_classes() != problem.r) {
            throw InputError("reduced queries do not match the restricted problem");
        }
        position_.assign(problem.n, kUnselected);
        for (std::size_t p = 0; p < problem.size(); ++p) position_[problem.selected[p]] = p;
    }

    std::size_t rows() const noexcept { return problem_->n; }
    std::size_t cols() const noexcept { return reduced_->cols(); }
    std::size_t num_classes() const noexcept { return problem_->m; }

    void fill_row(std::size_t i, std::span<Label> out) const {
        const std::size_t p = position_[i];
        const std::size_t k = cols();
        if (p == kUnselected) {
            std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), problem_->committed[i]);
            return;
        }
        reduced_->fill_row(p, out);
        const auto cand = problem_->candidates_of(p);
        for (std::size_t j = 0; j < k; ++j) out[j] = cand[out[j]];
    }

private:
    static constexpr std::size_t kUnselected = static_cast<std::size_t>(-1);
    const RestrictedProblem* problem_;
    const Reduced* reduced_;
    std::vector<std::size_t> position_;
};

/// Accuracy estimates on the selected points when full-set accuracies carry an
/// unknown constant offset: 1/R + (c_j - mean c) / n'.
inline std::vector<double> recentered_accuracy(const AccuracyVector& alpha, std::size_t subset_size, std::size_t r) {
    const std::size_t k = alpha.size();
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += static_cast<double>(alpha.matches(j));
    mean /= static_cast<double>(k);
    std::vector<double> est(k);
    for (std::size_t j = 0; j < k; ++j) {
        est[j] = 1.0 / static_cast<double>(r) + (static_cast<double>(alpha.matches(j)) - mean) /
                                                     static_cast<double>(subset_size);
    }
    return est;
}

/// NB with the renormalized prior on a restricted problem: k random queries
/// over the candidates of the selected points, lifted to the full test set.
/// `use_prior = false` runs the reduced attack with a uniform prior.
inline AttackOutcome restricted_nb_attack(HoldoutOracle& oracle, const RestrictedProblem& problem, std::size_t k,
                                          const AttackRandomness& rnd, bool use_prior = true) {
    if (k == 0) throw InputError("restricted_nb_attack needs k >= 1");
    if (oracle.size() != problem.n || oracle.num_classes() != problem.m) {
        throw InputError("restricted problem does not match the oracle");
    }
    const UniformQueries reduced(problem.size(), k, problem.r, AttackRandomness(rnd.seed));
    const AccuracyVector alpha = oracle.submit(LiftedQueries<UniformQueries>(problem, reduced));
    const std::vector<double> est = recentered_accuracy(alpha, problem.size(), problem.r);
    const NbWeights weights = NbWeights::from_estimates(est, problem.r);
    const LabelVector choice =
        nb_predict(reduced, weights, use_prior ? &problem.prior : nullptr, AttackRandomness(rnd.seed));
    return oracle.evaluate(lift_prediction(problem, choice));
}

}  // namespace holdout
