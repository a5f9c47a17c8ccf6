#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/types.hpp"

namespace holdout {

/// Number of positions where q agrees with y, over n.
struct MatchCount {
    std::size_t count = 0;
    std::size_t n = 0;

    Rational fraction() const { return {static_cast<std::int64_t>(count), static_cast<std::int64_t>(n)}; }
    double value() const noexcept { return static_cast<double>(count) / static_cast<double>(n); }
    friend bool operator==(const MatchCount&, const MatchCount&) = default;
};

inline MatchCount accuracy(const LabelVector& y, std::span<const Label> q) {
    if (q.size() != y.size()) {
        throw InputError("query length " + std::to_string(q.size()) + " differs from n = " + std::to_string(y.size()));
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] >= y.num_classes()) throw InputError("query value out of range at position " + std::to_string(i));
        count += (q[i] == y[i]);
    }
    return {count, y.size()};
}

inline MatchCount accuracy(const LabelVector& y, const LabelVector& q) {
    if (q.num_classes() != y.num_classes()) throw InputError("class counts differ");
    return accuracy(y, q.labels());
}

/// Query-limited holdout: hides a labeling and answers accuracy queries.
///
/// The public surface exposes n, m, the budget, and whether the attacker may
/// rely on point identity. Labels are never readable. One instance is
/// single-owner state and must not be queried concurrently.
class HoldoutOracle {
public:
    struct Options {
        std::optional<std::size_t> budget;
        bool reveal_points = false;
    };

    explicit HoldoutOracle(LabelVector hidden) : HoldoutOracle(std::move(hidden), Options{}) {}
    HoldoutOracle(LabelVector hidden, Options options) : hidden_(std::move(hidden)), options_(options) {}

    std::size_t size() const noexcept { return hidden_.size(); }
    std::size_t num_classes() const noexcept { return hidden_.num_classes(); }
    bool reveals_points() const noexcept { return options_.reveal_points; }
    std::optional<std::size_t> budget() const noexcept { return options_.budget; }
    std::size_t queries_used() const noexcept { return used_; }
    bool finished() const noexcept { return finished_; }

    std::optional<std::size_t> remaining() const noexcept {
        if (!options_.budget) return std::nullopt;
        return *options_.budget - used_;
    }

    /// Answers all k columns of a query source at once.
    template <QueryRows Q>
    AccuracyVector submit(const Q& queries) {
        const std::size_t k = queries.cols();
        reserve(k, queries.rows(), queries.num_classes());
        std::vector<std::size_t> matches(k, 0);
        std::vector<Label> row(k);
        const std::size_t m = num_classes();
        for (std::size_t i = 0; i < size(); ++i) {
            queries.fill_row(i, row);
            const Label truth = hidden_[i];
            for (std::size_t j = 0; j < k; ++j) {
                if (row[j] >= m) throw InputError("query value out of range at row " + std::to_string(i));
                matches[j] += (row[j] == truth);
            }
        }
        used_ += k;
        return AccuracyVector(size(), std::move(matches));
    }

    /// Answers a single query given as a full label vector.
    MatchCount query(std::span<const Label> q) {
        reserve(1, q.size(), num_classes());
        MatchCount result = accuracy(hidden_, q);
        ++used_;
        return result;
    }

    /// Scores the attack's final classifier. Not counted against the budget;
    /// closes the oracle to further queries.
    AttackOutcome evaluate(LabelVector prediction) {
        if (finished_) throw StateError("oracle already evaluated a final prediction");
        if (prediction.size() != size() || prediction.num_classes() != num_classes()) {
            throw InputError("prediction shape differs from the hidden labeling");
        }
        const MatchCount acc = accuracy(hidden_, prediction.labels());
        finished_ = true;
        return AttackOutcome{std::move(prediction), used_, acc.count};
    }

private:
    void reserve(std::size_t k, std::size_t rows, std::size_t classes) const {
        if (finished_) throw StateError("oracle is closed after final evaluation");
        if (rows != size()) {
            throw InputError("query has " + std::to_string(rows) + " rows, oracle has n = " + std::to_string(size()));
        }
        if (classes != num_classes()) throw InputError("query class count differs from oracle");
        if (options_.budget && used_ + k > *options_.budget) {
            throw BudgetError("query budget exhausted: used " + std::to_string(used_) + " + " + std::to_string(k) +
                              " > " + std::to_string(*options_.budget));
        }
    }

    LabelVector hidden_;
    Options options_;
    std::size_t used_ = 0;
    bool finished_ = false;
};

inline AttackOutcome evaluate_outcome(HoldoutOracle& oracle, LabelVector prediction) {
    return oracle.evaluate(std::move(prediction));
}

}  // namespace holdout
