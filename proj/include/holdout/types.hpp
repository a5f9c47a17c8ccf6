#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/rational.hpp"

namespace holdout {

/// Class index. Zero-based in memory: label 0 is the first class. Text
/// formats and user-facing output use one-based labels.
using Label = std::uint32_t;

/// Hidden test-set labeling y in [m]^n.
class LabelVector {
public:
    LabelVector() = default;

    LabelVector(std::vector<Label> labels, std::size_t num_classes)
        : labels_(std::move(labels)), num_classes_(num_classes) {
        if (num_classes_ < 2) throw InputError("LabelVector needs at least two classes");
        if (labels_.empty()) throw InputError("LabelVector must be non-empty");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] >= num_classes_) {
                throw InputError("label " + std::to_string(labels_[i] + 1) + " at position " + std::to_string(i) +
                                 " is outside [1, " + std::to_string(num_classes_) + "]");
            }
        }
    }

    static LabelVector from_one_based(std::span<const std::int64_t> labels, std::size_t num_classes) {
        std::vector<Label> zero_based;
        zero_based.reserve(labels.size());
        for (std::int64_t v : labels) {
            if (v < 1 || static_cast<std::uint64_t>(v) > num_classes) {
                throw InputError("label " + std::to_string(v) + " is outside [1, " + std::to_string(num_classes) + "]");
            }
            zero_based.push_back(static_cast<Label>(v - 1));
        }
        return LabelVector(std::move(zero_based), num_classes);
    }

    static LabelVector from_one_based(std::initializer_list<std::int64_t> labels, std::size_t num_classes) {
        return from_one_based(std::span<const std::int64_t>(labels.begin(), labels.size()), num_classes);
    }

    std::vector<std::int64_t> to_one_based() const {
        std::vector<std::int64_t> out(labels_.size());
        std::transform(labels_.begin(), labels_.end(), out.begin(), [](Label l) { return std::int64_t{l} + 1; });
        return out;
    }

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    Label operator[](std::size_t i) const noexcept { return labels_[i]; }
    std::span<const Label> labels() const noexcept { return labels_; }
    auto begin() const noexcept { return labels_.begin(); }
    auto end() const noexcept { return labels_.end(); }

    friend bool operator==(const LabelVector&, const LabelVector&) = default;

private:
    std::vector<Label> labels_;
    std::size_t num_classes_ = 0;
};

/// Anything that can produce query rows: row i holds the k query values at test point i.
/// Query sources are read row by row so that large random query sets never
/// have to be materialized.
template <class Q>
concept QueryRows = requires(const Q& q, std::size_t i, std::span<Label> out) {
    { q.rows() } -> std::convertible_to<std::size_t>;
    { q.cols() } -> std::convertible_to<std::size_t>;
    { q.num_classes() } -> std::convertible_to<std::size_t>;
    q.fill_row(i, out);
};

/// Materialized n x k query table; column j is query j. Stored row-major.
class QueryMatrix {
public:
    QueryMatrix(std::size_t rows, std::size_t cols, std::size_t num_classes, Label fill = 0)
        : rows_(rows), cols_(cols), num_classes_(num_classes), values_(rows * cols, fill) {
        if (num_classes < 2) throw InputError("QueryMatrix needs at least two classes");
        if (fill >= num_classes) throw InputError("QueryMatrix fill label out of range");
    }

    /// Builds a matrix whose columns are the given queries.
    static QueryMatrix from_columns(const std::vector<std::vector<Label>>& columns, std::size_t rows,
                                    std::size_t num_classes) {
        QueryMatrix q(rows, columns.size(), num_classes);
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j].size() != rows) throw InputError("query column length differs from row count");
            for (std::size_t i = 0; i < rows; ++i) q.set(i, j, columns[j][i]);
        }
        return q;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    Label at(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    void set(std::size_t i, std::size_t j, Label value) {
        if (value >= num_classes_) throw InputError("query value out of range");
        values_[i * cols_ + j] = value;
    }

    std::span<const Label> row(std::size_t i) const noexcept { return {values_.data() + i * cols_, cols_}; }

    std::vector<Label> column(std::size_t j) const {
        std::vector<Label> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
        return out;
    }

    void fill_row(std::size_t i, std::span<Label> out) const {
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(i * cols_), cols_, out.begin());
    }

    /// Materializes any query source.
    template <QueryRows Q>
    static QueryMatrix materialize(const Q& source) {
        QueryMatrix q(source.rows(), source.cols(), source.num_classes());
        for (std::size_t i = 0; i < q.rows_; ++i) {
            source.fill_row(i, std::span<Label>(q.values_.data() + i * q.cols_, q.cols_));
        }
        return q;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::size_t num_classes_;
    std::vector<Label> values_;
};

/// Per-query accuracies, held as exact match counts over n.
class AccuracyVector {
public:
    AccuracyVector(std::size_t n, std::vector<std::size_t> matches) : n_(n), matches_(std::move(matches)) {
        if (n_ == 0) throw InputError("AccuracyVector needs n >= 1");
        for (std::size_t c : matches_) {
            if (c > n_) throw InputError("match count exceeds n");
        }
    }

    std::size_t size() const noexcept { return matches_.size(); }
    std::size_t n() const noexcept { return n_; }
    std::size_t matches(std::size_t j) const noexcept { return matches_[j]; }
    std::span<const std::size_t> match_counts() const noexcept { return matches_; }
    double value(std::size_t j) const noexcept { return static_cast<double>(matches_[j]) / static_cast<double>(n_); }
    Rational fraction(std::size_t j) const {
        return {static_cast<std::int64_t>(matches_[j]), static_cast<std::int64_t>(n_)};
    }

    friend bool operator==(const AccuracyVector&, const AccuracyVector&) = default;

private:
    std::size_t n_;
    std::vector<std::size_t> matches_;
};

/// Final scoring of an attack's output classifier.
struct AttackOutcome {
    LabelVector prediction;
    std::size_t queries_used = 0;
    std::size_t matches = 0;

    std::size_t n() const noexcept { return prediction.size(); }
    std::size_t num_classes() const noexcept { return prediction.num_classes(); }

    Rational accuracy_fraction() const {
        return {static_cast<std::int64_t>(matches), static_cast<std::int64_t>(n())};
    }
    /// accuracy - 1/m, exact.
    Rational bias_fraction() const {
        const auto m = static_cast<std::int64_t>(num_classes());
        const auto nn = static_cast<std::int64_t>(n());
        return {static_cast<std::int64_t>(matches) * m - nn, nn * m};
    }
    double accuracy() const noexcept { return static_cast<double>(matches) / static_cast<double>(n()); }
    double bias() const noexcept {
        const double m = static_cast<double>(num_classes());
        const double nn = static_cast<double>(n());
        return (static_cast<double>(matches) * m - nn) / (nn * m);
    }
};

}  // namespace holdout
