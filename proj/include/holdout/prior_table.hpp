#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/types.hpp"

namespace holdout {

/// Per-point categorical distributions over [m], row-major n x m.
class PriorTable {
public:
    static constexpr double kSumTolerance = 1e-12;

    PriorTable(std::size_t rows, std::size_t num_classes, std::vector<double> probs)
        : rows_(rows), num_classes_(num_classes), probs_(std::move(probs)) {
        if (num_classes_ < 2) throw InputError("PriorTable needs at least two classes");
        if (probs_.size() != rows_ * num_classes_) throw InputError("PriorTable size mismatch");
        for (std::size_t i = 0; i < rows_; ++i) {
            double sum = 0.0;
            for (double p : row(i)) {
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw InputError("prior row " + std::to_string(i) + " has a negative or non-finite entry");
                }
                sum += p;
            }
            if (std::fabs(sum - 1.0) > kSumTolerance) {
                throw InputError("prior row " + std::to_string(i) + " does not sum to 1");
            }
        }
    }

    static PriorTable uniform(std::size_t rows, std::size_t num_classes) {
        return PriorTable(rows, num_classes, std::vector<double>(rows * num_classes, 1.0 / static_cast<double>(num_classes)));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {probs_.data() + i * num_classes_, num_classes_};
    }

    double at(std::size_t i, Label l) const noexcept { return probs_[i * num_classes_ + l]; }

    /// Largest entry of row i (the model's confidence in its top prediction).
    double max_probability(std::size_t i) const noexcept {
        double best = 0.0;
        for (double p : row(i)) best = std::max(best, p);
        return best;
    }

    /// Lowest-index label with the largest probability.
    Label argmax(std::size_t i) const noexcept {
        const auto r = row(i);
        Label best = 0;
        for (Label l = 1; l < r.size(); ++l) {
            if (r[l] > r[best]) best = l;
        }
        return best;
    }

private:
    std::size_t rows_;
    std::size_t num_classes_;
    std::vector<double> probs_;
};

}  // namespace holdout
