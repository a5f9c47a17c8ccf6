#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/random.hpp"
#include "holdout/types.hpp"

namespace holdout {

/// Seeded randomness for one attack run.
///
/// Every draw is counter-based: query value (i, j) depends only on (seed, i, j),
/// and a tie-break at point i only on (seed, i). Runs with the same seed and a
/// larger k therefore share their first k queries. All label-valued draws pass
/// through `relabel` (identity when empty), which lets a caller run the same
/// attack under a permutation of the label alphabet.
struct AttackRandomness {
    std::uint64_t seed = 0;
    std::vector<Label> relabel;

    AttackRandomness() = default;
    explicit AttackRandomness(std::uint64_t s) : seed(s) {}
    AttackRandomness(std::uint64_t s, std::vector<Label> permutation) : seed(s), relabel(std::move(permutation)) {}

    Label map(Label raw) const noexcept { return relabel.empty() ? raw : relabel[raw]; }

    /// One uniform label per point for a named purpose (initial guesses, fallback predictions, ...).
    Label uniform_label(std::uint64_t stream, std::size_t point, std::size_t num_classes) const noexcept {
        return map(counter_draw(derive_seed(seed, {stream, point}), static_cast<std::uint32_t>(num_classes)));
    }

    /// Uniform choice among the labels flagged in `tied` (at least one must be set).
    /// Draws labels until one is tied, so the choice is equivariant under relabeling.
    Label break_tie(std::size_t point, std::span<const std::uint8_t> tied) const noexcept {
        const auto m = static_cast<std::uint32_t>(tied.size());
        for (std::uint64_t attempt = 0;; ++attempt) {
            const Label l = map(counter_draw(derive_seed(seed, {kTieStream, point, attempt}), m));
            if (tied[l]) return l;
        }
    }

    std::uint64_t stream_seed(std::uint64_t stream, std::size_t point = 0) const noexcept {
        return derive_seed(seed, {stream, point});
    }

    static constexpr std::uint64_t kQueryStream = 0x51;
    static constexpr std::uint64_t kTieStream = 0x7e;
    static constexpr std::uint64_t kFillStream = 0xf1;
    static constexpr std::uint64_t kPoissonStream = 0x90;
    static constexpr std::uint64_t kScanStream = 0x5c;
};

inline void validate_permutation(std::span<const Label> perm, std::size_t m) {
    if (perm.empty()) return;
    if (perm.size() != m) throw InputError("relabeling must have one entry per class");
    std::vector<std::uint8_t> seen(m, 0);
    for (Label l : perm) {
        if (l >= m || seen[l]) throw InputError("relabeling is not a permutation");
        seen[l] = 1;
    }
}

/// Uniformly random queries Q in [m]^{n x k}, generated row by row on demand.
class UniformQueries {
public:
    UniformQueries(std::size_t rows, std::size_t cols, std::size_t num_classes, const AttackRandomness& rnd)
        : rows_(rows), cols_(cols), num_classes_(num_classes), rnd_(rnd) {
        if (num_classes < 2) throw InputError("need at least two classes");
        validate_permutation(rnd.relabel, num_classes);
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    void fill_row(std::size_t i, std::span<Label> out) const {
        BoundedDraw<SplitMix64> draw(SplitMix64(rnd_.stream_seed(AttackRandomness::kQueryStream, i)));
        const auto m = static_cast<std::uint32_t>(num_classes_);
        if (rnd_.relabel.empty()) {
            for (std::size_t j = 0; j < cols_; ++j) out[j] = draw(m);
        } else {
            for (std::size_t j = 0; j < cols_; ++j) out[j] = rnd_.relabel[draw(m)];
        }
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::size_t num_classes_;
    AttackRandomness rnd_;
};

/// Queries that are uniform over the first `random_rows` points and a fixed
/// label on every later point.
class PaddedQueries {
public:
    PaddedQueries(std::size_t rows, std::size_t random_rows, std::size_t cols, std::size_t num_classes, Label fill,
                  const AttackRandomness& rnd)
        : rows_(rows), fill_(fill), inner_(random_rows, cols, num_classes, rnd) {
        if (random_rows > rows) throw InputError("random rows exceed total rows");
        if (fill >= num_classes) throw InputError("fill label out of range");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return inner_.cols(); }
    std::size_t num_classes() const noexcept { return inner_.num_classes(); }
    std::size_t random_rows() const noexcept { return inner_.rows(); }

    void fill_row(std::size_t i, std::span<Label> out) const {
        if (i < inner_.rows()) {
            inner_.fill_row(i, out);
        } else {
            std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cols()), fill_);
        }
    }

private:
    std::size_t rows_;
    Label fill_;
    UniformQueries inner_;
};

}  // namespace holdout
