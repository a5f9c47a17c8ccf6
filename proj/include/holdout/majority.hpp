#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"

namespace holdout {

/// A query is sign-flipped when its accuracy is strictly below 1/2.
inline std::vector<std::uint8_t> majority_flips(const AccuracyVector& alpha) {
    std::vector<std::uint8_t> flip(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j) flip[j] = 2 * alpha.matches(j) < alpha.n() ? 1 : 0;
    return flip;
}

/// Flip-then-majority for one binary row; ties broken at random.
inline Label majority_decide(std::size_t point, std::span<const Label> row, std::span<const std::uint8_t> flip,
                             const AttackRandomness& rnd) {
    std::int64_t balance = 0;  // votes for label 0 minus votes for label 1
    for (std::size_t j = 0; j < row.size(); ++j) {
        const Label corrected = row[j] ^ flip[j];
        balance += corrected == 0 ? 1 : -1;
    }
    if (balance > 0) return 0;
    if (balance < 0) return 1;
    static constexpr std::uint8_t both[2] = {1, 1};
    return rnd.break_tie(point, both);
}

/// Binary majority attack: k uniformly random queries, each flipped when its
/// accuracy is below 1/2, then a per-point unweighted majority vote.
inline AttackOutcome majority_attack_binary(HoldoutOracle& oracle, std::size_t k, const AttackRandomness& rnd) {
    if (oracle.num_classes() != 2) throw UnsupportedError("majority attack is defined for m = 2 only");
    if (k == 0) throw InputError("majority_attack_binary needs k >= 1");
    const std::size_t n = oracle.size();
    const UniformQueries queries(n, k, 2, rnd);
    const AccuracyVector alpha = oracle.submit(queries);
    const std::vector<std::uint8_t> flip = majority_flips(alpha);
    std::vector<Label> row(k);
    std::vector<Label> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        queries.fill_row(i, row);
        out[i] = majority_decide(i, row, flip, rnd);
    }
    return oracle.evaluate(LabelVector(std::move(out), 2));
}

}  // namespace holdout
