#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"
#include "holdout/types.hpp"

namespace holdout {

struct ReconstructionParams {
    std::size_t t = 0;
    std::size_t k = 0;
    Label fill_label = 0;  // "1" in one-based output
    std::size_t enumeration_cap = 10'000'000;
};

/// True when some shift b in [0, n - t] gives c_j = r_j(z) + b for every
/// query j, where r_j(z) counts matches of z against column j of `prefix`.
inline bool satisfies_shifted_accuracy(std::span<const Label> z, const QueryMatrix& prefix,
                                       const AccuracyVector& alpha) {
    if (z.size() != prefix.rows() || prefix.cols() != alpha.size()) throw InputError("shape mismatch");
    const std::size_t slack = alpha.n() - prefix.rows();
    std::optional<std::size_t> shift;
    for (std::size_t j = 0; j < prefix.cols(); ++j) {
        std::size_t r = 0;
        for (std::size_t i = 0; i < z.size(); ++i) r += prefix.at(i, j) == z[i];
        if (alpha.matches(j) < r) return false;
        const std::size_t b = alpha.matches(j) - r;
        if (b > slack || (shift && *shift != b)) return false;
        shift = b;
    }
    return true;
}

/// Enumerates [m]^t in lexicographic order and returns the unique labeling
/// consistent with the shifted accuracies of `prefix` (the t x k random part).
/// Throws AmbiguityError on a second consistent labeling and
/// InconsistentOracleError when there is none.
inline LabelVector reconstruct_prefix(const QueryMatrix& prefix, const AccuracyVector& alpha,
                                      std::size_t enumeration_cap = 10'000'000) {
    const std::size_t t = prefix.rows();
    const std::size_t k = prefix.cols();
    const std::size_t m = prefix.num_classes();
    if (t == 0 || k == 0) throw InputError("reconstruction needs t >= 1 and k >= 1");
    if (k != alpha.size() || t > alpha.n()) throw InputError("shape mismatch");
    double space = std::pow(static_cast<double>(m), static_cast<double>(t));
    if (space > static_cast<double>(enumeration_cap)) {
        throw CapacityError("m^t = " + std::to_string(space) + " labelings exceeds the enumeration cap");
    }
    const std::size_t slack = alpha.n() - t;

    std::vector<Label> z(t, 0);
    // r[j]: matches of z against column j, kept current as the odometer turns.
    std::vector<std::size_t> r(k, 0);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < k; ++j) r[j] += prefix.at(i, j) == 0;
    }
    auto consistent = [&] {
        if (alpha.matches(0) < r[0]) return false;
        const std::size_t b = alpha.matches(0) - r[0];
        if (b > slack) return false;
        for (std::size_t j = 1; j < k; ++j) {
            if (alpha.matches(j) != r[j] + b) return false;
        }
        return true;
    };
    auto move_digit = [&](std::size_t i, Label from, Label to) {
        for (std::size_t j = 0; j < k; ++j) {
            const Label v = prefix.at(i, j);
            r[j] -= v == from;
            r[j] += v == to;
        }
    };

    std::optional<std::vector<Label>> found;
    for (;;) {
        if (consistent()) {
            if (found) throw AmbiguityError("more than one labeling matches the shifted accuracies");
            found = z;
        }
        // Advance; the last coordinate is least significant.
        std::size_t pos = t;
        while (pos > 0) {
            --pos;
            if (z[pos] + 1 < m) {
                move_digit(pos, z[pos], z[pos] + 1);
                ++z[pos];
                break;
            }
            move_digit(pos, z[pos], 0);
            z[pos] = 0;
            if (pos == 0) {
                pos = t;  // wrapped around
                break;
            }
        }
        if (pos == t) break;
    }
    if (!found) throw InconsistentOracleError("no labeling matches the observed accuracies");
    return LabelVector(std::move(*found), m);
}

/// Everything the attacker saw and decided in one reconstruction run.
struct ReconstructionRun {
    QueryMatrix prefix;  // the t x k random part of the queries
    AccuracyVector alpha;
    LabelVector z;
    AttackOutcome outcome;
};

/// Reconstruction attack for an oracle that reveals point identities: k
/// random queries on the first t points with every other point fixed to
/// `fill_label`, then exhaustive search over [m]^t. Points past t get
/// uniform random labels. Search failures propagate as AmbiguityError or
/// InconsistentOracleError before the final evaluation.
inline ReconstructionRun run_reconstruction(HoldoutOracle& oracle, const ReconstructionParams& params,
                                            const AttackRandomness& rnd) {
    if (!oracle.reveals_points()) throw StateError("reconstruction needs an oracle that reveals points");
    const std::size_t n = oracle.size();
    const std::size_t m = oracle.num_classes();
    if (params.t < 1 || params.t > n) throw InputError("reconstruction needs 1 <= t <= n");
    if (params.k < 1) throw InputError("reconstruction needs k >= 1");
    if (params.fill_label >= m) throw InputError("fill label out of range");
    if (std::pow(static_cast<double>(m), static_cast<double>(params.t)) >
        static_cast<double>(params.enumeration_cap)) {
        throw CapacityError("m^t exceeds the enumeration cap");
    }

    const PaddedQueries queries(n, params.t, params.k, m, params.fill_label, rnd);
    AccuracyVector alpha = oracle.submit(queries);
    QueryMatrix prefix = QueryMatrix::materialize(UniformQueries(params.t, params.k, m, rnd));
    LabelVector z = reconstruct_prefix(prefix, alpha, params.enumeration_cap);

    std::vector<Label> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i < params.t ? z[i] : rnd.uniform_label(AttackRandomness::kFillStream, i, m);
    }
    AttackOutcome outcome = oracle.evaluate(LabelVector(std::move(out), m));
    return {std::move(prefix), std::move(alpha), std::move(z), std::move(outcome)};
}

inline AttackOutcome reconstruction_attack(HoldoutOracle& oracle, const ReconstructionParams& params,
                                           const AttackRandomness& rnd) {
    return run_reconstruction(oracle, params, rnd).outcome;
}

/// ceil(max(5 n ln m / ln(n / 4m), 20 m ln(n m))): queries sufficient for
/// identification from shifted accuracies. Needs m >= 3 and n > 4m.
inline std::size_t reconstruction_query_budget(std::size_t n, std::size_t m) {
    if (m < 3) throw DomainError("reconstruction_query_budget needs m >= 3");
    if (n <= 4 * m) throw DomainError("reconstruction_query_budget needs n > 4m");
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    const double first = 5.0 * nd * std::log(md) / std::log(nd / (4.0 * md));
    const double second = 20.0 * md * std::log(nd * md);
    return static_cast<std::size_t>(std::ceil(std::max(first, second)));
}

}  // namespace holdout
