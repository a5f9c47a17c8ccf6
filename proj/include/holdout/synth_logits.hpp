#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/priors.hpp"
#include "holdout/random.hpp"
#include "holdout/types.hpp"

namespace holdout {

struct RecallTarget {
    std::size_t r = 1;
    double recall = 0.0;
};

struct SyntheticLogits {
    LabelVector labels;
    LogitsTable logits;
};

/// Expected probability that the true label sits at each rank (index 0 is
/// the top rank), piecewise constant between the targets with the leftover
/// mass spread over ranks past the last target.
inline std::vector<double> rank_profile(std::size_t m, double top1, std::span<const RecallTarget> targets) {
    if (m < 2) throw InputError("need at least two classes");
    if (!(top1 > 0.0 && top1 <= 1.0)) throw InputError("top-1 target must be in (0, 1]");
    std::vector<RecallTarget> all{{1, top1}};
    for (const RecallTarget& t : targets) {
        if (t.r == 1) {
            if (t.recall != top1) throw InputError("conflicting top-1 targets");
            continue;
        }
        all.push_back(t);
    }
    std::sort(all.begin(), all.end(), [](const RecallTarget& a, const RecallTarget& b) { return a.r < b.r; });

    std::vector<double> profile(m, 0.0);
    std::size_t prev_r = 0;
    double prev_recall = 0.0;
    for (const RecallTarget& t : all) {
        if (t.r > m || t.r == prev_r) throw InputError("recall target rank out of range or repeated");
        if (t.recall < prev_recall || t.recall > 1.0) throw InputError("recall targets must be non-decreasing in R");
        const double each = (t.recall - prev_recall) / static_cast<double>(t.r - prev_r);
        for (std::size_t q = prev_r; q < t.r; ++q) profile[q] = each;
        prev_r = t.r;
        prev_recall = t.recall;
    }
    const double rest = 1.0 - prev_recall;
    if (prev_r == m) {
        if (rest > 1e-12) throw InputError("recall at R = m must be 1");
    } else {
        for (std::size_t q = prev_r; q < m; ++q) profile[q] = rest / static_cast<double>(m - prev_r);
    }
    for (std::size_t q = 1; q < m; ++q) {
        if (profile[q] > profile[q - 1] + 1e-15) throw InputError("recall targets imply an increasing rank profile");
    }
    return profile;
}

/// Synthetic labels and calibrated logits with given top-R recalls.
///
/// Each point gets a rank distribution p = lambda e_1 + (1 - lambda) D with
/// lambda ~ Beta(lbar, 1 - lbar), lbar = min(1/2, P_1 - P_2), and D chosen so
/// that E[p] equals the rank profile P. The true label's rank is drawn from p,
/// the logit of the label at rank q is ln p_q - 1e-9 q, and ranks are assigned
/// to labels by a uniform permutation. Softmax at temperature 1 then gives
/// exactly p, so the logits are calibrated, and the expected top-R recall is
/// P_1 + ... + P_R.
inline SyntheticLogits synth_logits(std::size_t n, std::size_t m, double top1, std::span<const RecallTarget> targets,
                                    std::uint64_t seed) {
    if (n == 0) throw InputError("need at least one point");
    const std::vector<double> profile = rank_profile(m, top1, targets);
    const double lbar = std::min(0.5, profile[0] - (m > 1 ? profile[1] : 0.0));
    std::vector<double> base(profile);
    if (lbar > 0.0) {
        base[0] -= lbar;
        for (double& v : base) v = std::max(0.0, v / (1.0 - lbar));
    }

    std::vector<Label> labels(n);
    std::vector<double> scores(n * m);
    std::vector<double> p(m);
    std::vector<Label> perm(m);
    for (std::size_t i = 0; i < n; ++i) {
        SplitMix64 gen(derive_seed(seed, {0x5e, i}));
        double lambda = 0.0;
        if (lbar > 0.0) {
            std::gamma_distribution<double> ga(lbar, 1.0), gb(1.0 - lbar, 1.0);
            const double a = ga(gen);
            const double b = gb(gen);
            lambda = a + b > 0.0 ? a / (a + b) : lbar;
        }
        double total = 0.0;
        for (std::size_t q = 0; q < m; ++q) {
            p[q] = (1.0 - lambda) * base[q] + (q == 0 ? lambda : 0.0);
            total += p[q];
        }
        double u = uniform01(gen) * total;
        std::size_t rank = m - 1;
        for (std::size_t q = 0; q < m; ++q) {
            if (u < p[q]) {
                rank = q;
                break;
            }
            u -= p[q];
        }
        while (p[rank] <= 0.0 && rank > 0) --rank;  // guard against rounding past the support

        std::iota(perm.begin(), perm.end(), Label{0});
        BoundedDraw<SplitMix64> draw(gen);
        for (std::size_t a = m; a > 1; --a) std::swap(perm[a - 1], perm[draw(static_cast<std::uint32_t>(a))]);
        double* row = scores.data() + i * m;
        for (std::size_t q = 0; q < m; ++q) {
            row[perm[q]] = std::log(std::max(p[q], 1e-30)) - 1e-9 * static_cast<double>(q);
        }
        labels[i] = perm[rank];
    }
    return {LabelVector(std::move(labels), m), LogitsTable(n, m, std::move(scores))};
}

/// Fraction of points whose true label is among the R highest logits (ties
/// to the lower label).
inline double top_r_recall(const LogitsTable& logits, const LabelVector& labels, std::size_t r) {
    if (logits.rows() != labels.size()) throw InputError("shape mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const Label y = labels[i];
        std::size_t above = 0;
        for (Label l = 0; l < row.size(); ++l) {
            if (row[l] > row[y] || (row[l] == row[y] && l < y)) ++above;
        }
        hits += above < r;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace holdout
