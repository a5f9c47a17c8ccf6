#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"
#include "holdout/random.hpp"

namespace holdout {

/// Linear-scan baseline.
///
/// Protocol: submit a uniformly random vector q0. Then visit points in index
/// order; at each point try the untried labels in a uniformly random order,
/// one query per candidate, changing only that coordinate:
///   - accuracy up by one match: the candidate is correct;
///   - accuracy down by one match: the previous value was correct (restored);
///   - unchanged: both are wrong, the candidate stays in place.
/// Once m - 1 labels are known wrong the last one is set without a query.
/// Stops after k queries in total (q0 included); unresolved points keep their
/// current value.
inline AttackOutcome linear_scan_attack(HoldoutOracle& oracle, std::size_t k, const AttackRandomness& rnd) {
    const std::size_t n = oracle.size();
    const std::size_t m = oracle.num_classes();
    std::vector<Label> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = rnd.uniform_label(AttackRandomness::kFillStream, i, m);
    if (k == 0) return oracle.evaluate(LabelVector(std::move(q), m));

    std::size_t current = oracle.query(q).count;
    std::size_t used = 1;
    std::vector<Label> order;
    order.reserve(m);
    for (std::size_t i = 0; i < n && used < k; ++i) {
        const Label start = q[i];
        order.clear();
        for (Label l = 0; l < m; ++l) {
            if (l != start) order.push_back(l);
        }
        // Fisher-Yates over the untried labels, keyed by (seed, point).
        BoundedDraw<SplitMix64> draw(SplitMix64(rnd.stream_seed(AttackRandomness::kScanStream, i)));
        for (std::size_t a = order.size(); a > 1; --a) {
            std::swap(order[a - 1], order[draw(static_cast<std::uint32_t>(a))]);
        }

        std::size_t known_wrong = 0;
        for (std::size_t idx = 0; idx < order.size() && used < k; ++idx) {
            q[i] = order[idx];
            const std::size_t observed = oracle.query(q).count;
            ++used;
            if (observed == current + 1) {
                current = observed;
                break;
            }
            if (observed + 1 == current) {
                q[i] = start;
                break;
            }
            known_wrong = idx == 0 ? 2 : known_wrong + 1;
            if (known_wrong == m - 1) {
                q[i] = order.back();
                ++current;
                break;
            }
        }
    }
    return oracle.evaluate(LabelVector(std::move(q), m));
}

/// Distribution of the number of queries the scan spends on one point
/// (index c holds P[cost = c]).
inline std::vector<double> linear_scan_cost_pmf(std::size_t m) {
    const std::size_t cap = std::max<std::size_t>(m >= 2 ? m - 2 : 1, 1);
    std::vector<double> pmf(cap + 1, 0.0);
    const double unit = 1.0 / static_cast<double>(m);
    pmf[1] += unit;  // starting guess was right; any change reveals it
    for (std::size_t position = 1; position <= m - 1; ++position) pmf[std::min(position, cap)] += unit;
    return pmf;
}

/// Exact expected bias of linear_scan_attack on a uniformly random labeling.
///
/// With B = k - 1 scan queries and i.i.d. per-point costs C_r, point r is
/// resolved iff C_1 + ... + C_r <= B, untouched (correct w.p. 1/m) iff
/// C_1 + ... + C_{r-1} >= B, and otherwise left wrong mid-scan.
inline double expected_linear_scan_bias(std::size_t n, std::size_t m, std::size_t k) {
    if (n == 0 || m < 2) throw DomainError("expected_linear_scan_bias needs n >= 1, m >= 2");
    const double inv_m = 1.0 / static_cast<double>(m);
    if (k == 0) return 0.0;
    const std::size_t budget = k - 1;
    const std::vector<double> pmf = linear_scan_cost_pmf(m);
    const std::size_t cap = pmf.size() - 1;

    // dist[s] = P[S_{r-1} = s] for s <= budget.
    std::vector<double> dist(budget + 1, 0.0), next(budget + 1, 0.0), prefix(budget + 2, 0.0);
    dist[0] = 1.0;
    double expected_correct = 0.0;
    const std::size_t last = std::min(n, budget + 1);
    for (std::size_t r = 1; r <= last; ++r) {
        double below_budget = 0.0;
        for (std::size_t s = 0; s < budget; ++s) below_budget += dist[s];
        expected_correct += (1.0 - below_budget) * inv_m;

        prefix[0] = 0.0;
        for (std::size_t s = 0; s <= budget; ++s) prefix[s + 1] = prefix[s] + dist[s];
        double resolved = 0.0;
        for (std::size_t s = 0; s <= budget; ++s) {
            double v = 0.0;
            if (cap <= 8) {
                for (std::size_t c = 1; c <= cap && c <= s; ++c) v += pmf[c] * dist[s - c];
            } else {
                // pmf is flat at 1/m on [2, cap-1]; add the two end masses separately.
                const std::size_t lo = s >= cap - 1 ? s - (cap - 1) : 0;  // s - c for c = cap - 1
                const std::size_t hi = s >= 2 ? s - 2 : 0;                 // s - c for c = 2
                if (s >= 2) v += inv_m * (prefix[hi + 1] - prefix[lo]);
                if (s >= 1) v += pmf[1] * dist[s - 1];
                if (s >= cap) v += pmf[cap] * dist[s - cap];
            }
            next[s] = v;
            resolved += v;
        }
        expected_correct += resolved;
        dist.swap(next);
    }
    // Points beyond budget + 1 are never reached: S_{r-1} >= r - 1 > budget - 1.
    if (n > last) expected_correct += static_cast<double>(n - last) * inv_m;
    return std::min(expected_correct / static_cast<double>(n), 1.0) - inv_m;
}

}  // namespace holdout
