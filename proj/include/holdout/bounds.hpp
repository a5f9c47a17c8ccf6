#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string_view>

#include "holdout/errors.hpp"

namespace holdout {

enum class BoundRegime { Sqrt, Linear };

inline std::string_view to_string(BoundRegime r) { return r == BoundRegime::Sqrt ? "sqrt" : "linear"; }

struct BoundReport {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t k = 0;
    double delta = 0.0;
    double b = 0.0;        // k ln(n + 1) + ln(1 / delta)
    double epsilon = 0.0;  // 2 max(sqrt(b / (n m)), b / n)
    BoundRegime regime = BoundRegime::Sqrt;
};

/// Bias level that no k-query attack exceeds with probability more than delta.
/// The linear branch applies exactly when b / n >= 1 / m.
inline BoundReport upper_bound_epsilon(std::size_t n, std::size_t m, std::size_t k, double delta) {
    if (n < 1 || m < 2) throw DomainError("upper_bound_epsilon needs n >= 1 and m >= 2");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must be in (0, 1]");
    BoundReport r{n, m, k, delta};
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    r.b = static_cast<double>(k) * std::log1p(nd) - std::log(delta);
    r.regime = r.b * md >= nd ? BoundRegime::Linear : BoundRegime::Sqrt;
    r.epsilon = 2.0 * (r.regime == BoundRegime::Linear ? r.b / nd : std::sqrt(r.b / (nd * md)));
    return r;
}

/// Bound on the expected bias of any k-query attack (delta = 1/n).
inline double expected_accuracy_bound(std::size_t n, std::size_t m, std::size_t k) {
    if (n < 1 || m < 2) throw DomainError("expected_accuracy_bound needs n >= 1 and m >= 2");
    const double nd = static_cast<double>(n);
    const double b = static_cast<double>(k + 1) * std::log1p(nd);
    return 1.0 / nd + 2.0 * std::max(std::sqrt(b / (nd * static_cast<double>(m))), b / nd);
}

/// Scale sqrt(k) / (m sqrt(n)) of the bias the naive-Bayes attack achieves.
inline double nb_lower_bound(std::size_t n, std::size_t m, std::size_t k) {
    if (n < 1 || m < 1) throw DomainError("nb_lower_bound needs n, m >= 1");
    return std::sqrt(static_cast<double>(k)) / (static_cast<double>(m) * std::sqrt(static_cast<double>(n)));
}

}  // namespace holdout
