#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holdout/bounds.hpp"
#include "holdout/errors.hpp"
#include "holdout/naive_bayes.hpp"
#include "holdout/oracle.hpp"
#include "holdout/queries.hpp"
#include "holdout/random.hpp"
#include "holdout/rational.hpp"
#include "holdout/types.hpp"

namespace holdout {

/// Outcome of one verification. For Monte-Carlo checks `estimate`,
/// `standard_error` and `threshold` describe the tested inequality; exact
/// checks leave them at zero and count compared identities in `checks`.
struct VerificationReport {
    VerificationReport() = default;
    explicit VerificationReport(std::string label) : name(std::move(label)) {}

    std::string name;
    bool passed = true;
    double estimate = 0.0;
    double standard_error = 0.0;
    double threshold = 0.0;
    std::size_t checks = 0;
    std::string detail;

    void fail(const std::string& why) {
        if (passed) detail = why;
        passed = false;
    }
};

inline constexpr std::uint64_t kEnumerationCap = 10'000'000;

namespace detail {

inline std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp, std::uint64_t cap) {
    std::uint64_t v = 1;
    for (std::uint64_t e = 0; e < exp; ++e) {
        v *= base;
        if (v > cap) throw CapacityError("enumeration exceeds the cap of " + std::to_string(cap) + " states");
    }
    return v;
}

/// Writes the base-m digits of `code` into `digits` (least significant first).
inline void decode(std::uint64_t code, std::size_t m, std::span<Label> digits) {
    for (Label& d : digits) {
        d = static_cast<Label>(code % m);
        code /= m;
    }
}

/// Small enumerated instance: Q stored row-major n x k.
struct SmallCase {
    std::size_t n, m, k;
    std::vector<Label> q;
    std::vector<std::size_t> c;  // match counts per column

    Label at(std::size_t i, std::size_t j) const { return q[i * k + j]; }

    void count(std::span<const Label> y) {
        std::fill(c.begin(), c.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) c[j] += at(i, j) == y[i];
        }
    }

    /// conf(label, Q_i, alpha) scaled by (n (m-1))^k: an exact integer.
    std::uint64_t scaled_conf(std::size_t i, Label label) const {
        std::uint64_t v = 1;
        for (std::size_t j = 0; j < k; ++j) v *= at(i, j) == label ? c[j] * (m - 1) : n - c[j];
        return v;
    }
};

}  // namespace detail

/// Exact check that, for uniform Q conditioned on its accuracy vector, each
/// entry Q_ij equals y_i with probability alpha_j and each other label with
/// probability (1 - alpha_j)/(m - 1), and that a whole row Q_i has
/// probability conf(y_i, Q_i, alpha). Uses y_i = i mod m.
inline VerificationReport verify_lemma_confidence(std::size_t n, std::size_t m, std::size_t k) {
    if (n < 1 || m < 2 || k < 1) throw DomainError("verify_lemma_confidence needs n >= 1, m >= 2, k >= 1");
    const std::uint64_t total = detail::checked_power(m, n * k, kEnumerationCap);
    const std::uint64_t groups = detail::checked_power(n + 1, k, kEnumerationCap);
    const std::uint64_t row_codes = detail::checked_power(m, k, kEnumerationCap);

    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<Label>(i % m);

    std::vector<std::uint64_t> group_size(groups, 0);
    std::vector<std::uint64_t> entry(groups * n * k * m, 0);     // [g][i][j][s]
    std::vector<std::uint64_t> row_hits(groups * n * row_codes, 0);  // [g][i][row]
    detail::SmallCase sc{n, m, k, std::vector<Label>(n * k), std::vector<std::size_t>(k)};
    for (std::uint64_t code = 0; code < total; ++code) {
        detail::decode(code, m, sc.q);
        sc.count(y);
        std::uint64_t g = 0;
        for (std::size_t j = k; j-- > 0;) g = g * (n + 1) + sc.c[j];
        ++group_size[g];
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t row = 0;
            for (std::size_t j = k; j-- > 0;) row = row * m + sc.at(i, j);
            ++row_hits[(g * n + i) * row_codes + row];
            for (std::size_t j = 0; j < k; ++j) ++entry[((g * n + i) * k + j) * m + sc.at(i, j)];
        }
    }

    VerificationReport report("lemma_confidence n=" + std::to_string(n) + " m=" + std::to_string(m) +
                              " k=" + std::to_string(k));
    std::vector<std::size_t> c(k);
    std::vector<Label> s(k);
    for (std::uint64_t g = 0; g < groups; ++g) {
        const std::uint64_t size = group_size[g];
        if (size == 0) continue;
        std::uint64_t rest = g;
        for (std::size_t j = 0; j < k; ++j) {
            c[j] = rest % (n + 1);
            rest /= n + 1;
        }
        auto where = [&](std::size_t i, std::size_t j, Label label) {
            std::ostringstream os;
            os << "alpha counts (";
            for (std::size_t t = 0; t < k; ++t) os << (t ? "," : "") << c[t];
            os << ")/" << n << " point " << i + 1 << " query " << j + 1 << " label " << label + 1;
            return os.str();
        };
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                for (Label l = 0; l < m; ++l) {
                    // P[Q_ij = l | alpha] as a rational against the predicted value.
                    const Rational observed(static_cast<std::int64_t>(entry[((g * n + i) * k + j) * m + l]),
                                            static_cast<std::int64_t>(size));
                    const Rational expected =
                        l == y[i] ? Rational(static_cast<std::int64_t>(c[j]), static_cast<std::int64_t>(n))
                                  : Rational(static_cast<std::int64_t>(n - c[j]), static_cast<std::int64_t>(n * (m - 1)));
                    ++report.checks;
                    if (observed != expected) report.fail("entry mismatch at " + where(i, j, l));
                }
            }
            for (std::uint64_t row = 0; row < row_codes; ++row) {
                detail::decode(row, m, s);
                std::int64_t num = 1;
                std::int64_t den = 1;
                for (std::size_t j = 0; j < k; ++j) {
                    num *= static_cast<std::int64_t>(s[j] == y[i] ? c[j] : n - c[j]);
                    den *= static_cast<std::int64_t>(s[j] == y[i] ? n : n * (m - 1));
                }
                const Rational observed(static_cast<std::int64_t>(row_hits[(g * n + i) * row_codes + row]),
                                        static_cast<std::int64_t>(size));
                ++report.checks;
                if (observed != Rational(num, den)) report.fail("row mismatch at " + where(i, 0, s[0]));
            }
        }
    }
    return report;
}

/// Point-wise decision rules compared against naive Bayes.
enum class PointRule { NaiveBayes, Plurality, CopyBestQuery, ConstantFirst, AntiNaiveBayes };

inline std::string_view to_string(PointRule r) {
    switch (r) {
        case PointRule::NaiveBayes: return "naive_bayes";
        case PointRule::Plurality: return "plurality";
        case PointRule::CopyBestQuery: return "copy_best_query";
        case PointRule::ConstantFirst: return "constant_1";
        case PointRule::AntiNaiveBayes: return "anti_naive_bayes";
    }
    return "?";
}

inline constexpr PointRule kAllRules[] = {PointRule::NaiveBayes, PointRule::Plurality, PointRule::CopyBestQuery,
                                          PointRule::ConstantFirst, PointRule::AntiNaiveBayes};

namespace detail {

/// Labels the rule would choose among (uniformly) at point i.
inline void rule_choices(PointRule rule, const SmallCase& sc, std::size_t i, std::span<std::uint8_t> tied) {
    const std::size_t m = sc.m;
    std::fill(tied.begin(), tied.end(), std::uint8_t{0});
    switch (rule) {
        case PointRule::NaiveBayes:
        case PointRule::AntiNaiveBayes: {
            std::vector<std::uint64_t> v(m);
            for (Label l = 0; l < m; ++l) v[l] = sc.scaled_conf(i, l);
            const std::uint64_t target = rule == PointRule::NaiveBayes ? *std::max_element(v.begin(), v.end())
                                                                      : *std::min_element(v.begin(), v.end());
            for (Label l = 0; l < m; ++l) tied[l] = v[l] == target;
            break;
        }
        case PointRule::Plurality: {
            std::vector<std::size_t> votes(m, 0);
            for (std::size_t j = 0; j < sc.k; ++j) ++votes[sc.at(i, j)];
            const std::size_t best = *std::max_element(votes.begin(), votes.end());
            for (Label l = 0; l < m; ++l) tied[l] = votes[l] == best;
            break;
        }
        case PointRule::CopyBestQuery: {
            std::size_t best = 0;
            for (std::size_t j = 1; j < sc.k; ++j) {
                if (sc.c[j] > sc.c[best]) best = j;
            }
            tied[sc.at(i, best)] = 1;
            break;
        }
        case PointRule::ConstantFirst: tied[0] = 1; break;
    }
}

}  // namespace detail

struct RuleAccuracy {
    PointRule rule;
    Rational expected_accuracy;
};

struct OptimalityReport {
    VerificationReport report;
    std::vector<RuleAccuracy> rules;  // in kAllRules order
};

/// Exact expected accuracy of every rule in kAllRules over uniform y and
/// uniform Q, with ties split uniformly. Passes when naive Bayes is at least
/// every rival, strictly above anti naive Bayes, the constant rule scores
/// exactly 1/m, and the production scorer picks the same maximizer sets.
inline OptimalityReport verify_nb_optimality(std::size_t n, std::size_t m, std::size_t k) {
    if (n < 1 || m < 2 || k < 1) throw DomainError("verify_nb_optimality needs n >= 1, m >= 2, k >= 1");
    const std::uint64_t labelings = detail::checked_power(m, n, kEnumerationCap);
    const std::uint64_t matrices = detail::checked_power(m, n * k, kEnumerationCap);
    if (labelings * matrices > kEnumerationCap) throw CapacityError("enumeration exceeds the cap");

    std::uint64_t lcm = 1;
    for (std::uint64_t d = 2; d <= m; ++d) lcm = std::lcm(lcm, d);

    constexpr std::size_t kRules = std::size(kAllRules);
    std::vector<std::uint64_t> score(kRules, 0);  // sum over (y, Q, i) of lcm * [y_i chosen] / |choices|
    OptimalityReport out{VerificationReport("nb_optimality n=" + std::to_string(n) + " m=" + std::to_string(m) +
                                            " k=" + std::to_string(k)),
                         {}};
    detail::SmallCase sc{n, m, k, std::vector<Label>(n * k), std::vector<std::size_t>(k)};
    std::vector<Label> y(n);
    std::vector<std::uint8_t> tied(m);
    std::vector<Label> row(k);
    for (std::uint64_t ycode = 0; ycode < labelings; ++ycode) {
        detail::decode(ycode, m, y);
        for (std::uint64_t qcode = 0; qcode < matrices; ++qcode) {
            detail::decode(qcode, m, sc.q);
            sc.count(y);
            const NbWeights weights = NbWeights::from_counts(AccuracyVector(n, sc.c), m);
            NbScorer scorer(weights);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t r = 0; r < kRules; ++r) {
                    detail::rule_choices(kAllRules[r], sc, i, tied);
                    const std::uint64_t size = std::accumulate(tied.begin(), tied.end(), std::uint64_t{0});
                    if (tied[y[i]]) score[r] += lcm / size;
                    if (kAllRules[r] == PointRule::NaiveBayes) {
                        for (std::size_t j = 0; j < k; ++j) row[j] = sc.at(i, j);
                        scorer.maximizers(row);
                        ++out.report.checks;
                        if (!std::equal(tied.begin(), tied.end(), scorer.tied().begin())) {
                            out.report.fail("production scorer disagrees with exact maximizers at y code " +
                                            std::to_string(ycode) + ", Q code " + std::to_string(qcode));
                        }
                    }
                }
            }
        }
    }

    const auto denom = static_cast<std::int64_t>(lcm * n * labelings * matrices);
    for (std::size_t r = 0; r < kRules; ++r) {
        out.rules.push_back({kAllRules[r], Rational(static_cast<std::int64_t>(score[r]), denom)});
    }
    const std::uint64_t nb = score[0];
    for (std::size_t r = 1; r < kRules; ++r) {
        ++out.report.checks;
        if (score[r] > nb) out.report.fail(std::string(to_string(kAllRules[r])) + " beats naive Bayes");
        if (kAllRules[r] == PointRule::AntiNaiveBayes && score[r] >= nb) {
            out.report.fail("anti naive Bayes is not strictly worse than naive Bayes");
        }
        if (kAllRules[r] == PointRule::ConstantFirst &&
            out.rules[r].expected_accuracy != Rational(1, static_cast<std::int64_t>(m))) {
            out.report.fail("constant rule accuracy differs from 1/m");
        }
    }
    out.report.estimate = static_cast<double>(nb) / static_cast<double>(denom);
    return out;
}

namespace detail {

inline std::vector<double> poisson_pmf_until(double mean, double tail) {
    std::vector<double> pmf;
    double p = std::exp(-mean);
    double cdf = 0.0;
    for (std::size_t x = 0;; ++x) {
        if (x > 0) p *= mean / static_cast<double>(x);
        pmf.push_back(p);
        cdf += p;
        if (cdf > 1.0 - tail || x > 100000) break;
    }
    return pmf;
}

}  // namespace detail

/// Compares counts drawn as Multinomial(Pois(lambda), p) with independent
/// Pois(p_i lambda) draws. Each coordinate's two empirical distributions must
/// be within 4/sqrt(trials) in total variation over the support up to where
/// the Poisson CDF passes 1 - 1e-6 (larger values share one tail bin), and
/// each empirical mean within 4 standard errors of p_i lambda.
inline VerificationReport verify_poissonization(double lambda, std::span<const double> p, std::size_t trials,
                                                std::uint64_t seed) {
    if (!(lambda >= 0.0) || p.empty() || trials == 0) throw DomainError("verify_poissonization needs lambda >= 0");
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DomainError("probabilities must be non-negative");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw DomainError("probabilities must sum to 1");
    const std::size_t m = p.size();

    std::vector<std::size_t> bins(m);
    for (std::size_t i = 0; i < m; ++i) bins[i] = detail::poisson_pmf_until(p[i] * lambda, 1e-6).size() + 1;
    std::vector<std::vector<std::uint64_t>> hist_mnom(m), hist_pois(m);
    for (std::size_t i = 0; i < m; ++i) {
        hist_mnom[i].assign(bins[i], 0);
        hist_pois[i].assign(bins[i], 0);
    }
    std::vector<double> sum_mnom(m, 0.0);

    const PoissonSampler total_draw(lambda);
    std::vector<PoissonSampler> coord_draw;
    for (double v : p) coord_draw.emplace_back(v * lambda);
    std::vector<double> cdf(m);
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    SplitMix64 gen_a(derive_seed(seed, {0xa1}));
    SplitMix64 gen_b(derive_seed(seed, {0xb2}));
    std::vector<std::uint64_t> counts(m);
    for (std::size_t t = 0; t < trials; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        const std::uint64_t draws = total_draw(gen_a);
        for (std::uint64_t d = 0; d < draws; ++d) {
            const double u = uniform01(gen_a) * cdf.back();
            std::size_t c = 0;
            while (c + 1 < m && u >= cdf[c]) ++c;
            ++counts[c];
        }
        for (std::size_t i = 0; i < m; ++i) {
            ++hist_mnom[i][std::min<std::size_t>(counts[i], bins[i] - 1)];
            sum_mnom[i] += static_cast<double>(counts[i]);
            const std::uint64_t x = coord_draw[i](gen_b);
            ++hist_pois[i][std::min<std::size_t>(x, bins[i] - 1)];
        }
    }

    VerificationReport report("poissonization lambda=" + std::to_string(lambda));
    const double td = static_cast<double>(trials);
    report.threshold = 4.0 / std::sqrt(td);
    for (std::size_t i = 0; i < m; ++i) {
        double tv = 0.0;
        for (std::size_t b = 0; b < bins[i]; ++b) {
            tv += std::fabs(static_cast<double>(hist_mnom[i][b]) - static_cast<double>(hist_pois[i][b]));
        }
        tv /= 2.0 * td;
        report.estimate = std::max(report.estimate, tv);
        ++report.checks;
        if (tv > report.threshold) report.fail("coordinate " + std::to_string(i + 1) + " TV " + std::to_string(tv));
        const double mean = p[i] * lambda;
        const double se = std::sqrt(mean / td);
        report.standard_error = std::max(report.standard_error, se);
        ++report.checks;
        if (std::fabs(sum_mnom[i] / td - mean) > 4.0 * se + 1e-15) {
            report.fail("coordinate " + std::to_string(i + 1) + " mean off by more than 4 SE");
        }
    }
    return report;
}

struct PluralityCheck {
    double constant = 1.0 / 20.0;
    bool enforce_preconditions = true;
};

/// Monte-Carlo estimate of P[argmax(c) = m] for c ~ Mnom(Pois(lambda),
/// rho_gamma), where rho_gamma puts 1/m + gamma on the last label and
/// 1/m - gamma/(m-1) on each other one; ties are broken uniformly.
/// With gamma > 0 the estimate must be at least
/// 1/m + constant * gamma * sqrt(lambda/m) - 3 SE; with gamma = 0 it must be
/// within 4 SE of 1/m.
inline VerificationReport verify_lemma_plurality(std::size_t m, double lambda, double gamma, std::size_t trials,
                                                 std::uint64_t seed, PluralityCheck check = {}) {
    if (m < 2 || trials == 0) throw DomainError("verify_lemma_plurality needs m >= 2 and trials >= 1");
    const double md = static_cast<double>(m);
    if (!(gamma >= 0.0) || gamma > (md - 1.0) / md) throw DomainError("gamma out of range");
    if (check.enforce_preconditions && gamma > 0.0) {
        if (lambda < 2.0 * md * std::log(4.0 * md)) throw DomainError("lambda below 2 m ln(4m)");
        if (gamma > (1.0 + 1e-12) / (8.0 * std::sqrt(lambda * md))) throw DomainError("gamma above 1/(8 sqrt(lambda m))");
    }

    const PoissonSampler draw_t(lambda);
    SplitMix64 gen(derive_seed(seed, {0xc3}));
    BoundedDraw<SplitMix64> pick(SplitMix64(derive_seed(seed, {0xd4})));
    const double p_last = 1.0 / md + gamma;
    std::vector<std::uint32_t> counts(m);
    std::size_t wins = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::fill(counts.begin(), counts.end(), 0);
        const std::uint64_t t = draw_t(gen);
        for (std::uint64_t d = 0; d < t; ++d) {
            const double u = uniform01(gen);
            if (u < p_last) {
                ++counts[m - 1];
            } else {
                const double scaled = (u - p_last) / (1.0 - p_last) * (md - 1.0);
                ++counts[std::min(static_cast<std::size_t>(scaled), m - 2)];
            }
        }
        std::uint32_t best = 0;
        for (std::uint32_t c : counts) best = std::max(best, c);
        if (counts[m - 1] != best) continue;
        std::uint32_t ties = 0;
        for (std::uint32_t c : counts) ties += c == best;
        wins += ties == 1 || pick(ties) == 0;
    }

    VerificationReport report("lemma_plurality m=" + std::to_string(m) + " lambda=" + std::to_string(lambda) +
                              " gamma=" + std::to_string(gamma));
    const double td = static_cast<double>(trials);
    report.estimate = static_cast<double>(wins) / td;
    report.standard_error = std::sqrt(std::max(report.estimate * (1.0 - report.estimate), 1e-300) / td);
    report.checks = 1;
    if (gamma > 0.0) {
        report.threshold = 1.0 / md + check.constant * gamma * std::sqrt(lambda / md);
        if (report.estimate < report.threshold - 3.0 * report.standard_error) {
            report.fail("estimate " + std::to_string(report.estimate) + " below threshold");
        }
    } else {
        report.threshold = 1.0 / md;
        if (std::fabs(report.estimate - report.threshold) > 4.0 * report.standard_error) {
            report.fail("gamma = 0 estimate " + std::to_string(report.estimate) + " differs from 1/m");
        }
    }
    return report;
}

using AttackFn = std::function<AttackOutcome(HoldoutOracle&, const AttackRandomness&)>;

/// Runs `attack` on fresh uniform labelings and counts trials whose bias
/// reaches the epsilon of upper_bound_epsilon(n, m, k, delta). Passes when
/// the count is at most delta T + 3 sqrt(delta T).
inline VerificationReport verify_upper_bound_empirically(const AttackFn& attack, std::size_t n, std::size_t m,
                                                         std::size_t k, double delta, std::size_t trials,
                                                         std::uint64_t seed) {
    const BoundReport bound = upper_bound_epsilon(n, m, k, delta);
    std::size_t violations = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, {t});
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = counter_draw(derive_seed(trial_seed, {0x1ab, i}), static_cast<std::uint32_t>(m));
        HoldoutOracle oracle(LabelVector(std::move(y), m));
        const AttackOutcome out = attack(oracle, AttackRandomness(derive_seed(trial_seed, {0xa7})));
        violations += out.bias() >= bound.epsilon;
    }
    VerificationReport report("upper_bound n=" + std::to_string(n) + " m=" + std::to_string(m) +
                              " k=" + std::to_string(k));
    const double td = static_cast<double>(trials);
    report.estimate = static_cast<double>(violations) / td;
    report.threshold = delta + 3.0 * std::sqrt(delta / td);
    report.checks = trials;
    if (static_cast<double>(violations) > delta * td + 3.0 * std::sqrt(delta * td)) {
        report.fail(std::to_string(violations) + " of " + std::to_string(trials) + " trials exceed epsilon");
    }
    return report;
}

}  // namespace holdout
