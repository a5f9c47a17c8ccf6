#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/oracle.hpp"
#include "holdout/prior_table.hpp"
#include "holdout/queries.hpp"
#include "holdout/types.hpp"

namespace holdout {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Log-likelihood of a point's query values given a hypothesized label.
struct ConfidenceScore {
    double log_value = 0.0;
    Label label = 0;
};

namespace detail {

inline double log_match(std::size_t c, std::size_t n) {
    return c == 0 ? kNegInf : std::log(static_cast<double>(c)) - std::log(static_cast<double>(n));
}

inline double log_mismatch(std::size_t c, std::size_t n, std::size_t m) {
    if (c == n) return kNegInf;
    return std::log(static_cast<double>(n - c)) - std::log(static_cast<double>(n)) -
           std::log(static_cast<double>(m - 1));
}

inline void check_row(std::span<const Label> s, const AccuracyVector& alpha, std::size_t m) {
    if (m < 2) throw InputError("need at least two classes");
    if (s.size() != alpha.size()) throw InputError("query row and accuracy vector lengths differ");
    for (Label v : s) {
        if (v >= m) throw InputError("query value out of range");
    }
}

}  // namespace detail

/// ln conf(label, s, alpha): sum of ln alpha_j over matching queries and
/// ln((1 - alpha_j)/(m - 1)) over the rest. Exactly -inf when a factor is zero.
inline double conf(Label label, std::span<const Label> s, const AccuracyVector& alpha, std::size_t m) {
    detail::check_row(s, alpha, m);
    if (label >= m) throw InputError("label out of range");
    double total = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double term = s[j] == label ? detail::log_match(alpha.matches(j), alpha.n())
                                          : detail::log_mismatch(alpha.matches(j), alpha.n(), m);
        if (term == kNegInf) return kNegInf;
        total += term;
    }
    return total;
}

/// ln(pi(label)) + ln conf(label, s, alpha) for every label.
inline std::vector<ConfidenceScore> confidence_scores(std::span<const Label> s, const AccuracyVector& alpha,
                                                      std::size_t m, std::span<const double> prior_row = {}) {
    if (!prior_row.empty() && prior_row.size() != m) throw InputError("prior row length differs from m");
    std::vector<ConfidenceScore> out;
    out.reserve(m);
    for (Label l = 0; l < m; ++l) {
        double v = conf(l, s, alpha, m);
        if (!prior_row.empty()) v = prior_row[l] == 0.0 ? kNegInf : v + std::log(prior_row[l]);
        out.push_back({v, l});
    }
    return out;
}

/// Per-query weights for the naive-Bayes decision. A label's score is the sum
/// of `gain` over queries that voted for it, which differs from ln conf only by
/// a label-independent constant. Queries with accuracy 0 or 1 are flagged
/// instead: they rule labels out.
class NbWeights {
public:
    enum class Kind : std::uint8_t { Finite, Zero, One };

    /// Exact weights from match counts. gain = ln(c (m-1)) - ln(n - c), which is
    /// exactly 0 when c (m-1) = n - c, i.e. alpha = 1/m.
    static NbWeights from_counts(const AccuracyVector& alpha, std::size_t m) {
        NbWeights w(m, alpha.size());
        const std::size_t n = alpha.n();
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            const std::size_t c = alpha.matches(j);
            if (c == 0) {
                w.kind_[j] = Kind::Zero;
            } else if (c == n) {
                w.kind_[j] = Kind::One;
                ++w.ones_;
            } else {
                const auto vote = static_cast<std::uint64_t>(c) * (m - 1);
                const auto against = static_cast<std::uint64_t>(n - c);
                w.gain_[j] = vote == against
                                 ? 0.0
                                 : std::log(static_cast<double>(vote)) - std::log(static_cast<double>(against));
            }
        }
        return w;
    }

    /// Weights from real-valued accuracy estimates (used when accuracies are
    /// only known up to a shift and have been re-centered).
    static NbWeights from_estimates(std::span<const double> alpha, std::size_t m) {
        NbWeights w(m, alpha.size());
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            const double a = alpha[j];
            if (!std::isfinite(a)) throw InputError("accuracy estimate is not finite");
            if (a <= 0.0) {
                w.kind_[j] = Kind::Zero;
            } else if (a >= 1.0) {
                w.kind_[j] = Kind::One;
                ++w.ones_;
            } else {
                w.gain_[j] = std::log(a * static_cast<double>(m - 1)) - std::log1p(-a);
            }
        }
        return w;
    }

    std::size_t size() const noexcept { return gain_.size(); }
    std::size_t num_classes() const noexcept { return m_; }
    double gain(std::size_t j) const noexcept { return gain_[j]; }
    Kind kind(std::size_t j) const noexcept { return kind_[j]; }
    std::size_t certain_count() const noexcept { return ones_; }
    bool has_certain_or_impossible() const noexcept {
        for (Kind k : kind_) {
            if (k != Kind::Finite) return true;
        }
        return false;
    }

private:
    NbWeights(std::size_t m, std::size_t k) : m_(m), gain_(k, 0.0), kind_(k, Kind::Finite) {}

    std::size_t m_;
    std::vector<double> gain_;
    std::vector<Kind> kind_;
    std::size_t ones_ = 0;
};

/// Reusable per-point scratch for the naive-Bayes decision rule.
class NbScorer {
public:
    static constexpr double kTieTolerance = 1e-9;

    explicit NbScorer(NbWeights&&) = delete;  // keeps a pointer to the weights
    explicit NbScorer(const NbWeights& weights)
        : w_(&weights),
          m_(weights.num_classes()),
          track_flags_(weights.has_certain_or_impossible()),
          score_(m_),
          zero_hits_(m_),
          one_hits_(m_),
          tied_(m_) {}

    /// Marks in `tied()` the labels maximizing ln prior + ln conf for this
    /// row. If every label has probability zero, all labels are marked.
    /// Returns the number of maximizers.
    std::size_t maximizers(std::span<const Label> row, std::span<const double> prior_row = {}) {
        std::fill(score_.begin(), score_.end(), 0.0);
        if (track_flags_) {
            std::fill(zero_hits_.begin(), zero_hits_.end(), 0);
            std::fill(one_hits_.begin(), one_hits_.end(), 0);
            for (std::size_t j = 0; j < row.size(); ++j) {
                switch (w_->kind(j)) {
                    case NbWeights::Kind::Finite: score_[row[j]] += w_->gain(j); break;
                    case NbWeights::Kind::Zero: ++zero_hits_[row[j]]; break;
                    case NbWeights::Kind::One: ++one_hits_[row[j]]; break;
                }
            }
        } else {
            for (std::size_t j = 0; j < row.size(); ++j) score_[row[j]] += w_->gain(j);
        }

        double best = kNegInf;
        for (std::size_t l = 0; l < m_; ++l) {
            if (track_flags_ && (zero_hits_[l] != 0 || one_hits_[l] != w_->certain_count())) {
                score_[l] = kNegInf;
                continue;
            }
            if (!prior_row.empty()) score_[l] = prior_row[l] > 0.0 ? score_[l] + std::log(prior_row[l]) : kNegInf;
            best = std::max(best, score_[l]);
        }

        std::size_t count = 0;
        if (best == kNegInf) {
            std::fill(tied_.begin(), tied_.end(), std::uint8_t{1});
            return m_;
        }
        const double cutoff = best - kTieTolerance * std::max(1.0, std::fabs(best));
        for (std::size_t l = 0; l < m_; ++l) {
            tied_[l] = score_[l] >= cutoff ? 1 : 0;
            count += tied_[l];
        }
        return count;
    }

    std::span<const std::uint8_t> tied() const noexcept { return tied_; }

    Label decide(std::size_t point, std::span<const Label> row, const AttackRandomness& rnd,
                 std::span<const double> prior_row = {}) {
        const std::size_t count = maximizers(row, prior_row);
        if (count == 1) {
            for (std::size_t l = 0; l < m_; ++l) {
                if (tied_[l]) return static_cast<Label>(l);
            }
        }
        return rnd.break_tie(point, tied_);
    }

private:
    const NbWeights* w_;
    std::size_t m_;
    bool track_flags_;
    std::vector<double> score_;
    std::vector<std::uint32_t> zero_hits_;
    std::vector<std::uint32_t> one_hits_;
    std::vector<std::uint8_t> tied_;
};

/// NB decision for every row of a query source, with an optional prior.
template <QueryRows Q>
LabelVector nb_predict(const Q& queries, const NbWeights& weights, const PriorTable* prior,
                       const AttackRandomness& rnd) {
    const std::size_t n = queries.rows();
    const std::size_t m = queries.num_classes();
    if (weights.size() != queries.cols() || weights.num_classes() != m) {
        throw InputError("weights do not match the query shape");
    }
    if (prior && (prior->rows() != n || prior->num_classes() != m)) throw InputError("prior shape mismatch");
    NbScorer scorer(weights);
    std::vector<Label> row(queries.cols());
    std::vector<Label> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        queries.fill_row(i, row);
        out[i] = scorer.decide(i, row, rnd, prior ? prior->row(i) : std::span<const double>{});
    }
    return LabelVector(std::move(out), m);
}

/// The naive-Bayes attack: k uniformly random queries, then per point the
/// label maximizing prior x conf, ties broken uniformly at random.
/// `prior == nullptr` is the uniform prior.
inline AttackOutcome nb_attack(HoldoutOracle& oracle, std::size_t k, const PriorTable* prior,
                               const AttackRandomness& rnd) {
    if (k == 0) throw InputError("nb_attack needs k >= 1");
    const UniformQueries queries(oracle.size(), k, oracle.num_classes(), rnd);
    const AccuracyVector alpha = oracle.submit(queries);
    const NbWeights weights = NbWeights::from_counts(alpha, oracle.num_classes());
    return oracle.evaluate(nb_predict(queries, weights, prior, rnd));
}

}  // namespace holdout
