#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string_view>

#include "holdout/errors.hpp"

namespace holdout {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives a child seed from a parent seed and a path of integer coordinates.
/// Distinct paths give unrelated streams; the result does not depend on the
/// order in which children are requested.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(parent + kGolden);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + kGolden));
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                    std::initializer_list<std::uint64_t> path = {}) noexcept {
    std::uint64_t h = mix64(parent ^ fnv1a64(tag));
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + kGolden));
    return h;
}

/// Sequential SplitMix64 stream. Cheap to construct, so one stream per test
/// point (or per query row) can be keyed by a derived seed.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

/// Uniform integers in [0, bound) drawn from 32-bit halves of a 64-bit
/// generator using Lemire's multiply-shift with rejection (exactly uniform).
template <class Gen>
class BoundedDraw {
public:
    explicit BoundedDraw(Gen gen) : gen_(std::move(gen)) {}

    std::uint32_t operator()(std::uint32_t bound) {
        const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
        for (;;) {
            const std::uint64_t product = static_cast<std::uint64_t>(next32()) * bound;
            if (static_cast<std::uint32_t>(product) >= threshold) return static_cast<std::uint32_t>(product >> 32);
        }
    }

    Gen& generator() noexcept { return gen_; }

private:
    std::uint32_t next32() {
        if (have_low_) {
            have_low_ = false;
            return low_;
        }
        const std::uint64_t w = gen_();
        low_ = static_cast<std::uint32_t>(w);
        have_low_ = true;
        return static_cast<std::uint32_t>(w >> 32);
    }

    Gen gen_;
    std::uint32_t low_ = 0;
    bool have_low_ = false;
};

/// Uniform label in [0, bound) from a single counter key; rejection advances the key.
inline std::uint32_t counter_draw(std::uint64_t key, std::uint32_t bound) noexcept {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t w = mix64(key + attempt * kGolden);
        const std::uint64_t product = (w >> 32) * bound;
        if (static_cast<std::uint32_t>(product) >= threshold) return static_cast<std::uint32_t>(product >> 32);
    }
}

/// Uniform double in [0, 1) with 53 random bits.
template <class URBG>
double uniform01(URBG& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Exact Poisson sampler: sequential inversion for small means, Hormann's
/// PTRS transformed rejection with squeeze for mean >= 30.
class PoissonSampler {
public:
    static constexpr double kInversionLimit = 30.0;

    explicit PoissonSampler(double mean) : mean_(mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
        if (mean_ < kInversionLimit) {
            exp_neg_mean_ = std::exp(-mean_);
        } else {
            const double slam = std::sqrt(mean_);
            log_mean_ = std::log(mean_);
            b_ = 0.931 + 2.53 * slam;
            a_ = -0.059 + 0.02483 * b_;
            inv_alpha_ = 1.1239 + 1.1328 / (b_ - 3.4);
            vr_ = 0.9277 - 3.6224 / (b_ - 2.0);
        }
    }

    double mean() const noexcept { return mean_; }

    template <class URBG>
    std::uint64_t operator()(URBG& gen) const {
        if (mean_ == 0.0) return 0;
        return mean_ < kInversionLimit ? inversion(gen) : ptrs(gen);
    }

private:
    template <class URBG>
    std::uint64_t inversion(URBG& gen) const {
        double u = uniform01(gen);
        std::uint64_t k = 0;
        double p = exp_neg_mean_;
        double cdf = p;
        while (u > cdf) {
            ++k;
            p *= mean_ / static_cast<double>(k);
            const double next = cdf + p;
            // Round-off can stall the cdf below 1; restart on the far tail.
            if (next == cdf) {
                u = uniform01(gen);
                k = 0;
                p = exp_neg_mean_;
                cdf = p;
                continue;
            }
            cdf = next;
        }
        return k;
    }

    template <class URBG>
    std::uint64_t ptrs(URBG& gen) const {
        for (;;) {
            const double u = uniform01(gen) - 0.5;
            const double v = uniform01(gen);
            const double us = 0.5 - std::fabs(u);
            const double k = std::floor((2.0 * a_ / us + b_) * u + mean_ + 0.43);
            if (us >= 0.07 && v <= vr_) return static_cast<std::uint64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(inv_alpha_) - std::log(a_ / (us * us) + b_) <=
                -mean_ + k * log_mean_ - std::lgamma(k + 1.0)) {
                return static_cast<std::uint64_t>(k);
            }
        }
    }

    double mean_;
    double exp_neg_mean_ = 0.0;
    double log_mean_ = 0.0;
    double a_ = 0.0, b_ = 0.0, inv_alpha_ = 0.0, vr_ = 0.0;
};

}  // namespace holdout
