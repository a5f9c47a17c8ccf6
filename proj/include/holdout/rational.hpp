#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>

#include "holdout/errors.hpp"

namespace holdout {

namespace detail {
__extension__ typedef __int128 Wide;
}  // namespace detail

/// Exact fraction with 64-bit numerator and positive denominator, kept in lowest terms.
/// Intermediate products use 128-bit integers; results that do not fit throw.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
    Rational(std::int64_t num, std::int64_t den) { assign(num, den); }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::Wide>(a.num_) * b.den_ + static_cast<detail::Wide>(b.num_) * a.den_,
                         static_cast<detail::Wide>(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::Wide>(a.num_) * b.den_ - static_cast<detail::Wide>(b.num_) * a.den_,
                         static_cast<detail::Wide>(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::Wide>(a.num_) * b.num_, static_cast<detail::Wide>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw DomainError("Rational division by zero");
        return from_wide(static_cast<detail::Wide>(a.num_) * b.den_, static_cast<detail::Wide>(a.den_) * b.num_);
    }

    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
        const detail::Wide lhs = static_cast<detail::Wide>(a.num_) * b.den_;
        const detail::Wide rhs = static_cast<detail::Wide>(b.num_) * a.den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        os << r.num_;
        if (r.den_ != 1) os << '/' << r.den_;
        return os;
    }

private:
    static Rational from_wide(detail::Wide num, detail::Wide den) {
        if (den == 0) throw DomainError("Rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        detail::Wide a = num < 0 ? -num : num;
        detail::Wide b = den;
        while (b != 0) {
            const detail::Wide t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
        constexpr detail::Wide lo = INT64_MIN;
        constexpr detail::Wide hi = INT64_MAX;
        if (num < lo || num > hi || den > hi) throw CapacityError("Rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }

    void assign(std::int64_t num, std::int64_t den) { *this = from_wide(num, den); }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace holdout
