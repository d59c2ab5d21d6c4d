#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rebal {

/// Monetary amounts are exact integer counts of minor currency units
/// (e.g. cents). All arithmetic is integer arithmetic; fee products are
/// rounded once, at pricing time, with round-half-to-even.
using Money = std::int64_t;

namespace detail {

using int128 = __int128;

inline std::int64_t checked_i64(int128 v, const char *what) {
    if (v > std::numeric_limits<std::int64_t>::max() ||
        v < std::numeric_limits<std::int64_t>::min())
        throw std::overflow_error(std::string("integer overflow in ") + what);
    return static_cast<std::int64_t>(v);
}

/// num/den rounded to the nearest integer, ties to even. Requires den > 0,
/// num >= 0 (all fee products are non-negative).
inline std::int64_t div_round_half_even(int128 num, int128 den) {
    int128 q = num / den;
    int128 r = num % den;
    int128 twice = 2 * r;
    if (twice > den || (twice == den && (q & 1) != 0))
        ++q;
    return checked_i64(q, "div_round_half_even");
}

inline std::int64_t div_floor(int128 num, int128 den) {
    int128 q = num / den;
    if (num % den != 0 && ((num < 0) != (den < 0)))
        --q;
    return checked_i64(q, "div_floor");
}

inline std::int64_t div_ceil(int128 num, int128 den) {
    int128 q = num / den;
    if (num % den != 0 && ((num < 0) == (den < 0)))
        ++q;
    return checked_i64(q, "div_ceil");
}

} // namespace detail

/// A fee rate in basis points, kept as an exact rational num/den so that
/// file-supplied rates like "5/2" bps price identically everywhere.
struct Bps {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Bps() = default;
    Bps(std::int64_t n) : num(n), den(1) { // NOLINT: implicit by design
        if (n < 0)
            throw std::domain_error("negative fee rate");
    }
    Bps(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (d <= 0)
            throw std::domain_error("fee rate denominator must be positive");
        if (n < 0)
            throw std::domain_error("negative fee rate");
        normalize();
    }

    void normalize() {
        if (num == 0) {
            den = 1;
            return;
        }
        std::int64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
    }

    bool is_zero() const { return num == 0; }

    /// Exact value comparison via cross multiplication.
    friend bool operator==(const Bps &a, const Bps &b) {
        return detail::int128(a.num) * b.den == detail::int128(b.num) * a.den;
    }
    friend bool operator!=(const Bps &a, const Bps &b) { return !(a == b); }
    friend bool operator<(const Bps &a, const Bps &b) {
        return detail::int128(a.num) * b.den < detail::int128(b.num) * a.den;
    }
    friend bool operator<=(const Bps &a, const Bps &b) { return !(b < a); }
    friend bool operator>(const Bps &a, const Bps &b) { return b < a; }
    friend bool operator>=(const Bps &a, const Bps &b) { return !(a < b); }

    friend Bps operator+(const Bps &a, const Bps &b) {
        std::int64_t g = std::gcd(a.den, b.den);
        std::int64_t dl = a.den / g;
        std::int64_t num = detail::checked_i64(
            detail::int128(a.num) * (b.den / g) + detail::int128(b.num) * dl,
            "Bps addition");
        std::int64_t den = detail::checked_i64(detail::int128(dl) * b.den, "Bps addition");
        return Bps(num, den);
    }

    /// a - b; requires a >= b (rates never go negative)
    friend Bps operator-(const Bps &a, const Bps &b) {
        std::int64_t g = std::gcd(a.den, b.den);
        std::int64_t dl = a.den / g;
        std::int64_t num = detail::checked_i64(
            detail::int128(a.num) * (b.den / g) - detail::int128(b.num) * dl,
            "Bps subtraction");
        std::int64_t den = detail::checked_i64(detail::int128(dl) * b.den, "Bps subtraction");
        return Bps(num, den);
    }

    std::string to_string() const {
        std::ostringstream os;
        os << num;
        if (den != 1)
            os << '/' << den;
        return os.str();
    }

    /// Parses "9" or "9/2".
    static Bps parse(const std::string &text) {
        auto slash = text.find('/');
        try {
            if (slash == std::string::npos)
                return Bps(std::stoll(text));
            return Bps(std::stoll(text.substr(0, slash)),
                       std::stoll(text.substr(slash + 1)));
        } catch (const std::logic_error &) {
            throw std::invalid_argument("malformed bps rate: '" + text + "'");
        }
    }
};

inline Bps min(const Bps &a, const Bps &b) { return b < a ? b : a; }
inline Bps max(const Bps &a, const Bps &b) { return a < b ? b : a; }

/// rate (bps) applied to an amount, rounded half-to-even to whole minor units.
inline Money bps_cost(const Bps &rate, Money amount) {
    if (amount < 0)
        throw std::domain_error("bps_cost on negative amount");
    return detail::div_round_half_even(detail::int128(rate.num) * amount,
                                       detail::int128(rate.den) * 10000);
}

/// floor(rate * amount / 10000); used by admissible lower bounds.
inline Money bps_cost_floor(const Bps &rate, Money amount) {
    return detail::div_floor(detail::int128(rate.num) * amount,
                             detail::int128(rate.den) * 10000);
}

/// True iff rate * amount / 10000 is an exact integer.
inline bool bps_exact(const Bps &rate, Money amount) {
    return (detail::int128(rate.num) * amount) % (detail::int128(rate.den) * 10000) == 0;
}

inline std::ostream &operator<<(std::ostream &os, const Bps &b) {
    return os << b.to_string();
}

/// Formats minor units as a decimal with two fractional digits ("17.60").
inline std::string format_money(Money m) {
    std::ostringstream os;
    if (m < 0) {
        os << '-';
        m = -m;
    }
    os << m / 100 << '.' << (m % 100 < 10 ? "0" : "") << m % 100;
    return os.str();
}

} // namespace rebal
