#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace atex {

using OrderId = std::uint64_t;
using Price = std::int64_t;   // integer ticks, tick size 1
using Volume = std::int64_t;  // shares
using TimestampMs = std::int64_t;

enum class Side { Buy, Sell };

inline Side contra(Side s) { return s == Side::Buy ? Side::Sell : Side::Buy; }

inline const char* to_string(Side s) { return s == Side::Buy ? "Buy" : "Sell"; }

enum class EventKind { New, Trade, Cancelled };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::New: return "New";
        case EventKind::Trade: return "Trade";
        default: return "Cancelled";
    }
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed frame, CSV row or config entry. Carries the offending field/line.
struct ParseError : Error {
    using Error::Error;
};

/// Feed and mirror out of sync; the session cannot continue.
struct DesyncError : Error {
    using Error::Error;
};

/// Exact ratio of two 64-bit integers. Mid and micro prices are carried this
/// way internally and only rounded when serialized (4 decimals).
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw Error("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    static Rational from_int(std::int64_t v) { return Rational(v, 1); }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }

    /// Fixed 4-decimal representation, round-half-away-from-zero.
    std::string to_fixed4() const;
};

std::string format_fixed(double v, int decimals);

}  // namespace atex
