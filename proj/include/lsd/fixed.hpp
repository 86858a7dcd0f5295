// 18-decimal fixed-point amount type (wei-like) backed by a 128-bit integer.
#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace lsd {

// A signed quantity with exactly 18 fractional decimal digits, stored as a
// count of 1e-18 units. Multiplication and division run through 256-bit
// intermediates and truncate toward zero, mirroring on-chain token math.
// Range: roughly +/- 1.7e20 whole units; pool and schedule inputs are
// validated well inside that.
class Fixed {
public:
    using Raw = __int128;

    static constexpr int kDecimals = 18;

    constexpr Fixed() = default;

    static constexpr Fixed from_raw(Raw raw) {
        Fixed f;
        f.raw_ = raw;
        return f;
    }

    static constexpr Fixed from_int(std::int64_t whole) {
        return from_raw(static_cast<Raw>(whole) * kScale);
    }

    static constexpr Fixed zero() { return Fixed{}; }
    static constexpr Fixed one() { return from_raw(kScale); }
    static constexpr Fixed smallest() { return from_raw(1); }

    // Parses a plain decimal string: optional sign, digits, optional '.' and
    // up to 18 fractional digits. No exponents, no grouping. Throws
    // ValidationError on malformed or out-of-range input.
    static Fixed parse(std::string_view text);

    // Nearest value on a 1e-12 grid; for test fixtures and synthetic data
    // only, core paths stay in exact decimal.
    static Fixed from_double_approx(double v);

    constexpr Raw raw() const { return raw_; }
    double to_double() const;

    // Canonical decimal rendering: no trailing fractional zeros, no exponent.
    // parse(str()) round-trips bit-exactly.
    std::string str() const;

    constexpr bool is_zero() const { return raw_ == 0; }
    constexpr bool is_negative() const { return raw_ < 0; }
    constexpr bool is_positive() const { return raw_ > 0; }

    Fixed operator+(Fixed rhs) const;
    Fixed operator-(Fixed rhs) const;
    Fixed operator-() const;
    Fixed& operator+=(Fixed rhs) { return *this = *this + rhs; }
    Fixed& operator-=(Fixed rhs) { return *this = *this - rhs; }

    // (a * b) / 1e18, truncated toward zero.
    Fixed operator*(Fixed rhs) const;
    // (a * 1e18) / b, truncated toward zero. Throws on division by zero.
    Fixed operator/(Fixed rhs) const;

    constexpr auto operator<=>(const Fixed& rhs) const = default;

    Fixed abs() const { return raw_ < 0 ? -*this : *this; }

private:
    static constexpr Raw kScale = static_cast<Raw>(1000000000000000000LL);

    Raw raw_ = 0;
};

// (a * b) / c with a single truncation, exact 256-bit intermediate.
Fixed mul_div(Fixed a, Fixed b, Fixed c);

// base^n by repeated multiplication (n is small in all call sites).
Fixed pow_int(Fixed base, unsigned n);

Fixed min(Fixed a, Fixed b);
Fixed max(Fixed a, Fixed b);

std::ostream& operator<<(std::ostream& os, Fixed v);

} // namespace lsd
