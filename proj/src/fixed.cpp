#include "lsd/fixed.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>

#include "lsd/errors.hpp"

namespace lsd {
namespace {

using boost::multiprecision::cpp_int;

constexpr __int128 kScaleRaw = static_cast<__int128>(1000000000000000000LL);

cpp_int to_cpp(__int128 v) {
    const bool neg = v < 0;
    unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                                : static_cast<unsigned __int128>(v);
    cpp_int out = static_cast<std::uint64_t>(mag >> 64);
    out <<= 64;
    out += static_cast<std::uint64_t>(mag);
    return neg ? -out : out;
}

__int128 from_cpp_checked(const cpp_int& v) {
    static const cpp_int kMax = (cpp_int(1) << 127) - 1;
    static const cpp_int kMin = -(cpp_int(1) << 127);
    if (v > kMax || v < kMin) {
        throw NumericError("fixed-point overflow");
    }
    const bool neg = v < 0;
    cpp_int mag = neg ? -v : v;
    unsigned __int128 out = static_cast<std::uint64_t>(mag >> 64);
    out <<= 64;
    out |= static_cast<std::uint64_t>(mag & 0xFFFFFFFFFFFFFFFFULL);
    if (neg) {
        return -static_cast<__int128>(out);
    }
    return static_cast<__int128>(out);
}

std::string raw_to_string(__int128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                                : static_cast<unsigned __int128>(v);
    std::string digits;
    while (mag > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
        mag /= 10;
    }
    if (neg) digits.push_back('-');
    return {digits.rbegin(), digits.rend()};
}

} // namespace

Fixed Fixed::parse(std::string_view text) {
    const std::string_view original = text;
    auto fail = [&]() -> Fixed {
        throw ValidationError("not a decimal amount: '" + std::string(original) + "'");
    };

    bool neg = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        neg = text.front() == '-';
        text.remove_prefix(1);
    }
    if (text.empty()) return fail();

    std::string_view whole = text;
    std::string_view frac;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        whole = text.substr(0, dot);
        frac = text.substr(dot + 1);
        if (frac.empty() || frac.find('.') != std::string_view::npos) return fail();
    }
    if (whole.empty() && frac.empty()) return fail();
    if (frac.size() > static_cast<std::size_t>(kDecimals)) {
        throw ValidationError("more than 18 fractional digits: '" + std::string(original) + "'");
    }

    cpp_int value = 0;
    for (char c : whole) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return fail();
        value = value * 10 + (c - '0');
    }
    for (char c : frac) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return fail();
        value = value * 10 + (c - '0');
    }
    for (std::size_t i = frac.size(); i < static_cast<std::size_t>(kDecimals); ++i) {
        value *= 10;
    }
    if (neg) value = -value;
    return from_raw(from_cpp_checked(value));
}

Fixed Fixed::from_double_approx(double v) {
    if (!std::isfinite(v)) {
        throw ValidationError("non-finite value");
    }
    const double scaled = v * 1e18;
    if (scaled >= 1.7e38 || scaled <= -1.7e38) {
        throw NumericError("fixed-point overflow");
    }
    return from_raw(static_cast<Raw>(std::llround(scaled / 1e6)) * static_cast<Raw>(1000000));
}

double Fixed::to_double() const {
    return static_cast<double>(raw_) / 1e18;
}

std::string Fixed::str() const {
    const bool neg = raw_ < 0;
    unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(raw_ + 1)) + 1
                                : static_cast<unsigned __int128>(raw_);
    const unsigned __int128 scale = static_cast<unsigned __int128>(kScale);
    unsigned __int128 whole = mag / scale;
    unsigned __int128 frac = mag % scale;

    std::string out;
    if (neg) out.push_back('-');
    out += raw_to_string(static_cast<__int128>(whole));
    if (frac != 0) {
        std::string digits(static_cast<std::size_t>(kDecimals), '0');
        for (int i = kDecimals - 1; i >= 0; --i) {
            digits[static_cast<std::size_t>(i)] =
                static_cast<char>('0' + static_cast<int>(frac % 10));
            frac /= 10;
        }
        while (!digits.empty() && digits.back() == '0') digits.pop_back();
        out.push_back('.');
        out += digits;
    }
    return out;
}

Fixed Fixed::operator+(Fixed rhs) const {
    Raw out;
    if (__builtin_add_overflow(raw_, rhs.raw_, &out)) {
        throw NumericError("fixed-point overflow in addition");
    }
    return from_raw(out);
}

Fixed Fixed::operator-(Fixed rhs) const {
    Raw out;
    if (__builtin_sub_overflow(raw_, rhs.raw_, &out)) {
        throw NumericError("fixed-point overflow in subtraction");
    }
    return from_raw(out);
}

Fixed Fixed::operator-() const {
    return from_raw(-raw_);
}

Fixed Fixed::operator*(Fixed rhs) const {
    const cpp_int product = to_cpp(raw_) * to_cpp(rhs.raw_) / to_cpp(kScaleRaw);
    return from_raw(from_cpp_checked(product));
}

Fixed Fixed::operator/(Fixed rhs) const {
    if (rhs.raw_ == 0) {
        throw NumericError("fixed-point division by zero");
    }
    const cpp_int quotient = to_cpp(raw_) * to_cpp(kScaleRaw) / to_cpp(rhs.raw_);
    return from_raw(from_cpp_checked(quotient));
}

Fixed mul_div(Fixed a, Fixed b, Fixed c) {
    if (c.raw() == 0) {
        throw NumericError("fixed-point division by zero");
    }
    const cpp_int out = to_cpp(a.raw()) * to_cpp(b.raw()) / to_cpp(c.raw());
    return Fixed::from_raw(from_cpp_checked(out));
}

Fixed pow_int(Fixed base, unsigned n) {
    Fixed acc = Fixed::one();
    for (unsigned i = 0; i < n; ++i) {
        acc = acc * base;
    }
    return acc;
}

Fixed min(Fixed a, Fixed b) { return a < b ? a : b; }
Fixed max(Fixed a, Fixed b) { return a < b ? b : a; }

std::ostream& operator<<(std::ostream& os, Fixed v) {
    return os << v.str();
}

} // namespace lsd
