#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mcdbf {

/// Exact rational used for utilizations and interval-length bounds.
using Rational = boost::multiprecision::cpp_rational;

/// Parses "0.95", "3", "-2.5" or "29/30" into an exact rational.
inline Rational parse_rational(std::string_view text)
{
    auto fail = [&] { throw std::invalid_argument("not a rational number: '" + std::string(text) + "'"); };
    if (text.empty())
        fail();

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(text.substr(0, slash));
        Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0)
            fail();
        return num / den;
    }

    bool negative = false;
    std::size_t pos = 0;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        pos = 1;
    }
    boost::multiprecision::cpp_int num = 0;
    boost::multiprecision::cpp_int den = 1;
    bool seen_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c == '.' && !seen_point) {
            seen_point = true;
        } else if (c >= '0' && c <= '9') {
            num = num * 10 + (c - '0');
            if (seen_point)
                den *= 10;
            seen_digit = true;
        } else {
            fail();
        }
    }
    if (!seen_digit)
        fail();
    Rational r(num, den);
    return negative ? Rational(-r) : r;
}

/// "29/30", or "3" for integers.
inline std::string to_string(const Rational& r)
{
    return r.str();
}

inline double to_double(const Rational& r)
{
    return r.convert_to<double>();
}

/// Smallest integer >= r.
inline std::int64_t ceil_to_int(const Rational& r)
{
    using boost::multiprecision::cpp_int;
    cpp_int num = boost::multiprecision::numerator(r);
    cpp_int den = boost::multiprecision::denominator(r);
    cpp_int q = num / den;  // truncates toward zero
    if (num % den != 0 && num > 0)
        q += 1;
    return q.convert_to<std::int64_t>();
}

/// Largest integer <= r.
inline std::int64_t floor_to_int(const Rational& r)
{
    return -ceil_to_int(-r);
}

}  // namespace mcdbf
