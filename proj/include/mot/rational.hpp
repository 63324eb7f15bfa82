#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mot {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline BigInt pow2(int e) {
    if (e < 0) throw std::invalid_argument("pow2: negative exponent");
    BigInt r = 1;
    r <<= e;
    return r;
}

// Exact conversion: every finite double is a binary rational.
inline BigRational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rational_from_double: non-finite");
    if (x == 0.0) return BigRational(0);
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
    auto mi = static_cast<std::int64_t>(std::ldexp(m, 53));
    e -= 53;
    BigInt num = mi;
    if (e >= 0) return BigRational(num << e, 1);
    return BigRational(num, pow2(-e));
}

inline double to_double(const BigRational& r) { return r.convert_to<double>(); }

inline std::string to_string(const BigRational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

inline BigRational rational_from_string(const std::string& s) {
    auto pos = s.find('/');
    if (pos == std::string::npos) return BigRational(BigInt(s), 1);
    BigInt num(s.substr(0, pos)), den(s.substr(pos + 1));
    if (den <= 0) throw std::invalid_argument("rational_from_string: non-positive denominator");
    return BigRational(num, den);
}

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q = a / b, r = a % b;
    if (r != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

inline BigInt floor_rational(const BigRational& r) {
    return floor_div(numerator(r), denominator(r));
}

// Value num / 2^exp with exp >= 0. Exact dyadic arithmetic for the staged
// grid projections, where exponents grow past double precision.
struct Dyadic {
    BigInt num;
    int exp = 0;

    Dyadic() : num(0) {}
    Dyadic(BigInt n, int e) : num(std::move(n)), exp(e) {
        if (e < 0) throw std::invalid_argument("Dyadic: negative exponent");
    }
    static Dyadic from_int(long v) { return Dyadic(BigInt(v), 0); }

    Dyadic rescaled(int e) const {
        if (e < exp) throw std::invalid_argument("Dyadic::rescaled: coarser grid");
        return Dyadic(num << (e - exp), e);
    }
    void normalize() {
        if (num == 0) { exp = 0; return; }
        while (exp > 0 && (num & 1) == 0) { num >>= 1; --exp; }
    }
    double to_double() const { return BigRational(num, pow2(exp)).convert_to<double>(); }
    BigRational to_rational() const { return BigRational(num, pow2(exp)); }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        int e = std::max(a.exp, b.exp);
        return Dyadic(a.rescaled(e).num + b.rescaled(e).num, e);
    }
    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) {
        int e = std::max(a.exp, b.exp);
        return Dyadic(a.rescaled(e).num - b.rescaled(e).num, e);
    }
    friend bool operator==(const Dyadic& a, const Dyadic& b) {
        int e = std::max(a.exp, b.exp);
        return a.rescaled(e).num == b.rescaled(e).num;
    }
    friend bool operator<(const Dyadic& a, const Dyadic& b) {
        int e = std::max(a.exp, b.exp);
        return a.rescaled(e).num < b.rescaled(e).num;
    }
    friend bool operator<=(const Dyadic& a, const Dyadic& b) { return a < b || a == b; }
    friend bool operator>=(const Dyadic& a, const Dyadic& b) { return b <= a; }
    friend bool operator>(const Dyadic& a, const Dyadic& b) { return b < a; }
};

// Ceiling projection onto the 2^-level grid, exact for double input.
inline Dyadic dyadic_ceil(double x, int level) {
    BigRational r = rational_from_double(x);
    BigInt scaled_num = numerator(r) * pow2(level);
    BigInt q = floor_div(scaled_num, denominator(r));
    if (q * denominator(r) != scaled_num) ++q;  // ceil
    return Dyadic(q, level);
}

// Smallest p+q over positive integers with a < p/q <= b; ties on p+q broken
// by smallest p (the minimiser in lowest terms is in fact unique). The
// interval must contain a positive rational (b > 0, a < b). Implemented as a
// Stern-Brocot descent with bulk steps; equivalent to enumerating p+q = 2,3,...
// but O(log) in the continued-fraction length of the endpoints.
inline BigRational min_sum_rational_in(const BigRational& a, const BigRational& b) {
    if (!(a < b)) throw std::domain_error("min_sum_rational_in: empty interval");
    if (!(b > 0)) throw std::domain_error("min_sum_rational_in: no positive rational in interval");
    const BigInt na = a < 0 ? BigInt(0) : numerator(a);
    const BigInt da = a < 0 ? BigInt(1) : denominator(a);
    const BigInt nb = numerator(b), db = denominator(b);
    // Invariant: L <= a < b < R as fractions (R starts at 1/0 = +inf).
    BigInt pl = 0, ql = 1, pr = 1, qr = 0;
    for (int guard = 0; guard < 1 << 20; ++guard) {
        BigInt pm = pl + pr, qm = ql + qr;
        const bool above_a = pm * da > na * qm;
        const bool at_most_b = pm * db <= nb * qm;
        if (above_a && at_most_b) return BigRational(pm, qm);
        if (!above_a) {
            // Mediant <= a: take the largest k with (pl + k*pr)/(ql + k*qr) <= a.
            BigInt k = floor_div(na * ql - pl * da, pr * da - na * qr);
            if (k < 1) k = 1;
            pl += k * pr;
            ql += k * qr;
        } else {
            // Mediant > b: take the largest k with (k*pl + pr)/(k*ql + qr) > b.
            BigInt num = pr * db - nb * qr, den = nb * ql - pl * db;
            BigInt k = 1;
            if (den > 0) {
                k = floor_div(num, den);
                if (k * den == num) --k;  // strict inequality
                if (k < 1) k = 1;
            }
            pr += k * pl;
            qr += k * ql;
        }
    }
    throw std::runtime_error("min_sum_rational_in: descent did not terminate");
}

inline BigRational min_sum_rational_in(double a, double b) {
    if (!(a < b)) throw std::domain_error("min_sum_rational_in: empty interval");
    return min_sum_rational_in(rational_from_double(a), rational_from_double(b));
}

}  // namespace mot
