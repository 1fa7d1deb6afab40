#pragma once

// Small exact rationals on int64, for the hot paths (discriminant-form
// values, coset norms).  Everything that can grow beyond 64 bits goes
// through GMP instead (intmat.hpp).

#include <cassert>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>

namespace ssk3 {

struct Rat {
    std::int64_t num = 0;
    std::int64_t den = 1;  // > 0, gcd(num,den) == 1

    Rat() = default;
    Rat(std::int64_t n) : num(n), den(1) {}
    Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        assert(den != 0);
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    friend Rat operator+(const Rat& a, const Rat& b) {
        __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make128(n, d);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        __int128 n = (__int128)a.num * b.den - (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make128(n, d);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return make128((__int128)a.num * b.num, (__int128)a.den * b.den);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        assert(b.num != 0);
        return make128((__int128)a.num * b.den, (__int128)a.den * b.num);
    }
    Rat operator-() const { Rat r; r.num = -num; r.den = den; return r; }
    Rat& operator+=(const Rat& b) { return *this = *this + b; }
    Rat& operator-=(const Rat& b) { return *this = *this - b; }
    Rat& operator*=(const Rat& b) { return *this = *this * b; }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend std::strong_ordering operator<=>(const Rat& a, const Rat& b) {
        __int128 l = (__int128)a.num * b.den, r = (__int128)b.num * a.den;
        return l < r ? std::strong_ordering::less
             : l > r ? std::strong_ordering::greater
                     : std::strong_ordering::equal;
    }

    bool is_integer() const { return den == 1; }

    // canonical representative in [0, m)
    Rat mod(std::int64_t m) const {
        __int128 md = (__int128)m * den;
        __int128 n = (__int128)num % md;
        if (n < 0) n += md;
        return make128(n, den);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rat& r) {
        os << r.num;
        if (r.den != 1) os << '/' << r.den;
        return os;
    }

private:
    static Rat make128(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        Rat r;
        assert(n >= INT64_MIN && n <= INT64_MAX && d <= INT64_MAX);
        r.num = (std::int64_t)n;
        r.den = n == 0 ? 1 : (std::int64_t)d;
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }
};

// value of q in Q/2Z, canonically in [0,2)
inline Rat qmod2(const Rat& r) { return r.mod(2); }
// value of b in Q/Z, canonically in [0,1)
inline Rat bmod1(const Rat& r) { return r.mod(1); }

}  // namespace ssk3
