#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgroups {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Eager versions of the boost free functions; expression templates do not mix
// well with further arithmetic at our call sites.
inline Int gcd(const Int& a, const Int& b) { return Int(boost::multiprecision::gcd(a, b)); }
inline Int lcm(const Int& a, const Int& b) { return Int(boost::multiprecision::lcm(a, b)); }
inline Int abs_int(const Int& a) { return Int(boost::multiprecision::abs(a)); }
inline Int powm(const Int& base, const Int& exp, const Int& mod) {
    return Int(boost::multiprecision::powm(base, exp, mod));
}
inline Int isqrt(const Int& n) { return Int(boost::multiprecision::sqrt(n)); }

/// A bounded search ran out of budget. Never a silent fallback.
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file. Carries a 1-based line number when known.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, long line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

inline Int mod_floor(const Int& a, const Int& m) {
    Int r = a % m;
    if (r < 0) r += m;
    return r;
}

/// Inverse of a modulo m (gcd(a,m)=1), via extended Euclid.
inline Int mod_inverse(const Int& a, const Int& m) {
    Int r0 = mod_floor(a, m), r1 = m;
    Int s0 = 1, s1 = 0;
    while (r1 != 0) {
        Int qt = r0 / r1;
        Int r2 = r0 - qt * r1;
        r0 = r1;
        r1 = r2;
        Int s2 = s0 - qt * s1;
        s0 = s1;
        s1 = s2;
    }
    if (r0 != 1) throw std::invalid_argument("mod_inverse: arguments not coprime");
    return mod_floor(s0, m);
}

/// FNV-1a 64-bit, used for whole-file checksums in the text cache formats.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace qgroups
