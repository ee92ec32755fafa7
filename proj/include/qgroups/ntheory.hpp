#pragma once

#include "qgroups/numeric.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

namespace qgroups::ntheory {

// ---------------------------------------------------------------------------
// Primality.
//
// Deterministic for everything this project constructs: trial division for
// small inputs, then Miller-Rabin with the fixed witness set
// {2,...,37}, which is exact for n < 3.317e24 (in particular for all n < 2^64).
// Beyond that window a strong Lucas test (Selfridge parameters) is added, so
// acceptance is the fixed-base BPSW combination, still fully reproducible.
// ---------------------------------------------------------------------------

inline const std::vector<std::uint32_t>& small_primes_1e4() {
    static const std::vector<std::uint32_t> table = [] {
        std::vector<std::uint32_t> out;
        std::vector<bool> comp(10000, false);
        for (std::uint32_t p = 2; p < 10000; ++p) {
            if (comp[p]) continue;
            out.push_back(p);
            for (std::uint32_t m = p * p; m < 10000; m += p) comp[m] = true;
        }
        return out;
    }();
    return table;
}

namespace detail {

inline bool miller_rabin_witness(const Int& n, const Int& d, unsigned s, const Int& a) {
    Int x = powm(a % n, d, n);
    if (x == 1 || x == n - 1) return false;
    for (unsigned r = 1; r < s; ++r) {
        x = (x * x) % n;
        if (x == n - 1) return false;
    }
    return true;  // composite witness
}

inline int jacobi_symbol(Int a, Int n) {
    // n odd positive
    a = mod_floor(a, n);
    int result = 1;
    while (a != 0) {
        while (a % 2 == 0) {
            a /= 2;
            Int nm8 = n % 8;
            if (nm8 == 3 || nm8 == 5) result = -result;
        }
        std::swap(a, n);
        if (a % 4 == 3 && n % 4 == 3) result = -result;
        a %= n;
    }
    return n == 1 ? result : 0;
}

inline bool is_perfect_square(const Int& n) {
    if (n < 0) return false;
    Int r = isqrt(n);
    return r * r == n || (r + 1) * (r + 1) == n;
}

// Strong Lucas probable prime test with Selfridge's parameter choice.
inline bool strong_lucas_prp(const Int& n) {
    if (is_perfect_square(n)) return false;
    Int d = 5;
    int sign = 1;
    while (true) {
        int j = jacobi_symbol(sign > 0 ? d : -d, n);
        if (j == 0) return false;  // shares a factor with n
        if (j == -1) break;
        d += 2;
        sign = -sign;
    }
    Int D = sign > 0 ? d : -d;
    Int Q = (Int(1) - D) / 4;

    Int k = n + 1;
    unsigned s = 0;
    while (k % 2 == 0) {
        k /= 2;
        ++s;
    }

    // Compute U_k, V_k by binary ladder (P = 1).
    Int U = 1, V = 1, Qk = mod_floor(Q, n);
    std::vector<int> bits;
    for (Int t = k; t > 1; t /= 2) bits.push_back(static_cast<int>(t % 2));
    std::reverse(bits.begin(), bits.end());
    Int inv2 = mod_inverse(2, n);
    for (int bit : bits) {
        // double: U_{2m} = U V, V_{2m} = V^2 - 2 Q^m
        Int U2 = mod_floor(U * V, n);
        Int V2 = mod_floor(V * V - 2 * Qk, n);
        Qk = mod_floor(Qk * Qk, n);
        U = U2;
        V = V2;
        if (bit) {
            // advance: U_{m+1} = (U + V)/2, V_{m+1} = (D U + V)/2
            Int Un = mod_floor((U + V) * inv2, n);
            Int Vn = mod_floor((mod_floor(D, n) * U + V) * inv2, n);
            Qk = mod_floor(Qk * mod_floor(Q, n), n);
            U = Un;
            V = Vn;
        }
    }
    if (U == 0 || V == 0) return true;
    for (unsigned r = 1; r < s; ++r) {
        V = mod_floor(V * V - 2 * Qk, n);
        if (V == 0) return true;
        Qk = mod_floor(Qk * Qk, n);
    }
    return false;
}

}  // namespace detail

inline bool is_prime(const Int& n) {
    if (n < 2) return false;
    for (std::uint32_t p : small_primes_1e4()) {
        Int P = p;
        if (P * P > n) return true;
        if (n % P == 0) return n == P;
    }
    Int d = n - 1;
    unsigned s = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++s;
    }
    static const int witnesses[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (int a : witnesses)
        if (detail::miller_rabin_witness(n, d, s, Int(a))) return false;
    // Exact below 3.317e24; add the Lucas stage above it.
    static const Int mr_exact_bound("3317044064679887385961981");
    if (n >= mr_exact_bound && !detail::strong_lucas_prp(n)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Quadratic residues.
// ---------------------------------------------------------------------------

/// Euler criterion: a^((q-1)/2) mod q. Requires q an odd prime, gcd(a,q)=1.
inline bool is_quadratic_residue(const Int& a, const Int& q) {
    if (q == 2 || q % 2 == 0) throw std::invalid_argument("is_quadratic_residue: q must be odd");
    if (!is_prime(q)) throw std::invalid_argument("is_quadratic_residue: q must be prime");
    if (mod_floor(a, q) == 0) throw std::invalid_argument("is_quadratic_residue: a divisible by q");
    return powm(mod_floor(a, q), (q - 1) / 2, q) == 1;
}

/// True iff the pair (p,q) satisfies quadratic reciprocity as stated:
/// equal residue statuses when either is 1 mod 4, opposite when both are 3 mod 4.
/// Exposed as a diagnostic cross-check of the Euler criterion.
inline bool reciprocity_check(const Int& p, const Int& q) {
    if (p == q) throw std::invalid_argument("reciprocity_check: inputs must be distinct");
    if (p % 2 == 0 || q % 2 == 0) throw std::invalid_argument("reciprocity_check: inputs must be odd");
    if (!is_prime(p) || !is_prime(q)) throw std::invalid_argument("reciprocity_check: inputs must be prime");
    bool pq = is_quadratic_residue(p, q);
    bool qp = is_quadratic_residue(q, p);
    if (p % 4 == 1 || q % 4 == 1) return pq == qp;
    return pq != qp;
}

// ---------------------------------------------------------------------------
// Primes in arithmetic progressions.
// ---------------------------------------------------------------------------

struct SearchLimits {
    long long max_candidates = 10'000'000;  // per Dirichlet scan
};

struct DirichletResult {
    Int prime;
    long long candidates_scanned;  // congruence-class members examined, found one included
};

/// Smallest prime p > lower_bound with p = a (mod d). Deterministic ascending
/// scan over the congruence class; aborts with resource_error at the ceiling.
inline DirichletResult dirichlet_search_traced(const Int& a, const Int& d, const Int& lower_bound,
                                               const SearchLimits& limits = {}) {
    if (d <= 0) throw std::invalid_argument("dirichlet_search: modulus must be positive");
    if (gcd(mod_floor(a, d), d) != 1)
        throw std::invalid_argument("dirichlet_search: gcd(a, d) != 1");
    Int r = mod_floor(a, d);
    Int c = r == 0 ? d : r;
    if (c <= lower_bound) c += ((lower_bound - c) / d + 1) * d;
    long long scanned = 0;
    for (; scanned < limits.max_candidates; c += d) {
        ++scanned;
        if (is_prime(c)) return {c, scanned};
    }
    throw resource_error("dirichlet_search: no prime = " + a.str() + " (mod " + d.str() +
                         ") above " + lower_bound.str() + " within " +
                         std::to_string(limits.max_candidates) + " candidates");
}

inline Int dirichlet_search(const Int& a, const Int& d, const Int& lower_bound,
                            const SearchLimits& limits = {}) {
    return dirichlet_search_traced(a, d, lower_bound, limits).prime;
}

// ---------------------------------------------------------------------------
// Chinese remainder theorem.
// ---------------------------------------------------------------------------

struct Congruence {
    Int residue;
    Int modulus;

    Congruence() : residue(0), modulus(1) {}
    Congruence(Int r, Int m) : residue(std::move(r)), modulus(std::move(m)) {
        if (modulus <= 0) throw std::invalid_argument("Congruence: modulus must be positive");
        residue = mod_floor(residue, modulus);
    }
    bool operator==(const Congruence&) const = default;
};

/// Combine pairwise-coprime congruences into one modulo the product.
inline Congruence crt_combine(const std::vector<Congruence>& cs) {
    if (cs.empty()) throw std::invalid_argument("crt_combine: empty congruence list");
    Congruence acc = cs.front();
    for (std::size_t k = 1; k < cs.size(); ++k) {
        const Congruence& c = cs[k];
        Int g = gcd(acc.modulus, c.modulus);
        if (g != 1)
            throw std::invalid_argument("crt_combine: moduli " + acc.modulus.str() + " and " +
                                        c.modulus.str() + " share factor " + g.str());
        // x = acc.residue + acc.modulus * t with t chosen mod c.modulus
        Int t = mod_floor((c.residue - acc.residue) * mod_inverse(acc.modulus, c.modulus),
                          c.modulus);
        acc = Congruence(acc.residue + acc.modulus * t, acc.modulus * c.modulus);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Multiplicative groups mod n, enumerable sizes.
//
// subgroup_generated is a plain closure enumeration; unit_group_generators is
// the smallest-first greedy policy on top of it. Both guard against
// non-enumerable group sizes; the factored machinery in unitgroup.hpp covers
// the large moduli of the prime-sequence construction.
// ---------------------------------------------------------------------------

inline constexpr long long kClosureLimit = 4'000'000;

/// Closure of gens under multiplication mod n (gens must be units).
inline std::set<Int> subgroup_generated(const Int& n, const std::vector<Int>& gens) {
    if (n < 2) throw std::invalid_argument("subgroup_generated: modulus must be >= 2");
    for (const Int& g : gens)
        if (gcd(mod_floor(g, n), n) != 1)
            throw std::invalid_argument("subgroup_generated: " + g.str() + " is not a unit mod " +
                                        n.str());
    std::set<Int> closure{Int(1)};
    std::vector<Int> frontier{Int(1)};
    while (!frontier.empty()) {
        std::vector<Int> next;
        for (const Int& x : frontier) {
            for (const Int& g : gens) {
                Int y = mod_floor(x * g, n);
                if (closure.insert(y).second) {
                    next.push_back(y);
                    if (static_cast<long long>(closure.size()) > kClosureLimit)
                        throw resource_error("subgroup_generated: closure exceeds " +
                                             std::to_string(kClosureLimit) + " elements");
                }
            }
        }
        frontier = std::move(next);
    }
    return closure;
}

inline Int euler_phi_enumerated(const Int& n) {
    Int count = 0;
    for (Int u = 1; u < n; ++u)
        if (gcd(u, n) == 1) ++count;
    return count;
}

/// Greedy generating set of (Z/nZ)^x: repeatedly adjoin the smallest unit not
/// yet generated. Enumeration-based; requires phi(n) within the closure limit.
inline std::vector<Int> unit_group_generators(const Int& n) {
    if (n < 2) throw std::invalid_argument("unit_group_generators: modulus must be >= 2");
    if (n > kClosureLimit)
        throw resource_error("unit_group_generators: modulus too large to enumerate; use the "
                             "factored unit-group interface");
    std::vector<Int> gens;
    std::set<Int> have{Int(1)};
    Int phi = euler_phi_enumerated(n);
    Int u = 2;
    while (static_cast<Int>(have.size()) < phi) {
        for (; u < n; ++u) {
            if (gcd(u, n) != 1) continue;
            if (!have.count(u)) break;
        }
        gens.push_back(u);
        have = subgroup_generated(n, gens);
    }
    return gens;
}

}  // namespace qgroups::ntheory
