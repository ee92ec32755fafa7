#pragma once

#include "qgroups/ntheory.hpp"

#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace qgroups::unitgroup {

// ---------------------------------------------------------------------------
// Factorizations.
// ---------------------------------------------------------------------------

struct Factorization {
    std::map<Int, unsigned> exponents;  // prime -> multiplicity

    Int value() const {
        Int v = 1;
        for (const auto& [p, e] : exponents)
            for (unsigned k = 0; k < e; ++k) v *= p;
        return v;
    }
    void mul_prime(const Int& p, unsigned k = 1) { exponents[p] += k; }
    void mul(const Factorization& other) {
        for (const auto& [p, e] : other.exponents) exponents[p] += e;
    }
    bool operator==(const Factorization&) const = default;
};

/// Factor n by dividing out the hinted primes, then trial division, then a
/// primality check on the remainder. Refuses (resource_error) rather than
/// returning a partial answer.
inline Factorization factor_with_hints(Int n, const std::vector<Int>& hints = {},
                                       std::uint32_t trial_limit = 10000) {
    if (n <= 0) throw std::invalid_argument("factor_with_hints: n must be positive");
    Factorization f;
    for (const Int& p : hints) {
        while (n % p == 0) {
            f.mul_prime(p);
            n /= p;
        }
    }
    for (std::uint32_t p : ntheory::small_primes_1e4()) {
        if (p > trial_limit) break;
        Int P = p;
        if (P * P > n) break;
        while (n % P == 0) {
            f.mul_prime(P);
            n /= P;
        }
    }
    if (n > 1) {
        if (!ntheory::is_prime(n))
            throw resource_error("factor_with_hints: composite remainder " + n.str() +
                                 " beyond trial range");
        f.mul_prime(n);
    }
    return f;
}

/// Callback contract: given a prime p, return the factorization of p - 1.
using PrimeFactorer = std::function<Factorization(const Int&)>;

inline PrimeFactorer trial_factorer() {
    return [](const Int& p) { return factor_with_hints(p - 1); };
}

// ---------------------------------------------------------------------------
// Structure of (Z/nZ)^x as a product of explicit cyclic groups.
//
// One component per odd prime power p^e | n (cyclic of order p^(e-1)(p-1),
// generated by the smallest primitive root, lifted to p^e), plus the usual
// {-1, 5} pair for 2^e with e >= 3. Every component order carries its full
// factorization so discrete logs stay feasible.
// ---------------------------------------------------------------------------

struct CyclicComponent {
    Int modulus;     // p^e (components for 2^e share the modulus)
    Int generator;   // generates this cyclic factor
    Int order;
    Factorization order_factors;
};

struct UnitGroupStructure {
    Int n;
    Factorization n_factors;
    std::vector<CyclicComponent> components;
    Int group_order;              // phi(n)
    Factorization order_factors;  // merged over components
};

namespace detail {

inline Int smallest_primitive_root(const Int& p, const Factorization& pm1_factors) {
    Int pm1 = p - 1;
    for (Int g = 2; g < p; ++g) {
        bool ok = true;
        for (const auto& [ell, e] : pm1_factors.exponents) {
            (void)e;
            if (powm(g, pm1 / ell, p) == 1) {
                ok = false;
                break;
            }
        }
        if (ok) return g;
    }
    throw std::logic_error("smallest_primitive_root: none found (bad factorization?)");
}

}  // namespace detail

inline UnitGroupStructure unit_group_structure(const Factorization& n_factors,
                                               const PrimeFactorer& factor_p_minus_1) {
    UnitGroupStructure st;
    st.n_factors = n_factors;
    st.n = n_factors.value();
    st.group_order = 1;
    for (const auto& [p, e] : n_factors.exponents) {
        if (p == 2) {
            if (e == 1) continue;  // trivial
            Int m = Int(1) << e;
            if (e == 2) {
                st.components.push_back({m, Int(3), Int(2), [] {
                                             Factorization f;
                                             f.mul_prime(2);
                                             return f;
                                         }()});
            } else {
                Factorization f2;
                f2.mul_prime(2);
                st.components.push_back({m, m - 1, Int(2), f2});
                Factorization fq;
                fq.mul_prime(2, e - 2);
                st.components.push_back({m, Int(5), Int(1) << (e - 2), fq});
            }
            continue;
        }
        Factorization pm1 = factor_p_minus_1(p);
        if (pm1.value() != p - 1)
            throw std::invalid_argument("unit_group_structure: bad factorization of " + p.str() +
                                        " - 1");
        Int g = detail::smallest_primitive_root(p, pm1);
        Int m = p;
        Factorization ord = pm1;
        if (e > 1) {
            // g stays primitive mod p^e unless g^(p-1) = 1 (mod p^2).
            if (powm(g, p - 1, p * p) == 1) g += p;
            for (unsigned k = 1; k < e; ++k) m *= p;
            ord.mul_prime(p, e - 1);
        }
        st.components.push_back({m, g, ord.value(), ord});
    }
    for (const auto& c : st.components) {
        st.group_order *= c.order;
        st.order_factors.mul(c.order_factors);
    }
    return st;
}

// ---------------------------------------------------------------------------
// Discrete logs in a cyclic l-group component (Pohlig-Hellman + BSGS).
// Only ever used for small l; large primes take the trivial-or-full shortcut.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr long long kSmallPrimeMax = 1'000'000;

class BabyStepTable {
public:
    BabyStepTable(const Int& base, long long ell, const Int& modulus)
        : modulus_(modulus), m_(1) {
        while (m_ * m_ < ell) ++m_;
        Int x = 1;
        for (long long j = 0; j < m_; ++j) {
            table_.emplace(x.str(), j);
            x = mod_floor(x * base, modulus_);
        }
        giant_ = mod_inverse(x, modulus_);  // base^(-m)
    }

    /// dlog base the table's generator, which has prime order ell.
    long long dlog(Int y, long long ell) const {
        for (long long i = 0; i * m_ <= ell; ++i) {
            auto it = table_.find(y.str());
            if (it != table_.end()) return (i * m_ + it->second) % ell;
            y = mod_floor(y * giant_, modulus_);
        }
        throw std::logic_error("BabyStepTable::dlog: element outside the cyclic group");
    }

private:
    Int modulus_;
    long long m_;
    Int giant_;
    std::unordered_map<std::string, long long> table_;
};

// dlog of y in <gamma> where gamma has order ell^f mod `modulus`.
inline Int dlog_prime_power(const Int& y, const Int& gamma, long long ell, unsigned f,
                            const Int& modulus, const BabyStepTable& order_ell_table) {
    Int result = 0;
    Int ell_i = 1;  // ell^i
    Int gamma_inv = mod_inverse(gamma, modulus);
    Int ell_pow_f = 1;
    for (unsigned k = 0; k < f; ++k) ell_pow_f *= ell;
    for (unsigned i = 0; i < f; ++i) {
        // strip known digits, then project to the order-ell subgroup
        Int reduced = mod_floor(y * powm(gamma_inv, result, modulus), modulus);
        Int exp = ell_pow_f / ell_i / ell;
        Int proj = powm(reduced, exp, modulus);
        long long digit = order_ell_table.dlog(proj, ell);
        result += digit * ell_i;
        ell_i *= ell;
    }
    return result;
}

/// Echelon basis over Z/ell^F supporting exact membership (Howell-style:
/// annihilator multiples of inserted rows are folded back in).
class EchelonZModPrimePower {
public:
    EchelonZModPrimePower(long long ell, unsigned F, std::size_t width)
        : ell_(ell), F_(F), width_(width) {
        M_ = 1;
        for (unsigned k = 0; k < F; ++k) M_ *= ell;
    }

    void add(std::vector<Int> w) {
        normalize(w);
        insert(std::move(w), 0);
    }

    bool contains(std::vector<Int> w) const {
        normalize(w);
        for (const auto& row : rows_) {
            std::size_t c = pivot_col(row);
            if (w[c] == 0) continue;
            unsigned vw = valuation(w[c]);
            unsigned vr = valuation(row[c]);
            if (vw < vr) return false;
            reduce_against(w, row, c);
        }
        for (const Int& x : w)
            if (x != 0) return false;
        return true;
    }

private:
    void normalize(std::vector<Int>& w) const {
        for (Int& x : w) x = mod_floor(x, M_);
    }
    static std::size_t pivot_col(const std::vector<Int>& row) {
        for (std::size_t c = 0; c < row.size(); ++c)
            if (row[c] != 0) return c;
        throw std::logic_error("pivot_col: zero row");
    }
    unsigned valuation(Int x) const {
        unsigned v = 0;
        while (x % ell_ == 0 && v < F_) {
            x /= ell_;
            ++v;
        }
        return v;
    }
    void reduce_against(std::vector<Int>& w, const std::vector<Int>& row, std::size_t c) const {
        // valuation(w[c]) >= valuation(row[c]); cancel w[c] exactly
        unsigned vr = valuation(row[c]);
        Int unit_r = row[c];
        for (unsigned k = 0; k < vr; ++k) unit_r /= ell_;
        Int rest = w[c];
        for (unsigned k = 0; k < vr; ++k) rest /= ell_;
        Int mult = mod_floor(rest * mod_inverse(unit_r, M_), M_);
        for (std::size_t j = 0; j < width_; ++j) w[j] = mod_floor(w[j] - mult * row[j], M_);
    }

    void insert(std::vector<Int> w, unsigned depth) {
        if (depth > 4 * F_ + 8) throw std::logic_error("EchelonZModPrimePower: no convergence");
        std::size_t r = 0;
        while (true) {
            bool zero = true;
            for (const Int& x : w)
                if (x != 0) {
                    zero = false;
                    break;
                }
            if (zero) return;
            std::size_t c = pivot_col(w);
            while (r < rows_.size() && pivot_col(rows_[r]) < c) ++r;
            if (r == rows_.size() || pivot_col(rows_[r]) > c) {
                rows_.insert(rows_.begin() + r, w);
                fold_annihilator(w, depth);
                return;
            }
            // same pivot column: keep the smaller valuation as the basis row
            if (valuation(w[c]) < valuation(rows_[r][c])) {
                std::swap(w, rows_[r]);
                fold_annihilator(rows_[r], depth);
            }
            reduce_against(w, rows_[r], c);
        }
    }

    void fold_annihilator(const std::vector<Int>& row, unsigned depth) {
        std::size_t c = pivot_col(row);
        unsigned v = valuation(row[c]);
        if (v == 0) return;  // ell^F * row = 0 already
        Int mult = 1;
        for (unsigned k = 0; k < F_ - v; ++k) mult *= ell_;
        std::vector<Int> extra(width_);
        bool nonzero = false;
        for (std::size_t j = 0; j < width_; ++j) {
            extra[j] = mod_floor(row[j] * mult, M_);
            if (extra[j] != 0) nonzero = true;
        }
        if (nonzero) insert(std::move(extra), depth + 1);
    }

    long long ell_;
    unsigned F_;
    std::size_t width_;
    Int M_;
    std::vector<std::vector<Int>> rows_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Incremental subgroup span with membership queries.
//
// Per prime l dividing phi(n):
//   - small l: discrete-log vectors over Z/l^F, echelon membership;
//   - large l appearing once in a single component: the l-part of any element
//     is trivial or generates all of C_l, so powmod tests suffice.
// ---------------------------------------------------------------------------

class SubgroupSpan {
public:
    explicit SubgroupSpan(const UnitGroupStructure& st) : st_(&st) {
        for (const auto& [ell, e] : st.order_factors.exponents) {
            SylowBlock b;
            b.ell = ell;
            for (std::size_t t = 0; t < st.components.size(); ++t) {
                unsigned f = 0;
                Int o = st.components[t].order;
                while (o % ell == 0) {
                    o /= ell;
                    ++f;
                }
                if (f > 0) {
                    b.component_index.push_back(t);
                    b.f.push_back(f);
                    b.F = std::max(b.F, f);
                }
            }
            if (ell <= detail::kSmallPrimeMax) {
                b.small = true;
                long long l = static_cast<long long>(ell);
                b.echelon.emplace(l, b.F, b.component_index.size());
                for (std::size_t k = 0; k < b.component_index.size(); ++k) {
                    const auto& comp = st.components[b.component_index[k]];
                    Int sub_order = 1;
                    for (unsigned i = 0; i < b.f[k]; ++i) sub_order *= ell;
                    Int gamma = powm(comp.generator, comp.order / sub_order, comp.modulus);
                    Int gamma0 = powm(gamma, sub_order / ell, comp.modulus);
                    b.gamma.push_back(gamma);
                    b.tables.emplace_back(gamma0, l, comp.modulus);
                }
            } else {
                if (b.component_index.size() != 1 || b.f[0] != 1 || e != 1)
                    throw resource_error(
                        "SubgroupSpan: large prime " + ell.str() +
                        " appears in the unit group with multiplicity; membership infeasible");
                b.small = false;
            }
            blocks_.push_back(std::move(b));
        }
    }

    void add(const Int& u) {
        if (gcd(mod_floor(u, st_->n), st_->n) != 1)
            throw std::invalid_argument("SubgroupSpan::add: not a unit");
        for (auto& b : blocks_) {
            if (b.small) {
                b.echelon->add(dl_vector(b, u));
            } else if (!b.full) {
                b.full = !ell_part_trivial(b, u);
            }
        }
    }

    bool contains(const Int& u) const {
        if (gcd(mod_floor(u, st_->n), st_->n) != 1)
            throw std::invalid_argument("SubgroupSpan::contains: not a unit");
        for (const auto& b : blocks_) {
            if (b.small) {
                if (!b.echelon->contains(dl_vector(b, u))) return false;
            } else {
                if (!b.full && !ell_part_trivial(b, u)) return false;
            }
        }
        return true;
    }

    bool is_full() const {
        for (const auto& b : blocks_) {
            if (b.small) {
                // span must contain each embedded component generator
                for (std::size_t k = 0; k < b.component_index.size(); ++k) {
                    std::vector<Int> unit_vec(b.component_index.size(), Int(0));
                    Int scale = 1;
                    for (unsigned i = 0; i < b.F - b.f[k]; ++i) scale *= b.ell;
                    unit_vec[k] = scale;
                    if (!b.echelon->contains(unit_vec)) return false;
                }
            } else {
                if (!b.full) return false;
            }
        }
        return true;
    }

private:
    struct SylowBlock {
        Int ell;
        bool small = false;
        bool full = false;  // large-prime mode only
        unsigned F = 0;
        std::vector<std::size_t> component_index;
        std::vector<unsigned> f;
        std::vector<Int> gamma;                        // small mode
        std::vector<detail::BabyStepTable> tables;     // small mode
        std::optional<detail::EchelonZModPrimePower> echelon;
    };

    std::vector<Int> dl_vector(const SylowBlock& b, const Int& u) const {
        std::vector<Int> vec(b.component_index.size());
        long long l = static_cast<long long>(b.ell);
        for (std::size_t k = 0; k < b.component_index.size(); ++k) {
            const auto& comp = st_->components[b.component_index[k]];
            Int sub_order = 1;
            for (unsigned i = 0; i < b.f[k]; ++i) sub_order *= b.ell;
            Int y = powm(mod_floor(u, comp.modulus), comp.order / sub_order, comp.modulus);
            Int d = detail::dlog_prime_power(y, b.gamma[k], l, b.f[k], comp.modulus, b.tables[k]);
            Int scale = 1;
            for (unsigned i = 0; i < b.F - b.f[k]; ++i) scale *= b.ell;
            vec[k] = d * scale;
        }
        return vec;
    }

    bool ell_part_trivial(const SylowBlock& b, const Int& u) const {
        const auto& comp = st_->components[b.component_index[0]];
        return powm(mod_floor(u, comp.modulus), comp.order / b.ell, comp.modulus) == 1;
    }

    const UnitGroupStructure* st_;
    std::vector<SylowBlock> blocks_;
};

/// Smallest-first greedy generating set of (Z/nZ)^x, driven entirely by the
/// factored structure. Same policy (and same output) as the enumeration-based
/// ntheory::unit_group_generators wherever both are feasible.
inline std::vector<Int> greedy_generators(const UnitGroupStructure& st,
                                          long long candidate_limit = 1'000'000) {
    std::vector<Int> gens;
    SubgroupSpan span(st);
    if (span.is_full()) return gens;  // trivial group
    Int u = 2;
    for (long long scanned = 0; scanned < candidate_limit; ++scanned, ++u) {
        if (u >= st.n) throw std::logic_error("greedy_generators: ran out of residues");
        if (gcd(u, st.n) != 1) continue;
        if (span.contains(u)) continue;
        span.add(u);
        gens.push_back(u);
        if (span.is_full()) return gens;
    }
    throw resource_error("greedy_generators: candidate limit exceeded");
}

}  // namespace qgroups::unitgroup
