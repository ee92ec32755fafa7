#pragma once

// Shared oracle helpers for the unit suites and the acceptance binary.

#include "qgroups/lattice.hpp"
#include "qgroups/reduction.hpp"

#include <optional>
#include <random>

namespace qgroups::testutil {

/// Exhaustive small-coefficient membership oracle: is `target` an integer
/// combination of `gens` with every coefficient in [-bound, bound]?
inline bool brute_force_member(const lattice::Matrix& gens, const lattice::Row& target,
                               int bound) {
    if (gens.empty()) {
        for (const Int& x : target)
            if (x != 0) return false;
        return true;
    }
    const std::size_t g = gens.size(), n = gens[0].size();
    std::vector<int> c(g, -bound);
    while (true) {
        lattice::Row sum(n, 0);
        for (std::size_t i = 0; i < g; ++i)
            for (std::size_t j = 0; j < n; ++j) sum[j] += c[i] * gens[i][j];
        if (sum == target) return true;
        std::size_t k = 0;
        while (k < g && c[k] == bound) c[k++] = -bound;
        if (k == g) return false;
        ++c[k];
    }
}

struct LatticeInstance {
    lattice::Matrix gens;
    lattice::Row target;
    bool expected_member;
};

/// Random instance whose membership status is certifiable either way:
/// members are planted window combinations; non-members differ from a lattice
/// point by t*e_c where t is outside the pivot's residues at column c.
inline LatticeInstance random_lattice_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dg(3, 6), dn(4, 6), de(-4, 4), dc(-3, 3);
    LatticeInstance inst;
    const int g = dg(rng), n = dn(rng);
    inst.gens.assign(g, lattice::Row(n));
    for (auto& row : inst.gens)
        for (auto& x : row) x = de(rng);

    lattice::Row combo(n, 0);
    for (const auto& row : inst.gens) {
        int c = dc(rng);
        for (int j = 0; j < n; ++j) combo[j] += c * row[j];
    }

    bool want_member = rng() % 2 == 0;
    if (!want_member) {
        auto hnf = lattice::hermite_normal_form(inst.gens);
        auto pivots = lattice::pivot_columns(hnf);
        std::optional<std::pair<int, Int>> off;  // column, offset
        for (int col = 0; col < n && !off; ++col) {
            auto it = std::find(pivots.begin(), pivots.end(), static_cast<std::size_t>(col));
            if (it == pivots.end()) {
                off = {col, Int(1)};
            } else {
                const Int& pivot = hnf.H[it - pivots.begin()][col];
                if (pivot > 1) off = {col, Int(1 + static_cast<long>(rng() % 2))};
                if (off && off->second >= pivot) off->second = 1;
            }
        }
        if (off) {
            combo[off->first] += off->second;
            inst.target = combo;
            inst.expected_member = false;
            return inst;
        }
        // lattice is all of Z^n; fall through to a member instance
    }
    inst.target = combo;
    inst.expected_member = true;
    return inst;
}

// ---------------------------------------------------------------------------
// Random quantifier tables of a forced shape, always normalized (flag (0,0)),
// always flag-consistent, with bounds that a stage-2 sequence covers.
// ---------------------------------------------------------------------------

/// Make the bounded slice at (i,j) total so a flag there is legal.
inline void force_slice(reduction::QuantifierTable4& t, unsigned i, unsigned j,
                        std::mt19937_64& rng) {
    std::uniform_int_distribution<unsigned> dv(0, t.V_max);
    for (unsigned u = 0; u <= t.U_max; ++u) {
        bool some = false;
        for (unsigned v = 0; v <= t.V_max && !some; ++v) some = t.entry(i, j, u, v);
        if (!some) t.set_entry(i, j, u, dv(rng));
    }
}

inline reduction::QuantifierTable4 random_table4(std::mt19937_64& rng, bool total,
                                                 unsigned stage_budget = 2) {
    std::vector<std::pair<unsigned, unsigned>> shapes;
    for (unsigned I = 0; I <= stage_budget; ++I)
        for (unsigned J = 0; I + J <= stage_budget; ++J)
            if (total || I >= 1) shapes.emplace_back(I, J);
    auto [I, J] = shapes[rng() % shapes.size()];
    std::uniform_int_distribution<unsigned> duv(1, 3);
    reduction::QuantifierTable4 t(I, J, duv(rng), duv(rng),
                                  "rand" + std::to_string(rng() % 100000));
    // random noise entries
    for (unsigned i = 0; i <= I; ++i)
        for (unsigned j = 0; j <= J; ++j)
            for (unsigned u = 0; u <= t.U_max; ++u)
                for (unsigned v = 0; v <= t.V_max; ++v)
                    if (rng() % 2) t.set_entry(i, j, u, v);
    t.total_flags.insert({0, 0});
    force_slice(t, 0, 0, rng);
    if (total) {
        for (unsigned i = 1; i <= I; ++i) {
            unsigned j = rng() % (J + 1);
            t.total_flags.insert({i, j});
            force_slice(t, i, j, rng);
        }
    } else {
        unsigned istar = 1 + rng() % I;
        for (unsigned i = 1; i < istar; ++i) {
            unsigned j = rng() % (J + 1);
            t.total_flags.insert({i, j});
            force_slice(t, i, j, rng);
        }
        // row istar carries no flags; rows beyond may or may not
        for (unsigned i = istar + 1; i <= I; ++i)
            if (rng() % 2) {
                unsigned j = rng() % (J + 1);
                t.total_flags.insert({i, j});
                force_slice(t, i, j, rng);
            }
    }
    t.validate();
    return t;
}

inline reduction::QuantifierTable2 random_table2(std::mt19937_64& rng, bool total,
                                                 unsigned stage_budget = 2) {
    std::vector<std::pair<unsigned, unsigned>> shapes;
    for (unsigned I = 0; I <= stage_budget; ++I)
        for (unsigned J = 0; I + J <= stage_budget; ++J)
            if (total || I >= 1) shapes.emplace_back(I, J);
    auto [I, J] = shapes[rng() % shapes.size()];
    reduction::QuantifierTable2 t(I, J, "rand" + std::to_string(rng() % 100000));
    for (unsigned i = 0; i <= I; ++i)
        for (unsigned j = 0; j <= J; ++j)
            if (rng() % 2) t.set_entry(i, j);
    if (total) {
        for (unsigned i = 0; i <= I; ++i) t.set_entry(i, rng() % (J + 1));
    } else {
        unsigned istar = 1 + rng() % I;
        t.set_entry(0, rng() % (J + 1));
        for (unsigned i = 1; i < istar; ++i) t.set_entry(i, rng() % (J + 1));
        for (unsigned j = 0; j <= J; ++j) t.set_entry(istar, j, false);
    }
    return t;
}

}  // namespace qgroups::testutil
