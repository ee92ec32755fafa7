#pragma once

#include "qgroups/stablerange.hpp"

#include <sstream>
#include <vector>

namespace qgroups::reduction {

// ---------------------------------------------------------------------------
// Bounded quantifier tables. Entries beyond the declared bounds read as false;
// total_flags carry the assertion that "(forall u)(exists v) R(x;i,j,u,v)"
// holds beyond the stored window. A flag is only accepted when the stored
// slice is consistent with it.
// ---------------------------------------------------------------------------

struct QuantifierTable4 {
    unsigned I_max = 0, J_max = 0, U_max = 0, V_max = 0;
    std::vector<bool> entries;
    std::set<std::pair<unsigned, unsigned>> total_flags;
    std::string label;

    QuantifierTable4() = default;
    QuantifierTable4(unsigned I, unsigned J, unsigned U, unsigned V, std::string lbl = "x")
        : I_max(I), J_max(J), U_max(U), V_max(V), label(std::move(lbl)) {
        entries.assign(static_cast<std::size_t>(I + 1) * (J + 1) * (U + 1) * (V + 1), false);
    }

    std::size_t index(unsigned i, unsigned j, unsigned u, unsigned v) const {
        return ((static_cast<std::size_t>(i) * (J_max + 1) + j) * (U_max + 1) + u) * (V_max + 1) +
               v;
    }
    bool entry(unsigned i, unsigned j, unsigned u, unsigned v) const {
        if (i > I_max || j > J_max || u > U_max || v > V_max) return false;
        return entries[index(i, j, u, v)];
    }
    void set_entry(unsigned i, unsigned j, unsigned u, unsigned v, bool val = true) {
        entries[index(i, j, u, v)] = val;
    }
    bool flag(unsigned i, unsigned j) const { return total_flags.count({i, j}) != 0; }

    /// (forall u <= m)(exists v <= V_max) R(i,j,u,v)
    bool slice(unsigned i, unsigned j, unsigned m) const {
        for (unsigned u = 0; u <= m; ++u) {
            bool some_v = false;
            for (unsigned v = 0; v <= V_max && !some_v; ++v) some_v = entry(i, j, u, v);
            if (!some_v) return false;
        }
        return true;
    }

    void validate() const {
        for (const auto& [i, j] : total_flags) {
            if (i > I_max || j > J_max)
                throw std::invalid_argument("table: total flag (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") outside bounds");
            if (!slice(i, j, U_max))
                throw std::invalid_argument("table: total flag (" + std::to_string(i) + "," +
                                            std::to_string(j) +
                                            ") contradicts its bounded slice");
        }
    }
};

struct QuantifierTable2 {
    unsigned I_max = 0, J_max = 0;
    std::vector<bool> entries;
    std::string label;

    QuantifierTable2() = default;
    QuantifierTable2(unsigned I, unsigned J, std::string lbl = "x")
        : I_max(I), J_max(J), label(std::move(lbl)) {
        entries.assign(static_cast<std::size_t>(I + 1) * (J + 1), false);
    }
    bool entry(unsigned i, unsigned j) const {
        if (i > I_max || j > J_max) return false;
        return entries[static_cast<std::size_t>(i) * (J_max + 1) + j];
    }
    void set_entry(unsigned i, unsigned j, bool val = true) {
        entries[static_cast<std::size_t>(i) * (J_max + 1) + j] = val;
    }
};

// ---------------------------------------------------------------------------
// x |-> G(x): heights over the sequence's P columns from the bounded table.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_stages(const primeseq::PrimeSequence& seq, unsigned needed,
                           const char* who) {
    if (seq.stages() < needed)
        throw stablerange::stage_needed_error(
            needed, std::string(who) + ": sequence built to stage " +
                        std::to_string(seq.stages()) + ", stage " + std::to_string(needed) +
                        " required");
}

}  // namespace detail

inline rank1::Rank1Group build_group(const QuantifierTable4& table,
                                     const primeseq::PrimeSequence& seq) {
    table.validate();
    // Normalization guarantee: row 0 must grant at least height 1 somewhere,
    // otherwise every height is zero and the constructed group is Z itself.
    {
        unsigned m1 = std::min(1u, table.U_max);
        bool witnessed = false;
        for (unsigned j = 0; j <= table.J_max && !witnessed; ++j)
            witnessed = table.slice(0, j, m1);
        if (!witnessed)
            throw std::invalid_argument(
                "build_group: row i'=0 fails everywhere; normalize the relation so that "
                "(forall u)(exists v) R(x;0,0,u,v) holds (the group must not be Z)");
    }
    detail::require_stages(seq, table.I_max + table.J_max, "build_group");

    rank1::Rank1Group g;
    g.label = "G(" + table.label + ")";
    for (const auto& [key, entries] : seq.P) {
        auto [i, j] = key;
        if (i > table.I_max) continue;  // no data beyond the row bound: height 0
        unsigned jc = std::min(j, table.J_max);
        bool infinite = true;
        for (unsigned ip = 0; ip <= i && infinite; ++ip) {
            bool witnessed = false;
            for (unsigned jp = 0; jp <= jc && !witnessed; ++jp) witnessed = table.flag(ip, jp);
            infinite = witnessed;
        }
        if (infinite) {
            for (const auto& e : entries) g.set_height(e.prime, rank1::ExtendedHeight::inf());
            continue;
        }
        unsigned best = 0;
        for (unsigned m = 0; m <= table.U_max; ++m) {
            bool all_rows = true;
            for (unsigned ip = 0; ip <= i && all_rows; ++ip) {
                bool witnessed = false;
                for (unsigned jp = 0; jp <= jc && !witnessed; ++jp)
                    witnessed = table.slice(ip, jp, m);
                all_rows = witnessed;
            }
            if (!all_rows) break;
            best = m;
        }
        if (best > 0)
            for (const auto& e : entries) g.set_height(e.prime, rank1::ExtendedHeight::fin(best));
    }
    return g;
}

/// The set M of primes the endomorphism ring inverts, as a column union:
/// Total when every row has a flagged column, Cutoff at the least bare row.
inline stablerange::PrimeSetDescription characterize_M(
    const QuantifierTable4& table, std::shared_ptr<const primeseq::PrimeSequence> seq) {
    table.validate();
    // The classification route leans on the normalization harder: the flag at
    // (0,0) keeps any cutoff index at i* >= 1, so q_{i*} exists.
    if (!table.flag(0, 0))
        throw std::invalid_argument(
            "characterize_M: total flag (0,0) missing; normalize the relation (the cutoff "
            "obstruction needs i* >= 1)");
    detail::require_stages(*seq, table.I_max + table.J_max, "characterize_M");

    stablerange::ColumnRule rule;
    bool total = true;
    for (unsigned i = 0; i <= table.I_max; ++i) {
        bool found = false;
        for (unsigned j = 0; j <= table.J_max; ++j) {
            if (table.flag(i, j)) {
                rule.j_of_i[i] = j;
                found = true;
                break;
            }
        }
        if (!found) {
            total = false;
            rule.mode = stablerange::ColumnRule::Mode::cutoff;
            rule.i_star = i;
            break;
        }
    }
    if (total) {
        rule.mode = stablerange::ColumnRule::Mode::total;
        rule.i_cover = table.I_max;
    }
    return stablerange::PrimeSetDescription::column_union(std::move(seq), std::move(rule));
}

inline stablerange::CancellabilityVerdict classify(
    const QuantifierTable4& table, std::shared_ptr<const primeseq::PrimeSequence> seq,
    const stablerange::Options& opts = {}) {
    auto desc = characterize_M(table, std::move(seq));
    // the Remark normalization (flag (0,0)) guarantees G(x) is never Z
    return stablerange::is_cancellable(desc, /*known_not_z=*/true, opts);
}

// ---------------------------------------------------------------------------
// x |-> R(x): the strongly computable subring from a 2-quantifier table.
// ---------------------------------------------------------------------------

struct RingReport {
    stablerange::PrimeSetDescription desc;
    struct ColumnFact {
        unsigned i, j;
        bool included;
        std::size_t prime_count;
    };
    std::vector<ColumnFact> facts;  // every built column: a finite lookup each
    bool total = false;

    std::string render() const {
        std::ostringstream os;
        os << "strong-computability report\n";
        os << "description: " << desc.brief() << "\n";
        os << "per-column membership (finite table lookups):\n";
        for (const auto& f : facts)
            os << "  P_{" << f.i << "," << f.j << "} (" << f.prime_count << " primes): "
               << (f.included ? "included" : "excluded") << "\n";
        os << "every column decided: yes\n";
        return os.str();
    }
};

inline RingReport build_ring(const QuantifierTable2& table,
                             std::shared_ptr<const primeseq::PrimeSequence> seq) {
    detail::require_stages(*seq, table.I_max + table.J_max, "build_ring");
    stablerange::ColumnRule rule;
    bool total = true;
    for (unsigned i = 0; i <= table.I_max; ++i) {
        bool found = false;
        for (unsigned j = 0; j <= table.J_max; ++j)
            if (table.entry(i, j)) {
                rule.j_of_i[i] = j;
                found = true;
                break;
            }
        if (!found) {
            total = false;
            rule.mode = stablerange::ColumnRule::Mode::cutoff;
            rule.i_star = i;
            break;
        }
    }
    if (total) {
        rule.mode = stablerange::ColumnRule::Mode::total;
        rule.i_cover = table.I_max;
    }

    RingReport report;
    report.total = total;
    report.desc = stablerange::PrimeSetDescription::column_union(seq, rule);
    for (const auto& [key, entries] : seq->P) {
        auto [i, j] = key;
        bool included = false;
        if (i <= table.I_max) {
            unsigned jc = std::min(j, table.J_max);
            included = true;
            for (unsigned ip = 0; ip <= i && included; ++ip) {
                bool witnessed = false;
                for (unsigned jp = 0; jp <= jc && !witnessed; ++jp) witnessed = table.entry(ip, jp);
                included = witnessed;
            }
        }
        report.facts.push_back({i, j, included, entries.size()});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Table files: header with bounds and flags, then one line per true entry.
// ---------------------------------------------------------------------------

inline QuantifierTable4 parse_table4(std::istream& in) {
    std::string line;
    long line_no = 0;
    QuantifierTable4 table;
    bool have_magic = false, have_bounds = false;
    std::vector<std::array<unsigned, 4>> pending;
    std::vector<std::pair<unsigned, unsigned>> flags;
    std::string label = "x";
    unsigned I = 0, J = 0, U = 0, V = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (!have_magic) {
            std::string version;
            if (tok != "qtable4" || !(ls >> version) || version != "1")
                throw parse_error("table: expected 'qtable4 1' header", line_no);
            have_magic = true;
            continue;
        }
        if (tok == "label") {
            std::getline(ls >> std::ws, label);
        } else if (tok == "bounds") {
            if (!(ls >> I >> J >> U >> V)) throw parse_error("table: bad bounds", line_no);
            have_bounds = true;
        } else if (tok == "total") {
            unsigned i, j;
            if (!(ls >> i >> j)) throw parse_error("table: bad total line", line_no);
            flags.emplace_back(i, j);
        } else if (tok == "R") {
            unsigned i, j, u, v;
            if (!(ls >> i >> j >> u >> v)) throw parse_error("table: bad R line", line_no);
            pending.push_back({i, j, u, v});
        } else {
            throw parse_error("table: unknown record '" + tok + "'", line_no);
        }
    }
    if (!have_magic) throw parse_error("table: empty file");
    if (!have_bounds) throw parse_error("table: missing bounds");
    table = QuantifierTable4(I, J, U, V, label);
    for (const auto& e : pending) {
        if (e[0] > I || e[1] > J || e[2] > U || e[3] > V)
            throw parse_error("table: entry outside bounds");
        table.set_entry(e[0], e[1], e[2], e[3]);
    }
    for (const auto& [i, j] : flags) table.total_flags.insert({i, j});
    table.validate();  // malformed flags rejected at load
    return table;
}

inline QuantifierTable4 parse_table4(const std::string& text) {
    std::istringstream in(text);
    return parse_table4(in);
}

inline void write_table4(const QuantifierTable4& table, std::ostream& out) {
    out << "qtable4 1\n";
    if (!table.label.empty()) out << "label " << table.label << "\n";
    out << "bounds " << table.I_max << " " << table.J_max << " " << table.U_max << " "
        << table.V_max << "\n";
    for (const auto& [i, j] : table.total_flags) out << "total " << i << " " << j << "\n";
    for (unsigned i = 0; i <= table.I_max; ++i)
        for (unsigned j = 0; j <= table.J_max; ++j)
            for (unsigned u = 0; u <= table.U_max; ++u)
                for (unsigned v = 0; v <= table.V_max; ++v)
                    if (table.entry(i, j, u, v))
                        out << "R " << i << " " << j << " " << u << " " << v << "\n";
}

inline QuantifierTable2 parse_table2(std::istream& in) {
    std::string line;
    long line_no = 0;
    bool have_magic = false, have_bounds = false;
    std::vector<std::pair<unsigned, unsigned>> pending;
    std::string label = "x";
    unsigned I = 0, J = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (!have_magic) {
            std::string version;
            if (tok != "qtable2" || !(ls >> version) || version != "1")
                throw parse_error("table: expected 'qtable2 1' header", line_no);
            have_magic = true;
            continue;
        }
        if (tok == "label") {
            std::getline(ls >> std::ws, label);
        } else if (tok == "bounds") {
            if (!(ls >> I >> J)) throw parse_error("table: bad bounds", line_no);
            have_bounds = true;
        } else if (tok == "S") {
            unsigned i, j;
            if (!(ls >> i >> j)) throw parse_error("table: bad S line", line_no);
            pending.emplace_back(i, j);
        } else {
            throw parse_error("table: unknown record '" + tok + "'", line_no);
        }
    }
    if (!have_magic) throw parse_error("table: empty file");
    if (!have_bounds) throw parse_error("table: missing bounds");
    QuantifierTable2 table(I, J, label);
    for (const auto& [i, j] : pending) {
        if (i > I || j > J) throw parse_error("table: entry outside bounds");
        table.set_entry(i, j);
    }
    return table;
}

inline QuantifierTable2 parse_table2(const std::string& text) {
    std::istringstream in(text);
    return parse_table2(in);
}

inline void write_table2(const QuantifierTable2& table, std::ostream& out) {
    out << "qtable2 1\n";
    if (!table.label.empty()) out << "label " << table.label << "\n";
    out << "bounds " << table.I_max << " " << table.J_max << "\n";
    for (unsigned i = 0; i <= table.I_max; ++i)
        for (unsigned j = 0; j <= table.J_max; ++j)
            if (table.entry(i, j)) out << "S " << i << " " << j << "\n";
}

}  // namespace qgroups::reduction
