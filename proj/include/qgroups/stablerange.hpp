#pragma once

#include "qgroups/primeseq.hpp"
#include "qgroups/rank1.hpp"

#include <memory>
#include <optional>
#include <sstream>
#include <variant>

namespace qgroups::stablerange {

enum class Verdict { yes, no, unknown };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::yes: return "yes";
        case Verdict::no: return "no";
        default: return "unknown";
    }
}

/// A required sequence stage is not built; carries the stage index.
class stage_needed_error : public std::runtime_error {
public:
    stage_needed_error(unsigned stage, const std::string& what)
        : std::runtime_error(what), stage_(stage) {}
    unsigned stage() const { return stage_; }

private:
    unsigned stage_;
};

// ---------------------------------------------------------------------------
// Descriptions of (possibly infinite) sets of primes.
// ---------------------------------------------------------------------------

struct ColumnRule {
    enum class Mode { total, cutoff };
    Mode mode = Mode::total;
    std::map<unsigned, unsigned> j_of_i;  // total: i <= i_cover; cutoff: i < i_star
    unsigned i_star = 0;                  // cutoff: least failing row
    unsigned i_cover = 0;                 // total: largest certified row

    void validate() const {
        if (mode == Mode::total) {
            for (unsigned i = 0; i <= i_cover; ++i)
                if (!j_of_i.count(i))
                    throw std::invalid_argument("ColumnRule: total rule missing j_of_i(" +
                                                std::to_string(i) + ")");
        } else {
            for (unsigned i = 0; i < i_star; ++i)
                if (!j_of_i.count(i))
                    throw std::invalid_argument("ColumnRule: cutoff rule missing j_of_i(" +
                                                std::to_string(i) + ")");
        }
    }
    /// max of j_of_i over i' <= i (the least column certified for row i).
    unsigned certified_j(unsigned i) const {
        unsigned j = 0;
        for (unsigned k = 0; k <= i; ++k) j = std::max(j, j_of_i.at(k));
        return j;
    }
};

struct PrimeSetDescription {
    enum class Kind { finite, cofinite, column_union };
    Kind kind = Kind::finite;
    std::set<Int> primes;  // finite: the members; cofinite: the excluded primes
    std::shared_ptr<const primeseq::PrimeSequence> seq;  // column_union only
    ColumnRule rule;

    static PrimeSetDescription finite(std::set<Int> ps) {
        PrimeSetDescription d;
        d.kind = Kind::finite;
        d.primes = std::move(ps);
        return d;
    }
    static PrimeSetDescription cofinite(std::set<Int> excluded) {
        PrimeSetDescription d;
        d.kind = Kind::cofinite;
        d.primes = std::move(excluded);
        return d;
    }
    static PrimeSetDescription column_union(std::shared_ptr<const primeseq::PrimeSequence> s,
                                            ColumnRule r) {
        PrimeSetDescription d;
        d.kind = Kind::column_union;
        d.seq = std::move(s);
        d.rule = std::move(r);
        return d;
    }

    void validate() const {
        if (kind != Kind::column_union) {
            for (const Int& p : primes)
                if (!ntheory::is_prime(p))
                    throw std::invalid_argument("description lists non-prime " + p.str());
        } else {
            if (!seq || !seq->built())
                throw std::invalid_argument("column description without a built sequence");
            rule.validate();
        }
    }

    std::string brief() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::finite: {
                os << "finite {";
                bool first = true;
                for (const Int& p : primes) os << (first ? "" : " ") << p, first = false;
                os << "}";
                break;
            }
            case Kind::cofinite: {
                os << "cofinite excluding {";
                bool first = true;
                for (const Int& p : primes) os << (first ? "" : " ") << p, first = false;
                os << "}";
                break;
            }
            case Kind::column_union:
                if (rule.mode == ColumnRule::Mode::total)
                    os << "column-union total (rows 0.." << rule.i_cover << ")";
                else
                    os << "column-union cutoff at i*=" << rule.i_star;
                break;
        }
        return os.str();
    }
};

/// Built columns the description includes, with their primes.
inline std::map<std::pair<unsigned, unsigned>, std::vector<Int>> included_built_columns(
    const PrimeSetDescription& desc) {
    if (desc.kind != PrimeSetDescription::Kind::column_union)
        throw std::invalid_argument("included_built_columns: not a column description");
    std::map<std::pair<unsigned, unsigned>, std::vector<Int>> out;
    const auto& seq = *desc.seq;
    unsigned row_end = desc.rule.mode == ColumnRule::Mode::total ? desc.rule.i_cover + 1
                                                                 : desc.rule.i_star;
    for (unsigned i = 0; i < row_end && i <= seq.stages(); ++i) {
        unsigned j0 = desc.rule.certified_j(i);
        for (unsigned j = j0; i + j <= seq.stages(); ++j)
            out[{i, j}] = seq.p_primes(i, j);
    }
    return out;
}

inline std::vector<Int> included_built_primes(const PrimeSetDescription& desc) {
    std::vector<Int> out;
    for (const auto& [col, ps] : included_built_columns(desc))
        out.insert(out.end(), ps.begin(), ps.end());
    return out;
}

// ---------------------------------------------------------------------------
// Verdicts and certificates.
// ---------------------------------------------------------------------------

struct UnitRecipeProbe {
    Int alpha1, alpha2, u;
    std::map<Int, unsigned> word;  // u as a product of column primes
};

/// Yes-certificate for column-union/total descriptions: any modulus dividing
/// a built a_i with i within coverage admits units from the certified column.
struct UnitRecipe {
    unsigned i_cover = 0;
    std::vector<UnitRecipeProbe> probes;
};

/// Yes/No by the closed-form localization cases: (i) all but finitely many
/// primes inverted, (ii) only finitely many.
struct ClosedForm {
    bool all_but_finitely = true;
};

struct Obstruction {
    Int alpha1;
    Int alpha2;
    bool via_cutoff = false;
    unsigned i_star = 0;             // cutoff: alpha2 = q_{i*}
    std::vector<Int> subgroup;       // finite case: sign-closed subgroup mod alpha2
    std::vector<Int> residue_primes; // cutoff case: built included primes (all QRs)
};

struct StableRangeVerdict {
    Verdict verdict = Verdict::unknown;
    std::variant<std::monostate, UnitRecipe, ClosedForm, Obstruction> certificate;
    std::string unknown_reason;
    unsigned needed_stage = 0;      // unknown verdicts name the missing stage
    long long search_bound_used = 0;
    std::string caveat;
};

struct Options {
    long long obstruction_bound = 10000;   // moduli scanned for finite descriptions
    long long alpha1_scan_limit = 100000;  // candidate primes per modulus
    long long enumeration_limit = 2'000'000;  // solve_unit subgroup size guard
    unsigned probes_per_row = 2;           // canonical unit-recipe probes
};

// ---------------------------------------------------------------------------
// solve_unit: units of Z_M hitting alpha1^{-1} mod alpha2, as words over the
// certified column's primes (subgroup enumeration with word reconstruction).
// ---------------------------------------------------------------------------

inline Int solve_unit(const PrimeSetDescription& desc, const Int& alpha1, const Int& alpha2,
                      std::map<Int, unsigned>* word_out = nullptr, const Options& opts = {}) {
    if (desc.kind != PrimeSetDescription::Kind::column_union ||
        desc.rule.mode != ColumnRule::Mode::total)
        throw std::invalid_argument("solve_unit: requires a column-union/total description");
    desc.validate();
    const auto& seq = *desc.seq;
    if (alpha2 < 2) throw std::invalid_argument("solve_unit: modulus must be >= 2");
    if (gcd(alpha1, alpha2) != 1) throw std::invalid_argument("solve_unit: inputs not coprime");
    for (const Int& p : included_built_primes(desc))
        if (alpha1 % p == 0 || alpha2 % p == 0)
            throw std::invalid_argument("solve_unit: inputs must be coprime to the described set");

    unsigned i = 0;
    bool found = false;
    for (; i <= seq.stages(); ++i)
        if (seq.a[i] % alpha2 == 0) {
            found = true;
            break;
        }
    if (!found) {
        unsigned needed = primeseq::needed_stage_for_divisor(seq, alpha2);
        throw stage_needed_error(needed, "solve_unit: " + alpha2.str() +
                                              " divides no built a_i; stage " +
                                              std::to_string(needed) + " required");
    }
    if (i > desc.rule.i_cover)
        throw stage_needed_error(i, "solve_unit: modulus needs row " + std::to_string(i) +
                                        " but the rule certifies rows 0.." +
                                        std::to_string(desc.rule.i_cover));
    unsigned j = desc.rule.certified_j(i);
    if (i + j > seq.stages())
        throw stage_needed_error(i + j, "solve_unit: column P_{" + std::to_string(i) + "," +
                                            std::to_string(j) + "} needs stage " +
                                            std::to_string(i + j));

    // BFS closure of the column's residues mod alpha2, tracking words.
    std::vector<Int> column = seq.p_primes(i, j);
    Int target = mod_inverse(alpha1, alpha2);
    std::map<Int, std::map<Int, unsigned>> words;
    words[mod_floor(1, alpha2)] = {};
    std::vector<Int> frontier{mod_floor(1, alpha2)};
    while (!words.count(target)) {
        if (frontier.empty())
            throw std::logic_error("solve_unit: column does not generate mod " + alpha2.str() +
                                   " (sequence invariant 1 violated?)");
        std::vector<Int> next;
        for (const Int& x : frontier) {
            for (const Int& p : column) {
                Int y = mod_floor(x * p, alpha2);
                if (words.count(y)) continue;
                auto w = words[x];
                ++w[p];
                words[y] = std::move(w);
                next.push_back(y);
                if (static_cast<long long>(words.size()) > opts.enumeration_limit)
                    throw resource_error("solve_unit: subgroup enumeration exceeds limit for "
                                         "modulus " + alpha2.str());
            }
        }
        frontier = std::move(next);
    }
    Int u = 1;
    for (const auto& [p, e] : words[target])
        for (unsigned k = 0; k < e; ++k) u *= p;
    if (mod_floor(alpha1 * u, alpha2) != 1)
        throw std::logic_error("solve_unit: reconstructed word fails its congruence");
    if (word_out) *word_out = words[target];
    return u;
}

// ---------------------------------------------------------------------------
// find_obstruction: a pair (alpha1, alpha2) with alpha1 prime, coprime to the
// described set, whose residue cannot be reached: alpha1 * m = m' (mod alpha2)
// is unsolvable over the set (signs included).
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<Int> alpha1_outside(const std::set<Int>& forbidden, const Int& alpha2,
                                         const std::set<Int>& subgroup, long long limit) {
    long long scanned = 0;
    for (std::uint32_t p : ntheory::small_primes_1e4()) {
        if (++scanned > limit) break;
        Int P = p;
        if (forbidden.count(P) || gcd(P, alpha2) != 1) continue;
        if (!subgroup.count(mod_floor(P, alpha2))) return P;
    }
    return std::nullopt;
}

}  // namespace detail

inline std::optional<Obstruction> find_obstruction(const PrimeSetDescription& desc,
                                                   long long bound, const Options& opts = {}) {
    desc.validate();
    switch (desc.kind) {
        case PrimeSetDescription::Kind::cofinite:
            return std::nullopt;  // case (i): yes-instances admit no obstruction

        case PrimeSetDescription::Kind::finite: {
            // primes first, then composites, ascending
            for (int pass = 0; pass < 2; ++pass) {
                for (Int alpha2 = 2; alpha2 <= bound; ++alpha2) {
                    bool prime = ntheory::is_prime(alpha2);
                    if (pass == 0 ? !prime : prime) continue;
                    bool coprime = true;
                    for (const Int& p : desc.primes)
                        if (alpha2 % p == 0) {
                            coprime = false;
                            break;
                        }
                    if (!coprime) continue;
                    std::vector<Int> gens(desc.primes.begin(), desc.primes.end());
                    gens.push_back(alpha2 - 1);  // -1: saturated sets carry the units
                    auto H = ntheory::subgroup_generated(alpha2, gens);
                    auto a1 = detail::alpha1_outside(desc.primes, alpha2, H,
                                                     opts.alpha1_scan_limit);
                    if (a1) {
                        Obstruction ob;
                        ob.alpha1 = *a1;
                        ob.alpha2 = alpha2;
                        ob.subgroup.assign(H.begin(), H.end());
                        return ob;
                    }
                }
            }
            return std::nullopt;
        }

        case PrimeSetDescription::Kind::column_union: {
            if (desc.rule.mode == ColumnRule::Mode::total) return std::nullopt;
            unsigned istar = desc.rule.i_star;
            const auto& seq = *desc.seq;
            if (istar > seq.stages())
                throw stage_needed_error(istar, "find_obstruction: q_" + std::to_string(istar) +
                                                    " not built");
            Int q = seq.q[istar].prime;
            Obstruction ob;
            ob.via_cutoff = true;
            ob.i_star = istar;
            ob.alpha2 = q;
            // every included prime is a residue mod q_{i*} (sequence invariant
            // (2) restricted to rows i < i*), machine-checked here
            for (const Int& p : included_built_primes(desc)) {
                if (!ntheory::is_quadratic_residue(p, q))
                    throw std::logic_error("find_obstruction: included prime " + p.str() +
                                           " is not a residue mod q_" + std::to_string(istar));
                ob.residue_primes.push_back(p);
            }
            // least prime non-residue
            for (std::uint32_t cand : ntheory::small_primes_1e4()) {
                if (q == cand) continue;
                if (!ntheory::is_quadratic_residue(Int(cand), q)) {
                    ob.alpha1 = cand;
                    return ob;
                }
            }
            throw resource_error("find_obstruction: no small non-residue mod " + q.str());
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// The classifier.
// ---------------------------------------------------------------------------

inline StableRangeVerdict has_one_in_stable_range(const PrimeSetDescription& desc,
                                                  const Options& opts = {}) {
    desc.validate();
    StableRangeVerdict out;
    switch (desc.kind) {
        case PrimeSetDescription::Kind::cofinite: {
            out.verdict = Verdict::yes;
            out.certificate = ClosedForm{true};
            if (desc.primes.empty())
                out.caveat = "all primes inverted: the ring is Q itself; classification follows "
                             "the rank-1 criterion literally";
            return out;
        }
        case PrimeSetDescription::Kind::finite: {
            auto ob = find_obstruction(desc, opts.obstruction_bound, opts);
            if (!ob)
                throw resource_error("has_one_in_stable_range: no obstruction below bound " +
                                     std::to_string(opts.obstruction_bound) +
                                     " (raise the bound)");
            out.verdict = Verdict::no;
            out.certificate = *ob;
            out.search_bound_used = opts.obstruction_bound;
            return out;
        }
        case PrimeSetDescription::Kind::column_union: {
            const auto& seq = *desc.seq;
            try {
                if (desc.rule.mode == ColumnRule::Mode::cutoff) {
                    auto ob = find_obstruction(desc, opts.obstruction_bound, opts);
                    out.verdict = Verdict::no;
                    out.certificate = *ob;
                    return out;
                }
                // total: certified columns must be built
                for (unsigned i = 0; i <= desc.rule.i_cover; ++i) {
                    unsigned j = desc.rule.certified_j(i);
                    if (i + j > seq.stages())
                        throw stage_needed_error(i + j, "column P_{" + std::to_string(i) + "," +
                                                            std::to_string(j) +
                                                            "} needs stage " +
                                                            std::to_string(i + j));
                }
                UnitRecipe recipe;
                recipe.i_cover = desc.rule.i_cover;
                // canonical probes: smallest divisors of each covered a_i
                for (unsigned i = 0; i <= desc.rule.i_cover; ++i) {
                    unsigned placed = 0;
                    for (Int d = 2; placed < opts.probes_per_row && d <= 1000; ++d) {
                        if (seq.a[i] % d != 0) continue;
                        if (i > 0 && seq.a[i - 1] % d == 0) continue;  // probe the new row
                        Int a1 = 0;
                        for (std::uint32_t c : ntheory::small_primes_1e4()) {
                            bool clash = false;
                            for (const Int& p : included_built_primes(desc))
                                if (p == c) clash = true;
                            if (!clash && gcd(Int(c), d) == 1) {
                                a1 = c;
                                break;
                            }
                        }
                        UnitRecipeProbe probe;
                        probe.alpha1 = a1;
                        probe.alpha2 = d;
                        probe.u = solve_unit(desc, a1, d, &probe.word, opts);
                        recipe.probes.push_back(std::move(probe));
                        ++placed;
                    }
                }
                out.verdict = Verdict::yes;
                out.certificate = std::move(recipe);
                return out;
            } catch (const stage_needed_error& e) {
                out.verdict = Verdict::unknown;
                out.unknown_reason = e.what();
                out.needed_stage = e.stage();
                return out;
            }
        }
    }
    return out;
}

/// Independent audit of a verdict. False means the certificate fails.
inline bool check_certificate(const PrimeSetDescription& desc, const StableRangeVerdict& v,
                              const Options& opts = {}) {
    try {
        desc.validate();
        if (v.verdict == Verdict::unknown) return true;  // claims nothing
        if (const auto* cf = std::get_if<ClosedForm>(&v.certificate)) {
            if (v.verdict == Verdict::yes)
                return cf->all_but_finitely && desc.kind == PrimeSetDescription::Kind::cofinite;
            return !cf->all_but_finitely && desc.kind == PrimeSetDescription::Kind::finite;
        }
        if (const auto* ob = std::get_if<Obstruction>(&v.certificate)) {
            if (v.verdict != Verdict::no) return false;
            if (!ntheory::is_prime(ob->alpha1)) return false;
            if (gcd(ob->alpha1, ob->alpha2) != 1) return false;
            if (desc.kind == PrimeSetDescription::Kind::finite) {
                if (desc.primes.count(ob->alpha1)) return false;
                for (const Int& p : desc.primes)
                    if (ob->alpha2 % p == 0 || p == ob->alpha1) return false;
                std::vector<Int> gens(desc.primes.begin(), desc.primes.end());
                gens.push_back(ob->alpha2 - 1);
                auto H = ntheory::subgroup_generated(ob->alpha2, gens);
                return !H.count(mod_floor(ob->alpha1, ob->alpha2));
            }
            if (desc.kind == PrimeSetDescription::Kind::column_union &&
                desc.rule.mode == ColumnRule::Mode::cutoff) {
                const auto& seq = *desc.seq;
                if (!ob->via_cutoff || ob->i_star != desc.rule.i_star) return false;
                if (ob->i_star > seq.stages()) return false;
                if (ob->alpha2 != seq.q[ob->i_star].prime) return false;
                if (ob->alpha2 % 4 != 1) return false;  // -1 must stay a residue
                for (const Int& p : included_built_primes(desc))
                    if (!ntheory::is_quadratic_residue(p, ob->alpha2)) return false;
                return !ntheory::is_quadratic_residue(ob->alpha1, ob->alpha2);
            }
            return false;
        }
        if (const auto* recipe = std::get_if<UnitRecipe>(&v.certificate)) {
            if (v.verdict != Verdict::yes) return false;
            if (desc.kind != PrimeSetDescription::Kind::column_union ||
                desc.rule.mode != ColumnRule::Mode::total)
                return false;
            for (const auto& probe : recipe->probes) {
                Int u = solve_unit(desc, probe.alpha1, probe.alpha2, nullptr, opts);
                if (u != probe.u) return false;
                if (mod_floor(probe.alpha1 * probe.u, probe.alpha2) != 1) return false;
            }
            return true;
        }
        return false;
    } catch (const std::exception&) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Cancellability per the rank-1 characterization: G is cancellable iff G = Z
// or its endomorphism ring has 1 in the stable range.
// ---------------------------------------------------------------------------

struct LocalizationRing {
    PrimeSetDescription inverted;
};

inline LocalizationRing endomorphism_ring(const rank1::Rank1Group& g) {
    return {PrimeSetDescription::finite(rank1::inverted_primes(g))};
}

struct CancellabilityVerdict {
    Verdict verdict = Verdict::unknown;
    bool is_z = false;
    std::optional<StableRangeVerdict> stable_range;
    std::string caveat;
};

inline CancellabilityVerdict is_cancellable(const PrimeSetDescription& endo_ring,
                                            bool known_not_z, const Options& opts = {}) {
    CancellabilityVerdict out;
    StableRangeVerdict sr = has_one_in_stable_range(endo_ring, opts);
    out.stable_range = sr;
    out.caveat = sr.caveat;
    if (sr.verdict == Verdict::yes) {
        out.verdict = Verdict::yes;
    } else if (sr.verdict == Verdict::no) {
        if (known_not_z) {
            out.verdict = Verdict::no;
        } else {
            out.verdict = Verdict::unknown;
            out.caveat = "stable range fails but the group might still be Z itself";
        }
    } else {
        out.verdict = Verdict::unknown;
    }
    return out;
}

inline CancellabilityVerdict is_cancellable(const rank1::Rank1Group& g, const Options& opts = {}) {
    if (rank1::is_trivially_Z(g)) {
        CancellabilityVerdict out;
        out.verdict = Verdict::yes;
        out.is_z = true;
        return out;
    }
    CancellabilityVerdict out = is_cancellable(endomorphism_ring(g).inverted, true, opts);
    bool any_infinite = !rank1::inverted_primes(g).empty();
    if (!any_infinite)
        out.caveat = "only finite nonzero heights: the classification follows the literal "
                     "representative; normalize the height profile if 1 is not maximal";
    return out;
}

// ---------------------------------------------------------------------------
// Description files: kind line + payload lines.
// ---------------------------------------------------------------------------

inline PrimeSetDescription parse_description(std::istream& in) {
    PrimeSetDescription desc;
    std::string line;
    long line_no = 0;
    bool have_kind = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (!have_kind) {
            if (tok == "finite")
                desc.kind = PrimeSetDescription::Kind::finite;
            else if (tok == "cofinite")
                desc.kind = PrimeSetDescription::Kind::cofinite;
            else if (tok == "columnunion")
                desc.kind = PrimeSetDescription::Kind::column_union;
            else
                throw parse_error("description: unknown kind '" + tok + "'", line_no);
            have_kind = true;
            continue;
        }
        if (tok == "primes" || tok == "excluded") {
            Int p;
            while (ls >> p) desc.primes.insert(p);
        } else if (tok == "total") {
            desc.rule.mode = ColumnRule::Mode::total;
        } else if (tok == "cutoff") {
            desc.rule.mode = ColumnRule::Mode::cutoff;
            if (!(ls >> desc.rule.i_star)) throw parse_error("description: cutoff needs i*", line_no);
        } else if (tok == "jofi") {
            unsigned i, j;
            if (!(ls >> i >> j)) throw parse_error("description: bad jofi line", line_no);
            desc.rule.j_of_i[i] = j;
            if (desc.rule.mode == ColumnRule::Mode::total)
                desc.rule.i_cover = std::max(desc.rule.i_cover, i);
        } else {
            throw parse_error("description: unknown record '" + tok + "'", line_no);
        }
    }
    if (!have_kind) throw parse_error("description: empty file");
    return desc;
}

inline PrimeSetDescription parse_description(const std::string& text) {
    std::istringstream in(text);
    return parse_description(in);
}

inline void write_description(const PrimeSetDescription& desc, std::ostream& out) {
    switch (desc.kind) {
        case PrimeSetDescription::Kind::finite: {
            out << "finite\nprimes";
            for (const Int& p : desc.primes) out << " " << p;
            out << "\n";
            break;
        }
        case PrimeSetDescription::Kind::cofinite: {
            out << "cofinite\nexcluded";
            for (const Int& p : desc.primes) out << " " << p;
            out << "\n";
            break;
        }
        case PrimeSetDescription::Kind::column_union: {
            out << "columnunion\n";
            if (desc.rule.mode == ColumnRule::Mode::total)
                out << "total\n";
            else
                out << "cutoff " << desc.rule.i_star << "\n";
            for (const auto& [i, j] : desc.rule.j_of_i) out << "jofi " << i << " " << j << "\n";
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Report rendering: structured text, certificate inlined, byte-reproducible.
// ---------------------------------------------------------------------------

inline std::string render_verdict(const PrimeSetDescription& desc, const StableRangeVerdict& v,
                                  const Options& opts = {}) {
    std::ostringstream os;
    os << "stable-range report\n";
    os << "description: " << desc.brief() << "\n";
    os << "verdict: " << to_string(v.verdict) << "\n";
    if (const auto* cf = std::get_if<ClosedForm>(&v.certificate)) {
        os << "certificate: closed-form case " << (cf->all_but_finitely ? "(i)" : "(ii)")
           << (cf->all_but_finitely ? " - all but finitely many primes inverted\n"
                                    : " - only finitely many primes inverted\n");
    } else if (const auto* ob = std::get_if<Obstruction>(&v.certificate)) {
        os << "certificate: obstruction\n";
        os << "  alpha1: " << ob->alpha1 << "\n";
        os << "  alpha2: " << ob->alpha2 << (ob->via_cutoff ? " (= q_" + std::to_string(ob->i_star) + ")" : "")
           << "\n";
        if (!ob->via_cutoff) {
            os << "  reachable residues mod alpha2:";
            for (const Int& h : ob->subgroup) os << " " << h;
            os << "\n";
        } else {
            os << "  included primes verified residues mod alpha2:";
            for (const Int& p : ob->residue_primes) os << " " << p;
            os << "\n";
        }
    } else if (const auto* recipe = std::get_if<UnitRecipe>(&v.certificate)) {
        os << "certificate: unit-recipe (rows 0.." << recipe->i_cover << ")\n";
        for (const auto& probe : recipe->probes) {
            os << "  probe alpha1=" << probe.alpha1 << " alpha2=" << probe.alpha2
               << " u=" << probe.u << " word=";
            bool first = true;
            for (const auto& [p, e] : probe.word) {
                os << (first ? "" : "*") << p << "^" << e;
                first = false;
            }
            if (probe.word.empty()) os << "1";
            os << "\n";
        }
    }
    if (v.verdict == Verdict::unknown) os << "reason: " << v.unknown_reason << "\n";
    if (!v.caveat.empty()) os << "caveat: " << v.caveat << "\n";
    if (v.verdict != Verdict::unknown)
        os << "audit: " << (check_certificate(desc, v, opts) ? "pass" : "FAIL") << "\n";
    return os.str();
}

inline std::string render_cancellability(const CancellabilityVerdict& v,
                                         const PrimeSetDescription* endo_desc,
                                         const Options& opts = {}) {
    std::ostringstream os;
    os << "cancellability report\n";
    os << "verdict: " << to_string(v.verdict) << "\n";
    if (v.is_z) {
        os << "reason: the group is Z (all heights zero); Z is cancellable\n";
        return os.str();
    }
    if (!v.caveat.empty()) os << "caveat: " << v.caveat << "\n";
    if (v.stable_range && endo_desc) {
        os << "endomorphism ring: localization at " << endo_desc->brief() << "\n";
        os << render_verdict(*endo_desc, *v.stable_range, opts);
    }
    return os.str();
}

}  // namespace qgroups::stablerange
