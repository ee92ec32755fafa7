#pragma once

#include "qgroups/ntheory.hpp"
#include "qgroups/unitgroup.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

namespace qgroups::primeseq {

// ---------------------------------------------------------------------------
// The computable sequences (a_i), (q_i), (r_i), (P_{i,j}).
//
// Construction policies, fixed so that the whole pipeline is reproducible:
//   - stage order: at stage s define q_s, a_s, then P_{i,j} for i+j = s with
//     i ascending;
//   - unit-group generators: smallest-first greedy;
//   - every P prime is the minimal odd prime >= 5 satisfying its congruence
//     and strictly larger than every prime already placed in any P set and
//     every q chosen so far;
//   - (r_i) is the enumeration i = 2^a(2b+1) |-> (a+1)-th prime.
// ---------------------------------------------------------------------------

struct ScanProvenance {
    Int residue;             // congruence actually scanned (after CRT)
    Int modulus;
    Int lower_bound;         // prime must strictly exceed this
    long long candidates;    // class members examined; the last one is the prime

    bool operator==(const ScanProvenance&) const = default;
};

struct QEntry {
    Int prime;
    ScanProvenance prov;
    bool operator==(const QEntry&) const = default;
};

struct PEntry {
    Int prime;
    Int target_generator;    // the g_k this prime realizes mod a_i
    ScanProvenance prov;
    bool operator==(const PEntry&) const = default;
};

struct PrimeSequence {
    std::vector<Int> a;       // a[0..s*]
    std::vector<QEntry> q;    // q[1..s*], index 0 unused
    std::vector<Int> r;       // r[1..s*], index 0 unused
    std::map<std::pair<unsigned, unsigned>, std::vector<PEntry>> P;  // i+j <= s*

    unsigned stages() const {
        return a.empty() ? 0 : static_cast<unsigned>(a.size() - 1);
    }
    bool built() const { return !a.empty(); }

    const std::vector<PEntry>& p_set(unsigned i, unsigned j) const {
        auto it = P.find({i, j});
        if (it == P.end())
            throw std::out_of_range("PrimeSequence: P_{" + std::to_string(i) + "," +
                                    std::to_string(j) + "} not built");
        return it->second;
    }
    std::vector<Int> p_primes(unsigned i, unsigned j) const {
        std::vector<Int> out;
        for (const auto& e : p_set(i, j)) out.push_back(e.prime);
        return out;
    }
    std::vector<Int> all_p_primes() const {
        std::vector<Int> out;
        for (const auto& [key, entries] : P)
            for (const auto& e : entries) out.push_back(e.prime);
        return out;
    }

    bool operator==(const PrimeSequence&) const = default;
};

/// i = 2^a (2b+1) |-> the (a+1)-th prime; every prime recurs infinitely often.
inline Int r_enumeration(unsigned long long i) {
    if (i == 0) throw std::invalid_argument("r_enumeration: index must be >= 1");
    unsigned a = 0;
    while (i % 2 == 0) {
        i /= 2;
        ++a;
    }
    const auto& primes = ntheory::small_primes_1e4();
    if (a >= primes.size()) throw resource_error("r_enumeration: prime index out of table range");
    return primes[a];
}

// --- factorization knowledge ------------------------------------------------

/// a_i as a factored value: 3 * prod_{k<=i} q_k r_k, all factors known primes.
inline unitgroup::Factorization factored_a(const PrimeSequence& seq, unsigned i) {
    if (i > seq.stages()) throw std::out_of_range("factored_a: stage not built");
    unitgroup::Factorization f;
    f.mul_prime(3);
    for (unsigned k = 1; k <= i; ++k) {
        f.mul_prime(seq.q[k].prime);
        f.mul_prime(seq.r[k]);
    }
    return f;
}

/// The Dirichlet modulus used to find q_s: 4 * prod(P primes, i+j<s) * prod(a_i, i<s).
inline Int q_search_modulus(const PrimeSequence& seq, unsigned s) {
    Int d = 4;
    for (const auto& [key, entries] : seq.P) {
        if (key.first + key.second >= s) continue;
        for (const auto& e : entries) d *= e.prime;
    }
    for (unsigned i = 0; i < s; ++i) d *= seq.a[i];
    return d;
}

/// Full factorization of q_s - 1, reassembled from the construction:
/// q_s - 1 = k * D_s with D_s of known factorization and k small.
inline unitgroup::Factorization factored_q_minus_1(const PrimeSequence& seq, unsigned s) {
    unitgroup::Factorization f;
    f.mul_prime(2, 2);
    for (const auto& [key, entries] : seq.P) {
        if (key.first + key.second >= s) continue;
        for (const auto& e : entries) f.mul_prime(e.prime);
    }
    for (unsigned i = 0; i < s; ++i) f.mul(factored_a(seq, i));
    Int d = f.value();
    Int qm1 = seq.q[s].prime - 1;
    if (qm1 % d != 0)
        throw std::logic_error("factored_q_minus_1: q_" + std::to_string(s) +
                               " does not satisfy its congruence");
    f.mul(unitgroup::factor_with_hints(qm1 / d));
    return f;
}

/// Factors p-1 for any prime p dividing some a_i (they are all either small
/// or one of the constructed q's, whose p-1 factorization is known).
inline unitgroup::PrimeFactorer factorer(const PrimeSequence& seq) {
    std::map<Int, unsigned> q_index;
    for (unsigned s = 1; s <= seq.stages(); ++s) q_index[seq.q[s].prime] = s;
    // copy the sequence so the factorer stays valid independently of `seq`
    PrimeSequence copy = seq;
    return [copy, q_index](const Int& p) {
        auto it = q_index.find(p);
        if (it != q_index.end()) return factored_q_minus_1(copy, it->second);
        return unitgroup::factor_with_hints(p - 1);
    };
}

inline unitgroup::UnitGroupStructure unit_structure_a(const PrimeSequence& seq, unsigned i) {
    return unitgroup::unit_group_structure(factored_a(seq, i), factorer(seq));
}

// --- construction -----------------------------------------------------------

struct BuildOptions {
    ntheory::SearchLimits limits;
};

namespace detail {

inline Int placement_floor(const PrimeSequence& seq) {
    Int floor = 4;  // P primes are odd primes >= 5
    for (unsigned s = 1; s <= seq.stages(); ++s) floor = std::max(floor, seq.q[s].prime);
    for (const Int& p : seq.all_p_primes()) floor = std::max(floor, p);
    return floor;
}

inline void place_p_set(PrimeSequence& seq, unsigned i, unsigned j,
                        const unitgroup::UnitGroupStructure& structure_a_i,
                        const BuildOptions& opts) {
    unsigned s = i + j;
    std::vector<Int> gens = unitgroup::greedy_generators(structure_a_i);
    std::vector<PEntry> entries;
    for (const Int& g : gens) {
        std::vector<ntheory::Congruence> congruences;
        Int q_product = 1;
        for (unsigned k = i + 1; k <= s; ++k) q_product *= seq.q[k].prime;
        if (q_product > 1) congruences.push_back({Int(1), q_product});
        congruences.push_back({g, seq.a[i]});
        ntheory::Congruence combined = ntheory::crt_combine(congruences);
        Int lower = placement_floor(seq);
        for (const auto& e : entries) lower = std::max(lower, e.prime);
        auto found = ntheory::dirichlet_search_traced(combined.residue, combined.modulus, lower,
                                                      opts.limits);
        entries.push_back({found.prime, g,
                           {combined.residue, combined.modulus, lower, found.candidates_scanned}});
    }
    seq.P[{i, j}] = std::move(entries);
}

}  // namespace detail

/// Extend a built sequence (or build from empty) through stage `stages`.
/// Earlier entries are never modified.
inline void extend_sequence(PrimeSequence& seq, unsigned stages, const BuildOptions& opts = {}) {
    std::map<unsigned, unitgroup::UnitGroupStructure> structures;
    auto structure_of = [&](unsigned i) -> const unitgroup::UnitGroupStructure& {
        auto it = structures.find(i);
        if (it == structures.end()) it = structures.emplace(i, unit_structure_a(seq, i)).first;
        return it->second;
    };

    if (!seq.built()) {
        seq.a = {Int(3)};
        seq.q = {QEntry{}};
        seq.r = {Int(0)};
        detail::place_p_set(seq, 0, 0, structure_of(0), opts);
    }
    for (unsigned s = seq.stages() + 1; s <= stages; ++s) {
        Int d = q_search_modulus(seq, s);
        auto found = ntheory::dirichlet_search_traced(1, d, 0, opts.limits);
        seq.q.push_back({found.prime, {Int(1), d, Int(0), found.candidates_scanned}});
        seq.r.push_back(r_enumeration(s));
        seq.a.push_back(seq.a[s - 1] * seq.q[s].prime * seq.r[s]);
        for (unsigned i = 0; i <= s; ++i) detail::place_p_set(seq, i, s - i, structure_of(i), opts);
    }
}

inline PrimeSequence build_sequence(unsigned stages, const BuildOptions& opts = {}) {
    PrimeSequence seq;
    extend_sequence(seq, stages, opts);
    return seq;
}

// --- invariant verification ---------------------------------------------------

struct InvariantReport {
    struct Clause {
        int id;               // 1..5 per the lemma, 6 = provenance/minimality audit
        std::string name;
        bool pass;
        std::string detail;   // counterexample on failure
    };
    std::vector<Clause> clauses;

    bool all_pass() const {
        for (const auto& c : clauses)
            if (!c.pass) return false;
        return true;
    }
    std::string render() const {
        std::ostringstream os;
        for (const auto& c : clauses) {
            os << "clause " << c.id << " (" << c.name << "): " << (c.pass ? "pass" : "FAIL");
            if (!c.detail.empty()) os << "  [" << c.detail << "]";
            os << "\n";
        }
        return os.str();
    }
};

namespace detail {

inline bool audit_scan(const ScanProvenance& prov, const Int& prime, std::string& detail) {
    // Re-walk the congruence class: everything after the lower bound and
    // before the recorded prime must be composite, and the count must match.
    Int c = prov.residue == 0 ? prov.modulus : prov.residue;
    if (c <= prov.lower_bound) c += ((prov.lower_bound - c) / prov.modulus + 1) * prov.modulus;
    long long scanned = 0;
    for (; c < prime; c += prov.modulus) {
        ++scanned;
        if (ntheory::is_prime(c)) {
            detail = "smaller qualifying prime " + c.str() + " below recorded " + prime.str();
            return false;
        }
    }
    if (c != prime) {
        detail = "prime " + prime.str() + " not in scanned class";
        return false;
    }
    if (scanned + 1 != prov.candidates) {
        detail = "scan count mismatch for " + prime.str();
        return false;
    }
    return true;
}

}  // namespace detail

inline InvariantReport verify_invariants(const PrimeSequence& seq, bool audit_minimality = false) {
    InvariantReport report;
    // a clause whose computation blows up on tampered data is a failing clause
    auto add = [&](int id, std::string name, bool pass, std::string detail = "") {
        report.clauses.push_back({id, std::move(name), pass, std::move(detail)});
    };

    // (1) P_{i,j} generates (Z/a_i Z)^x
    try {
        bool pass = true;
        std::string detail;
        std::map<unsigned, unitgroup::UnitGroupStructure> structures;
        for (const auto& [key, entries] : seq.P) {
            unsigned i = key.first;
            auto it = structures.find(i);
            if (it == structures.end())
                it = structures.emplace(i, unit_structure_a(seq, i)).first;
            unitgroup::SubgroupSpan span(it->second);
            bool unit_ok = true;
            for (const auto& e : entries) {
                if (gcd(e.prime, seq.a[i]) != 1) {
                    unit_ok = false;
                    break;
                }
                span.add(e.prime);
            }
            if (!unit_ok || !span.is_full()) {
                pass = false;
                detail = "P_{" + std::to_string(i) + "," + std::to_string(key.second) +
                         "} does not generate (Z/" + seq.a[i].str() + ")^x";
                break;
            }
        }
        add(1, "P_{i,j} generates (Z/a_i)^x", pass, detail);
    } catch (const std::exception& e) {
        add(1, "P_{i,j} generates (Z/a_i)^x", false, e.what());
    }

    // (2) each p in P_{i,j} is a quadratic residue mod q_k for k > i
    try {
        bool pass = true;
        std::string detail;
        for (const auto& [key, entries] : seq.P) {
            for (unsigned k = key.first + 1; k <= seq.stages() && pass; ++k) {
                for (const auto& e : entries) {
                    if (!ntheory::is_quadratic_residue(e.prime, seq.q[k].prime)) {
                        pass = false;
                        detail = e.prime.str() + " is not a residue mod q_" + std::to_string(k) +
                                 " = " + seq.q[k].prime.str();
                        break;
                    }
                }
            }
            if (!pass) break;
        }
        add(2, "P primes are residues mod later q_k", pass, detail);
    } catch (const std::exception& e) {
        add(2, "P primes are residues mod later q_k", false, e.what());
    }

    // (3) a_0 = 3 and a_{i+1} = a_i q_{i+1} r_{i+1}, with (r_i) the fixed enumeration
    {
        bool pass = seq.built() && seq.a[0] == 3;
        std::string detail = pass ? "" : "a_0 != 3";
        for (unsigned i = 1; pass && i <= seq.stages(); ++i) {
            if (seq.r[i] != r_enumeration(i)) {
                pass = false;
                detail = "r_" + std::to_string(i) + " deviates from the enumeration";
            } else if (seq.a[i] != seq.a[i - 1] * seq.q[i].prime * seq.r[i]) {
                pass = false;
                detail = "a_" + std::to_string(i) + " != a_" + std::to_string(i - 1) +
                         " * q * r";
            }
        }
        add(3, "a_0 = 3 and a_{i+1} = a_i q_{i+1} r_{i+1}", pass, detail);
    }

    // (4) gcd(q_i, a_j) = 1 for j < i
    {
        bool pass = true;
        std::string detail;
        for (unsigned i = 1; i <= seq.stages() && pass; ++i)
            for (unsigned j = 0; j < i; ++j)
                if (gcd(seq.q[i].prime, seq.a[j]) != 1) {
                    pass = false;
                    detail = "gcd(q_" + std::to_string(i) + ", a_" + std::to_string(j) + ") = " +
                             gcd(seq.q[i].prime, seq.a[j]).str();
                    i = seq.stages() + 1;
                    break;
                }
        add(4, "q_i coprime to earlier a_j", pass, detail);
    }

    // (5) no q_k in any P_{i,j}; P sets pairwise disjoint
    {
        bool pass = true;
        std::string detail;
        std::set<Int> qs;
        for (unsigned k = 1; k <= seq.stages(); ++k) qs.insert(seq.q[k].prime);
        std::map<Int, std::string> seen;
        for (const auto& [key, entries] : seq.P) {
            std::string tag =
                "P_{" + std::to_string(key.first) + "," + std::to_string(key.second) + "}";
            for (const auto& e : entries) {
                if (qs.count(e.prime)) {
                    pass = false;
                    detail = "q value " + e.prime.str() + " appears in " + tag;
                    break;
                }
                auto [it, inserted] = seen.emplace(e.prime, tag);
                if (!inserted) {
                    pass = false;
                    detail = e.prime.str() + " appears in both " + it->second + " and " + tag;
                    break;
                }
            }
            if (!pass) break;
        }
        add(5, "q's excluded from P sets; P sets disjoint", pass, detail);
    }

    if (audit_minimality) {
        try {
            bool pass = true;
            std::string detail;
            for (unsigned s = 1; s <= seq.stages() && pass; ++s)
                pass = detail::audit_scan(seq.q[s].prov, seq.q[s].prime, detail);
            for (const auto& [key, entries] : seq.P) {
                for (const auto& e : entries)
                    if (pass) pass = detail::audit_scan(e.prov, e.prime, detail);
            }
            add(6, "provenance scans are minimal", pass, detail);
        } catch (const std::exception& e) {
            add(6, "provenance scans are minimal", false, e.what());
        }
    }

    return report;
}

// --- cache ------------------------------------------------------------------

inline constexpr const char* kCacheMagic = "qgroups-primeseq-cache 1";

inline std::string serialize(const PrimeSequence& seq) {
    std::ostringstream os;
    os << kCacheMagic << "\n";
    os << "stages " << seq.stages() << "\n";
    auto prov = [&](const ScanProvenance& p) {
        os << " " << p.residue << " " << p.modulus << " " << p.lower_bound << " " << p.candidates;
    };
    os << "a 0 " << seq.a[0] << "\n";
    for (unsigned s = 1; s <= seq.stages(); ++s) {
        os << "q " << s << " " << seq.q[s].prime;
        prov(seq.q[s].prov);
        os << "\n";
        os << "r " << s << " " << seq.r[s] << "\n";
        os << "a " << s << " " << seq.a[s] << "\n";
    }
    for (const auto& [key, entries] : seq.P) {
        os << "P " << key.first << " " << key.second << " " << entries.size() << "\n";
        for (const auto& e : entries) {
            os << "p " << e.prime << " " << e.target_generator;
            prov(e.prov);
            os << "\n";
        }
    }
    std::string body = os.str();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(body)));
    return body + "checksum " + buf + "\n";
}

inline void cache_save(const PrimeSequence& seq, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cache_save: cannot open " + path.string());
    out << serialize(seq);
}

inline PrimeSequence deserialize(const std::string& text) {
    auto checksum_pos = text.rfind("checksum ");
    if (checksum_pos == std::string::npos || text.back() != '\n')
        throw parse_error("cache: missing checksum line");
    std::string body = text.substr(0, checksum_pos);
    std::string recorded = text.substr(checksum_pos + 9);
    while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == '\r'))
        recorded.pop_back();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
    if (recorded != buf) throw parse_error("cache: checksum mismatch");

    std::istringstream is(body);
    std::string line;
    long line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty()) return true;
        }
        return false;
    };
    if (!next_line() || line != kCacheMagic) throw parse_error("cache: bad version line", line_no);

    PrimeSequence seq;
    unsigned stages = 0;
    auto read_prov = [&](std::istringstream& ls) {
        ScanProvenance p;
        if (!(ls >> p.residue >> p.modulus >> p.lower_bound >> p.candidates))
            throw parse_error("cache: truncated provenance", line_no);
        return p;
    };
    while (next_line()) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "stages") {
            ls >> stages;
        } else if (tag == "a") {
            unsigned idx;
            Int v;
            if (!(ls >> idx >> v)) throw parse_error("cache: bad a record", line_no);
            if (idx != seq.a.size()) throw parse_error("cache: a records out of order", line_no);
            seq.a.push_back(v);
            if (idx == 0) {
                seq.q = {QEntry{}};
                seq.r = {Int(0)};
            }
        } else if (tag == "q") {
            unsigned idx;
            QEntry e;
            if (!(ls >> idx >> e.prime)) throw parse_error("cache: bad q record", line_no);
            e.prov = read_prov(ls);
            if (idx != seq.q.size()) throw parse_error("cache: q records out of order", line_no);
            seq.q.push_back(e);
        } else if (tag == "r") {
            unsigned idx;
            Int v;
            if (!(ls >> idx >> v)) throw parse_error("cache: bad r record", line_no);
            if (idx != seq.r.size()) throw parse_error("cache: r records out of order", line_no);
            seq.r.push_back(v);
        } else if (tag == "P") {
            unsigned i, j;
            std::size_t count;
            if (!(ls >> i >> j >> count)) throw parse_error("cache: bad P record", line_no);
            std::vector<PEntry> entries;
            for (std::size_t k = 0; k < count; ++k) {
                if (!next_line()) throw parse_error("cache: truncated P block", line_no);
                std::istringstream ps(line);
                std::string ptag;
                PEntry e;
                if (!(ps >> ptag >> e.prime >> e.target_generator) || ptag != "p")
                    throw parse_error("cache: bad p record", line_no);
                e.prov = read_prov(ps);
                entries.push_back(std::move(e));
            }
            seq.P[{i, j}] = std::move(entries);
        } else {
            throw parse_error("cache: unknown record '" + tag + "'", line_no);
        }
    }
    if (seq.stages() != stages || !seq.built())
        throw parse_error("cache: stage count disagrees with records");
    return seq;
}

/// Load, checksum-verify, and re-run the invariant checks. Corrupt or
/// tampered caches are refused.
inline PrimeSequence cache_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cache_load: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    PrimeSequence seq = deserialize(buffer.str());
    InvariantReport report = verify_invariants(seq);
    if (!report.all_pass()) {
        for (const auto& c : report.clauses)
            if (!c.pass)
                throw std::runtime_error("cache_load: invariant clause " + std::to_string(c.id) +
                                         " failed: " + c.detail);
    }
    return seq;
}

/// Smallest stage at which m divides a_i under the fixed policies. Future q's
/// never contribute factors of an already-known m, so only the r-enumeration
/// extends divisibility beyond the built range.
inline unsigned needed_stage_for_divisor(const PrimeSequence& seq, const Int& m,
                                         unsigned probe_limit = 4096) {
    if (!seq.built()) throw std::invalid_argument("needed_stage_for_divisor: empty sequence");
    for (unsigned i = 0; i <= seq.stages(); ++i)
        if (seq.a[i] % m == 0) return i;
    Int acc = seq.a[seq.stages()];
    for (unsigned s = seq.stages() + 1; s <= seq.stages() + probe_limit; ++s) {
        acc *= r_enumeration(s);
        if (acc % m == 0) return s;
    }
    throw resource_error("needed_stage_for_divisor: modulus " + m.str() +
                         " needs more than " + std::to_string(probe_limit) + " further stages");
}

}  // namespace qgroups::primeseq
