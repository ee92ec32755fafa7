#pragma once

#include "qgroups/lattice.hpp"
#include "qgroups/ntheory.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qgroups::treegroup {

// ---------------------------------------------------------------------------
// Trees: prefix-closed sets of finite sequences, enumerated parent-first.
// File format: one node per line, slash-separated indices, "-" for the root;
// file order is the enumeration order.
// ---------------------------------------------------------------------------

using Node = std::vector<unsigned>;

inline std::string node_str(const Node& n) {
    if (n.empty()) return "-";
    std::string out;
    for (std::size_t k = 0; k < n.size(); ++k)
        out += (k ? "/" : "") + std::to_string(n[k]);
    return out;
}

inline Node parent_of(const Node& n) {
    Node p = n;
    p.pop_back();
    return p;
}

struct TreeT {
    std::vector<Node> order;  // enumeration order
    std::set<Node> nodes;

    void validate() const {
        if (order.empty() || !order.front().empty())
            throw std::invalid_argument("tree: the root must be enumerated first");
        std::set<Node> seen;
        for (const Node& n : order) {
            if (!n.empty() && !seen.count(parent_of(n)))
                throw std::invalid_argument("tree: node " + node_str(n) +
                                            " enumerated before its parent");
            if (!seen.insert(n).second)
                throw std::invalid_argument("tree: node " + node_str(n) + " repeated");
        }
        if (seen != nodes) throw std::invalid_argument("tree: node set out of sync");
    }
    bool contains(const Node& n) const { return nodes.count(n) != 0; }

    static TreeT from_order(std::vector<Node> order) {
        TreeT t;
        t.order = std::move(order);
        t.nodes.insert(t.order.begin(), t.order.end());
        t.validate();
        return t;
    }
};

inline Node parse_node(const std::string& text, long line_no = 0) {
    if (text == "-") return {};
    Node n;
    std::istringstream is(text);
    std::string part;
    while (std::getline(is, part, '/')) {
        try {
            n.push_back(static_cast<unsigned>(std::stoul(part)));
        } catch (const std::exception&) {
            throw parse_error("tree: bad node component '" + part + "'", line_no);
        }
    }
    if (n.empty()) throw parse_error("tree: empty node spelling", line_no);
    return n;
}

inline TreeT parse_tree(std::istream& in) {
    std::vector<Node> order;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        order.push_back(parse_node(tok, line_no));
    }
    try {
        return TreeT::from_order(std::move(order));
    } catch (const std::invalid_argument& e) {
        throw parse_error(e.what());
    }
}

inline TreeT parse_tree(const std::string& text) {
    std::istringstream in(text);
    return parse_tree(in);
}

// ---------------------------------------------------------------------------
// Basis symbols of Q^omega restricted to a truncation window.
// ---------------------------------------------------------------------------

struct BasisSym {
    enum class Kind { x, y, xnode, z };
    Kind kind = Kind::z;
    unsigned s = 0;
    unsigned i = 0;  // x, y
    Node node;       // xnode

    static BasisSym X(unsigned s, unsigned i) { return {Kind::x, s, i, {}}; }
    static BasisSym Y(unsigned s, unsigned i) { return {Kind::y, s, i, {}}; }
    static BasisSym XNode(unsigned s, Node n) { return {Kind::xnode, s, 0, std::move(n)}; }
    static BasisSym Z() { return {}; }

    auto tie() const { return std::make_tuple(kind, s, i, node); }
    bool operator<(const BasisSym& o) const { return tie() < o.tie(); }
    bool operator==(const BasisSym& o) const { return tie() == o.tie(); }

    bool in_a_component() const { return kind != Kind::y; }

    std::string str() const {
        switch (kind) {
            case Kind::x: return "x[" + std::to_string(s) + "," + std::to_string(i) + "]";
            case Kind::y: return "y[" + std::to_string(s) + "," + std::to_string(i) + "]";
            case Kind::xnode: return "x[" + std::to_string(s) + ",(" + node_str(node) + ")]";
            default: return "z";
        }
    }
};

struct GroupElement {
    std::map<BasisSym, Rat> coeff;  // no explicit zeros

    static GroupElement basis(BasisSym sym) {
        GroupElement e;
        e.coeff[std::move(sym)] = 1;
        return e;
    }
    GroupElement& add(const BasisSym& sym, const Rat& c) {
        if (c == 0) return *this;
        auto [it, inserted] = coeff.emplace(sym, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) coeff.erase(it);
        }
        return *this;
    }
    GroupElement operator+(const GroupElement& o) const {
        GroupElement out = *this;
        for (const auto& [sym, c] : o.coeff) out.add(sym, c);
        return out;
    }
    GroupElement operator-(const GroupElement& o) const {
        GroupElement out = *this;
        for (const auto& [sym, c] : o.coeff) out.add(sym, -c);
        return out;
    }
    GroupElement operator*(const Rat& k) const {
        GroupElement out;
        if (k == 0) return out;
        for (const auto& [sym, c] : coeff) out.coeff[sym] = c * k;
        return out;
    }
    GroupElement operator/(const Int& d) const { return *this * Rat(1, d); }
    bool is_zero() const { return coeff.empty(); }
    bool operator==(const GroupElement&) const = default;

    std::string str() const {
        if (coeff.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [sym, c] : coeff) {
            if (!first) os << " + ";
            if (c != 1) os << "(" << c << ")";
            os << sym.str();
            first = false;
        }
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Prime families. P-family tags <c, payload> are flattened through one fixed
// pairing of the finite-tuple index space so allocation is reproducible.
// ---------------------------------------------------------------------------

inline unsigned long long cantor_pair(unsigned long long a, unsigned long long b) {
    return (a + b) * (a + b + 1) / 2 + b;
}

inline unsigned long long node_code(const Node& n) {
    unsigned long long code = 0;
    for (unsigned part : n) code = cantor_pair(code, part) + 1;
    return code;
}

struct FamilyTag {
    enum class Base { q, t, p, r };
    Base base = Base::p;
    unsigned long long index = 0;  // p: flattened tag; r: the copy index s
    std::string name;

    static FamilyTag Q() { return {Base::q, 0, "Q"}; }
    static FamilyTag T() { return {Base::t, 0, "t"}; }
    static FamilyTag R(unsigned s) { return {Base::r, s, "R" + std::to_string(s)}; }
    static FamilyTag P(unsigned code, unsigned long long payload, const std::string& detail) {
        return {Base::p, cantor_pair(code, payload), "P<" + std::to_string(code) + "," + detail + ">"};
    }

    static FamilyTag P_x(unsigned i) { return P(0, i, std::to_string(i)); }
    static FamilyTag P_y(unsigned i) { return P(1, i, std::to_string(i)); }
    static FamilyTag P_xnode(const Node& n) { return P(2, node_code(n), node_str(n)); }
    static FamilyTag P_xpair(unsigned i, unsigned j) {
        return P(3, cantor_pair(i, j), std::to_string(i) + "," + std::to_string(j));
    }
    static FamilyTag P_ypair(unsigned i, unsigned j) {
        return P(4, cantor_pair(i, j), std::to_string(i) + "," + std::to_string(j));
    }
    static FamilyTag P_xmix(unsigned i, const Node& n) {
        return P(5, cantor_pair(i, node_code(n)), std::to_string(i) + "," + node_str(n));
    }
    static FamilyTag P_nodepair(const Node& a, const Node& b) {
        return P(6, cantor_pair(node_code(a), node_code(b)), node_str(a) + "," + node_str(b));
    }
    static FamilyTag P_diag(unsigned i) { return P(8, i, std::to_string(i)); }

    auto tie() const { return std::make_tuple(base, index); }
    bool operator<(const FamilyTag& o) const { return tie() < o.tie(); }
    bool operator==(const FamilyTag& o) const { return tie() == o.tie(); }
};

/// Desk-scale window of the infinite construction.
struct Truncation {
    unsigned S_max = 1;   // copies s = 0..S_max-1
    unsigned I_max = 0;   // indices i = 0..I_max
    unsigned K_max = 1;   // divisibility exponent materialized for ^infinity
    unsigned W = 1;       // primes materialized per infinite family
    std::set<Node> nodes;

    void validate(const TreeT& tree) const {
        if (S_max == 0 || K_max == 0 || W == 0)
            throw std::invalid_argument("truncation: S_max, K_max, W must be positive");
        for (const Node& n : nodes) {
            if (!tree.contains(n))
                throw std::invalid_argument("truncation: node " + node_str(n) + " outside tree");
            if (!n.empty() && !nodes.count(parent_of(n)))
                throw std::invalid_argument("truncation: node set not prefix-closed at " +
                                            node_str(n));
        }
        if (!nodes.count(Node{}))
            throw std::invalid_argument("truncation: the root must be included");
    }
};

/// The P families a truncation actually touches, in flattened-index order.
inline std::vector<FamilyTag> needed_p_families(const Truncation& trunc) {
    std::set<FamilyTag> fams;
    std::vector<Node> nodes(trunc.nodes.begin(), trunc.nodes.end());
    for (unsigned i = 0; i <= trunc.I_max; ++i) {
        fams.insert(FamilyTag::P_x(i));
        fams.insert(FamilyTag::P_y(i));
        fams.insert(FamilyTag::P_diag(i));
        for (unsigned j = i + 1; j <= trunc.I_max; ++j) {
            fams.insert(FamilyTag::P_xpair(i, j));
            fams.insert(FamilyTag::P_ypair(i, j));
        }
        for (const Node& n : nodes) fams.insert(FamilyTag::P_xmix(i, n));
    }
    for (const Node& n : nodes) fams.insert(FamilyTag::P_xnode(n));
    for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = a + 1; b < nodes.size(); ++b)
            fams.insert(FamilyTag::P_nodepair(nodes[a], nodes[b]));
    return {fams.begin(), fams.end()};
}

struct PrimeAllocation {
    Int t = 2;
    unsigned W = 1;
    std::map<FamilyTag, std::vector<Int>> families;

    const std::vector<Int>& primes(const FamilyTag& tag) const {
        auto it = families.find(tag);
        if (it == families.end())
            throw std::out_of_range("PrimeAllocation: family " + tag.name + " not allocated");
        return it->second;
    }
    std::vector<Int> all_primes() const {
        std::vector<Int> out{t};
        for (const auto& [tag, ps] : families) out.insert(out.end(), ps.begin(), ps.end());
        return out;
    }
};

/// t = 2; ascending odd primes dealt round-robin over the roster
/// Q, P(0), R_0, P(1), R_1, ... (needed families only) until each has W members.
inline PrimeAllocation allocate_primes(const Truncation& trunc) {
    PrimeAllocation alloc;
    alloc.W = trunc.W;
    std::vector<FamilyTag> roster{FamilyTag::Q()};
    std::vector<FamilyTag> ps = needed_p_families(trunc);
    std::size_t np = ps.size(), nr = trunc.S_max;
    for (std::size_t k = 0; k < std::max(np, nr); ++k) {
        if (k < np) roster.push_back(ps[k]);
        if (k < nr) roster.push_back(FamilyTag::R(static_cast<unsigned>(k)));
    }
    const auto& primes = ntheory::small_primes_1e4();
    std::size_t next = 1;  // skip 2 = t
    for (unsigned w = 0; w < trunc.W; ++w) {
        for (const FamilyTag& tag : roster) {
            if (next >= primes.size())
                throw resource_error("allocate_primes: prime table exhausted");
            alloc.families[tag].push_back(primes[next++]);
        }
    }
    return alloc;
}

// ---------------------------------------------------------------------------
// Generator enumeration: construction items (1)-(9) restricted to the window.
// Items (1)-(2) materialize exponents 1..K_max standing in for ^infinity;
// items (3)-(6), (8), (9) are exponent-1 families; item (7) carries exponent
// n = |sigma| (capped at K_max). Item (7) at the root has exponent 0 and
// introduces nothing.
// ---------------------------------------------------------------------------

struct Generator {
    GroupElement elem;
    int item;  // 0 = basis vector, 1..9 = construction item
    std::string provenance;
};

struct GeneratorSet {
    std::vector<Generator> gens;
    std::vector<BasisSym> basis;  // coordinate order of the window
    Truncation trunc;
    PrimeAllocation alloc;
};

inline std::vector<BasisSym> window_basis(const Truncation& trunc) {
    std::vector<BasisSym> basis;
    for (unsigned s = 0; s < trunc.S_max; ++s)
        for (unsigned i = 0; i <= trunc.I_max; ++i) basis.push_back(BasisSym::X(s, i));
    for (unsigned s = 0; s < trunc.S_max; ++s)
        for (unsigned i = 0; i <= trunc.I_max; ++i) basis.push_back(BasisSym::Y(s, i));
    for (unsigned s = 0; s < trunc.S_max; ++s)
        for (const Node& n : trunc.nodes) basis.push_back(BasisSym::XNode(s, n));
    basis.push_back(BasisSym::Z());
    return basis;
}

inline GeneratorSet enumerate_generators(const TreeT& tree, const Truncation& trunc,
                                         const PrimeAllocation& alloc) {
    trunc.validate(tree);
    GeneratorSet out;
    out.trunc = trunc;
    out.alloc = alloc;
    out.basis = window_basis(trunc);

    auto emit = [&](GroupElement e, int item, std::string prov) {
        out.gens.push_back({std::move(e), item, std::move(prov)});
    };
    auto powi = [](const Int& p, unsigned k) {
        Int v = 1;
        for (unsigned t = 0; t < k; ++t) v *= p;
        return v;
    };
    auto over_family = [&](const GroupElement& e, const FamilyTag& tag, unsigned k, int item,
                           const std::string& what) {
        for (const Int& p : alloc.primes(tag)) {
            emit(e / powi(p, k), item,
                 "item" + std::to_string(item) + " (" + what + ")/" + p.str() +
                     (k > 1 ? "^" + std::to_string(k) : ""));
        }
    };

    for (const BasisSym& sym : out.basis) emit(GroupElement::basis(sym), 0, "basis " + sym.str());

    const auto& Q = FamilyTag::Q();
    // (1) x/Q^inf, y/Q^inf, xnode/Q^inf, z/Q^inf, z/t^inf
    for (const BasisSym& sym : out.basis)
        for (unsigned k = 1; k <= trunc.K_max; ++k)
            over_family(GroupElement::basis(sym), Q, k, 1, sym.str());
    for (unsigned k = 1; k <= trunc.K_max; ++k)
        emit(GroupElement::basis(BasisSym::Z()) / powi(alloc.t, k), 1,
             "item1 (z)/" + alloc.t.str() + (k > 1 ? "^" + std::to_string(k) : ""));

    // (2) per-symbol P families
    for (unsigned s = 0; s < trunc.S_max; ++s) {
        for (unsigned i = 0; i <= trunc.I_max; ++i) {
            for (unsigned k = 1; k <= trunc.K_max; ++k) {
                over_family(GroupElement::basis(BasisSym::X(s, i)), FamilyTag::P_x(i), k, 2,
                            BasisSym::X(s, i).str());
                over_family(GroupElement::basis(BasisSym::Y(s, i)), FamilyTag::P_y(i), k, 2,
                            BasisSym::Y(s, i).str());
            }
        }
        for (const Node& n : trunc.nodes)
            for (unsigned k = 1; k <= trunc.K_max; ++k)
                over_family(GroupElement::basis(BasisSym::XNode(s, n)), FamilyTag::P_xnode(n), k,
                            2, BasisSym::XNode(s, n).str());
    }

    // (3) linked index pairs, exponent 1
    for (unsigned s = 0; s < trunc.S_max; ++s)
        for (unsigned i = 0; i <= trunc.I_max; ++i)
            for (unsigned j = i + 1; j <= trunc.I_max; ++j) {
                GroupElement xx =
                    GroupElement::basis(BasisSym::X(s, i)) + GroupElement::basis(BasisSym::X(s, j));
                GroupElement yy =
                    GroupElement::basis(BasisSym::Y(s, i)) + GroupElement::basis(BasisSym::Y(s, j));
                over_family(xx, FamilyTag::P_xpair(i, j), 1, 3,
                            BasisSym::X(s, i).str() + "+" + BasisSym::X(s, j).str());
                over_family(yy, FamilyTag::P_ypair(i, j), 1, 3,
                            BasisSym::Y(s, i).str() + "+" + BasisSym::Y(s, j).str());
            }

    // (4) index-node and node-node pairs, exponent 1
    std::vector<Node> nodes(trunc.nodes.begin(), trunc.nodes.end());
    for (unsigned s = 0; s < trunc.S_max; ++s) {
        for (unsigned i = 0; i <= trunc.I_max; ++i)
            for (const Node& n : nodes) {
                GroupElement e = GroupElement::basis(BasisSym::X(s, i)) +
                                 GroupElement::basis(BasisSym::XNode(s, n));
                over_family(e, FamilyTag::P_xmix(i, n), 1, 4,
                            BasisSym::X(s, i).str() + "+" + BasisSym::XNode(s, n).str());
            }
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                GroupElement e = GroupElement::basis(BasisSym::XNode(s, nodes[a])) +
                                 GroupElement::basis(BasisSym::XNode(s, nodes[b]));
                over_family(e, FamilyTag::P_nodepair(nodes[a], nodes[b]), 1, 4,
                            BasisSym::XNode(s, nodes[a]).str() + "+" +
                                BasisSym::XNode(s, nodes[b]).str());
            }
    }

    // (5) x_i + y_i over the diagonal families
    for (unsigned s = 0; s < trunc.S_max; ++s)
        for (unsigned i = 0; i <= trunc.I_max; ++i) {
            GroupElement e =
                GroupElement::basis(BasisSym::X(s, i)) + GroupElement::basis(BasisSym::Y(s, i));
            over_family(e, FamilyTag::P_diag(i), 1, 5,
                        BasisSym::X(s, i).str() + "+" + BasisSym::Y(s, i).str());
        }

    // (6) the gluing: (z + x_0^s)/R_s
    for (unsigned s = 0; s < trunc.S_max; ++s) {
        GroupElement e =
            GroupElement::basis(BasisSym::Z()) + GroupElement::basis(BasisSym::X(s, 0));
        over_family(e, FamilyTag::R(s), 1, 6, "z+" + BasisSym::X(s, 0).str());
    }

    // (7)-(9) per enumerated node, in enumeration order
    for (const Node& sigma : tree.order) {
        if (!trunc.nodes.count(sigma)) continue;
        unsigned n = static_cast<unsigned>(sigma.size());
        for (unsigned s = 0; s < trunc.S_max; ++s) {
            if (n >= 1) {
                unsigned e7 = std::min(n, trunc.K_max);
                for (unsigned i = 0; i <= std::min(n, trunc.I_max); ++i) {
                    Node prefix(sigma.begin(), sigma.begin() + i);
                    GroupElement sum = GroupElement::basis(BasisSym::Y(s, i)) +
                                       GroupElement::basis(BasisSym::XNode(s, prefix));
                    over_family(sum, FamilyTag::P_y(i), e7, 7,
                                BasisSym::Y(s, i).str() + "+" +
                                    BasisSym::XNode(s, prefix).str() + " at " + node_str(sigma));
                    over_family(GroupElement::basis(BasisSym::XNode(s, prefix)), FamilyTag::P_y(i),
                                e7, 7,
                                BasisSym::XNode(s, prefix).str() + " at " + node_str(sigma));
                }
            }
            if (n >= 1 && n <= trunc.I_max) {
                for (unsigned i = 0; i < n; ++i) {
                    Node prefix(sigma.begin(), sigma.begin() + i);
                    GroupElement pair_sum = GroupElement::basis(BasisSym::Y(s, i)) +
                                            GroupElement::basis(BasisSym::XNode(s, prefix)) +
                                            GroupElement::basis(BasisSym::Y(s, n)) +
                                            GroupElement::basis(BasisSym::XNode(s, sigma));
                    over_family(pair_sum, FamilyTag::P_ypair(i, n), 1, 8,
                                "(y+x)[" + std::to_string(i) + "]+(y+x)[" + std::to_string(n) +
                                    "] at " + node_str(sigma));
                    GroupElement xpair = GroupElement::basis(BasisSym::XNode(s, prefix)) +
                                         GroupElement::basis(BasisSym::XNode(s, sigma));
                    over_family(xpair, FamilyTag::P_ypair(i, n), 1, 8,
                                BasisSym::XNode(s, prefix).str() + "+" +
                                    BasisSym::XNode(s, sigma).str() + " at " + node_str(sigma));
                }
            }
            if (n <= trunc.I_max) {
                GroupElement ya = GroupElement::basis(BasisSym::Y(s, n)) +
                                  GroupElement::basis(BasisSym::XNode(s, sigma));
                over_family(ya, FamilyTag::P_diag(n), 1, 9,
                            BasisSym::Y(s, n).str() + "+" + BasisSym::XNode(s, sigma).str() +
                                " at " + node_str(sigma));
                GroupElement xd = GroupElement::basis(BasisSym::X(s, n)) -
                                  GroupElement::basis(BasisSym::XNode(s, sigma));
                over_family(xd, FamilyTag::P_diag(n), 1, 9,
                            BasisSym::X(s, n).str() + "-" + BasisSym::XNode(s, sigma).str() +
                                " at " + node_str(sigma));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact membership over the window lattice.
// ---------------------------------------------------------------------------

class TreeLattice {
public:
    explicit TreeLattice(const GeneratorSet& gens) : gens_(&gens) {
        for (std::size_t k = 0; k < gens.basis.size(); ++k) index_[gens.basis[k]] = k;
        std::vector<std::vector<Rat>> rows;
        for (const auto& g : gens.gens) rows.push_back(to_row(g.elem));
        lat_ = lattice::RationalLattice::from_rows(std::move(rows), gens.basis.size());
    }

    std::vector<Rat> to_row(const GroupElement& e) const {
        std::vector<Rat> row(index_.size(), Rat(0));
        for (const auto& [sym, c] : e.coeff) {
            auto it = index_.find(sym);
            if (it == index_.end())
                throw std::invalid_argument("TreeLattice: symbol " + sym.str() +
                                            " outside the truncation window");
            row[it->second] = c;
        }
        return row;
    }

    struct MemberResult {
        bool member = false;
        std::vector<Int> coeffs;
    };

    MemberResult member(const GroupElement& e) const {
        auto res = lat_.member(to_row(e));
        return {res.member, std::move(res.coeffs)};
    }

    /// Membership without the certificate (fast path for bulk scans).
    bool contains(const GroupElement& e) const { return lat_.contains(to_row(e)); }

    const lattice::RationalLattice& rational_lattice() const { return lat_; }
    const GeneratorSet& generators() const { return *gens_; }
    std::size_t dim() const { return index_.size(); }

private:
    const GeneratorSet* gens_;
    std::map<BasisSym, std::size_t> index_;
    lattice::RationalLattice lat_;
};

inline bool member(const GroupElement& e, const GeneratorSet& gens) {
    return TreeLattice(gens).member(e).member;
}

/// Largest k <= k_cap with v / p^k in the window lattice.
inline unsigned divisibility_height(const GroupElement& v, const Int& p, const TreeLattice& lat,
                                    unsigned k_cap) {
    unsigned height = 0;
    GroupElement scaled = v;
    for (unsigned k = 1; k <= k_cap; ++k) {
        scaled = scaled / p;
        if (!lat.contains(scaled)) break;
        height = k;
    }
    return height;
}

inline unsigned divisibility_height(const GroupElement& v, const Int& p, const GeneratorSet& gens,
                                    unsigned k_cap) {
    return divisibility_height(v, p, TreeLattice(gens), k_cap);
}

// ---------------------------------------------------------------------------
// Decomposition verification: H_T = A + sum_s B^s_pi at the window, with the
// B-parts read off the y-coordinates and every part checked for membership by
// exact lattice arithmetic, plus HNF-based independence of the components.
// ---------------------------------------------------------------------------

struct DecompositionReport {
    struct PerGenerator {
        std::string provenance;
        std::string family;  // identity family that justifies the split
        bool ok = false;
        std::string note;
    };
    std::vector<PerGenerator> rows;
    std::size_t decomposed = 0;
    std::size_t failed = 0;
    std::size_t rank_a = 0, expected_rank_a = 0;
    std::vector<std::size_t> rank_b, expected_rank_b;
    bool pairwise_trivial = false;
    bool full_rank = false;

    bool all_ok() const {
        return failed == 0 && pairwise_trivial && full_rank && rank_a == expected_rank_a &&
               rank_b == expected_rank_b;
    }
    std::string render() const {
        std::ostringstream os;
        os << "decomposition report\n";
        os << "generators decomposed: " << decomposed << "/" << decomposed + failed << "\n";
        for (const auto& r : rows)
            if (!r.ok) os << "  FAIL " << r.provenance << ": " << r.note << "\n";
        os << "rank A: " << rank_a << " (expected " << expected_rank_a << ")\n";
        for (std::size_t s = 0; s < rank_b.size(); ++s)
            os << "rank B^" << s << ": " << rank_b[s] << " (expected " << expected_rank_b[s]
               << ")\n";
        os << "pairwise intersections trivial: " << (pairwise_trivial ? "yes" : "NO") << "\n";
        os << "components span the window: " << (full_rank ? "yes" : "NO") << "\n";
        os << "verdict: " << (all_ok() ? "pass" : "FAIL") << "\n";
        return os.str();
    }
};

namespace detail {

// Sublattice of `rows` (integer, scaled coords) that lies in the kernel of the
// rational constraint matrix applied per row.
inline lattice::Matrix constrained_sublattice(const lattice::Matrix& rows,
                                              const std::vector<std::vector<Rat>>& row_images) {
    if (rows.empty()) return {};
    std::size_t width = row_images.empty() ? 0 : row_images[0].size();
    // clear denominators per column of the image matrix
    std::vector<Int> scale(width, Int(1));
    for (const auto& img : row_images)
        for (std::size_t j = 0; j < width; ++j) scale[j] = lcm(scale[j], Int(denominator(img[j])));
    lattice::Matrix T(row_images.size(), lattice::Row(width));
    for (std::size_t r = 0; r < row_images.size(); ++r)
        for (std::size_t j = 0; j < width; ++j)
            T[r][j] = Int(numerator(row_images[r][j])) * (scale[j] / Int(denominator(row_images[r][j])));
    lattice::Matrix kernel = lattice::left_kernel(T);
    lattice::Matrix out;
    for (const auto& c : kernel) {
        lattice::Row v(rows[0].size(), 0);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t j = 0; j < v.size(); ++j) v[j] += c[r] * rows[r][j];
        out.push_back(std::move(v));
    }
    auto h = lattice::hermite_normal_form(std::move(out));
    h.H.resize(h.rank);
    return h.H;
}

}  // namespace detail

inline DecompositionReport verify_decomposition(const TreeT& tree, const Node& pi_leaf,
                                                const Truncation& trunc,
                                                const PrimeAllocation& alloc) {
    trunc.validate(tree);
    if (!trunc.nodes.count(pi_leaf))
        throw std::invalid_argument("verify_decomposition: path leaf " + node_str(pi_leaf) +
                                    " outside the truncation");
    GeneratorSet gens = enumerate_generators(tree, trunc, alloc);
    TreeLattice lat(gens);

    auto pi_prefix = [&](unsigned i) {
        return Node(pi_leaf.begin(), pi_leaf.begin() + i);
    };
    const unsigned pi_len = static_cast<unsigned>(pi_leaf.size());

    DecompositionReport report;
    for (const auto& g : gens.gens) {
        DecompositionReport::PerGenerator row;
        row.provenance = g.provenance;
        // split off the B^s parts: each collects the y^s coordinates against
        // the path basis w_i = y_i^s + x_{pi|i}^s
        std::map<unsigned, GroupElement> b_parts;
        bool applicable = true;
        for (const auto& [sym, c] : g.elem.coeff) {
            if (sym.kind != BasisSym::Kind::y) continue;
            if (sym.i > pi_len) {
                row.note = "path too short for index " + std::to_string(sym.i);
                applicable = false;
                break;
            }
            GroupElement w = GroupElement::basis(sym) +
                             GroupElement::basis(BasisSym::XNode(sym.s, pi_prefix(sym.i)));
            auto [it, inserted] = b_parts.emplace(sym.s, w * c);
            if (!inserted) it->second = it->second + w * c;
        }
        if (!applicable) {
            report.rows.push_back(std::move(row));
            ++report.failed;
            continue;
        }
        GroupElement a_part = g.elem;
        for (const auto& [s, b] : b_parts) a_part = a_part - b;
        for (const auto& [sym, c] : a_part.coeff)
            if (!sym.in_a_component()) throw std::logic_error("decomposition left a y residue");

        // identity family to report
        if (b_parts.empty())
            row.family = "A-direct";
        else if (a_part.is_zero())
            row.family = "B-direct";
        else if (g.item == 1)
            row.family = "q-split";
        else if (g.item == 2 || g.item == 7)
            row.family = "p-split";
        else if (g.item == 3 || g.item == 8)
            row.family = "pair-split";
        else
            row.family = "diagonal-split";

        row.ok = true;
        if (!a_part.is_zero() && !lat.contains(a_part)) {
            row.ok = false;
            row.note = "A-part " + a_part.str() + " outside the lattice";
        }
        for (const auto& [s, b] : b_parts) {
            if (!row.ok) break;
            if (!b.is_zero() && !lat.contains(b)) {
                row.ok = false;
                row.note = "B^" + std::to_string(s) + "-part " + b.str() + " outside the lattice";
            }
        }
        if (row.ok)
            ++report.decomposed;
        else
            ++report.failed;
        report.rows.push_back(std::move(row));
    }

    // Independence of the component window lattices.
    const auto& hnf = lat.rational_lattice().hnf();
    lattice::Matrix basis_rows(hnf.H.begin(), hnf.H.begin() + hnf.rank);
    const auto& basis = gens.basis;
    const auto& scales = lat.rational_lattice().column_scales();
    auto unscaled = [&](const lattice::Row& r) {
        std::vector<Rat> out(r.size());
        for (std::size_t j = 0; j < r.size(); ++j) out[j] = Rat(r[j], scales[j]);
        return out;
    };

    // A = elements supported on x, xnode, z: constraint "y coordinates vanish"
    std::vector<std::vector<Rat>> a_images;
    for (const auto& r : basis_rows) {
        auto v = unscaled(r);
        std::vector<Rat> img;
        for (std::size_t j = 0; j < basis.size(); ++j)
            if (basis[j].kind == BasisSym::Kind::y) img.push_back(v[j]);
        a_images.push_back(std::move(img));
    }
    lattice::Matrix a_window = detail::constrained_sublattice(basis_rows, a_images);
    report.rank_a = a_window.size();
    report.expected_rank_a = basis.size() - static_cast<std::size_t>(trunc.S_max) * (trunc.I_max + 1);

    // B^s = elements in span{ y_i^s + x_{pi|i}^s : i <= I_max }: the residual
    // after subtracting the y-read-off must vanish
    std::vector<lattice::Matrix> b_windows;
    if (pi_len < trunc.I_max)
        throw std::invalid_argument("verify_decomposition: path shorter than I_max");
    for (unsigned s = 0; s < trunc.S_max; ++s) {
        std::vector<std::vector<Rat>> images;
        for (const auto& r : basis_rows) {
            auto v = unscaled(r);
            GroupElement e;
            for (std::size_t j = 0; j < basis.size(); ++j) e.add(basis[j], v[j]);
            GroupElement resid = e;
            for (unsigned i = 0; i <= trunc.I_max; ++i) {
                BasisSym ys = BasisSym::Y(s, i);
                auto it = e.coeff.find(ys);
                if (it == e.coeff.end()) continue;
                GroupElement w = GroupElement::basis(ys) +
                                 GroupElement::basis(BasisSym::XNode(s, pi_prefix(i)));
                resid = resid - w * it->second;
            }
            images.push_back(lat.to_row(resid));
        }
        b_windows.push_back(detail::constrained_sublattice(basis_rows, images));
        report.rank_b.push_back(b_windows.back().size());
        report.expected_rank_b.push_back(trunc.I_max + 1);
    }

    report.pairwise_trivial = true;
    for (unsigned s = 0; s < trunc.S_max && report.pairwise_trivial; ++s) {
        if (!lattice::lattice_intersection(a_window, b_windows[s]).empty())
            report.pairwise_trivial = false;
        for (unsigned s2 = s + 1; s2 < trunc.S_max && report.pairwise_trivial; ++s2)
            if (!lattice::lattice_intersection(b_windows[s], b_windows[s2]).empty())
                report.pairwise_trivial = false;
    }

    lattice::Matrix concat = a_window;
    for (const auto& bw : b_windows) concat.insert(concat.end(), bw.begin(), bw.end());
    auto concat_hnf = lattice::hermite_normal_form(concat);
    std::size_t expected_total = report.expected_rank_a;
    for (std::size_t rb : report.expected_rank_b) expected_total += rb;
    report.full_rank = concat_hnf.rank == expected_total && expected_total == basis.size();

    return report;
}

// ---------------------------------------------------------------------------
// Divisibility profiles: the probe returns every small window combination
// (support <= 2, coefficients in [-coeff_bound, coeff_bound]) divisible to the
// requested level by every materialized prime of the family.
// ---------------------------------------------------------------------------

inline std::vector<GroupElement> pure_component_probe(const std::vector<Int>& family,
                                                      const TreeLattice& lat,
                                                      long long coeff_bound, unsigned level) {
    if (family.empty()) throw std::invalid_argument("pure_component_probe: empty family");
    const auto& basis = lat.generators().basis;
    std::vector<GroupElement> hits;
    auto fully_divisible = [&](const GroupElement& v) {
        for (const Int& p : family)
            if (divisibility_height(v, p, lat, level) < level) return false;
        return true;
    };
    for (std::size_t a = 0; a < basis.size(); ++a) {
        for (long long ca = -coeff_bound; ca <= coeff_bound; ++ca) {
            if (ca == 0) continue;
            GroupElement va;
            va.add(basis[a], Rat(ca));
            if (fully_divisible(va)) hits.push_back(va);
            for (std::size_t b = a + 1; b < basis.size(); ++b)
                for (long long cb = -coeff_bound; cb <= coeff_bound; ++cb) {
                    if (cb == 0) continue;
                    GroupElement v = va;
                    v.add(basis[b], Rat(cb));
                    if (fully_divisible(v)) hits.push_back(v);
                }
        }
    }
    return hits;
}

inline std::vector<GroupElement> pure_component_probe(const std::vector<Int>& family,
                                                      const GeneratorSet& gens,
                                                      long long coeff_bound, unsigned level) {
    TreeLattice lat(gens);
    return pure_component_probe(family, lat, coeff_bound, level);
}

}  // namespace qgroups::treegroup
