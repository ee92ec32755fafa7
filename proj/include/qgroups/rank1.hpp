#pragma once

#include "qgroups/ntheory.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace qgroups::rank1 {

/// A natural number or infinity; the exponent of p available as 1/p^m.
struct ExtendedHeight {
    bool infinite = false;
    unsigned value = 0;

    static ExtendedHeight inf() { return {true, 0}; }
    static ExtendedHeight fin(unsigned k) { return {false, k}; }
    bool is_zero() const { return !infinite && value == 0; }
    bool operator==(const ExtendedHeight&) const = default;
    bool leq(const ExtendedHeight& other) const {
        if (other.infinite) return true;
        if (infinite) return false;
        return value <= other.value;
    }
    std::string str() const { return infinite ? "inf" : std::to_string(value); }
};

/// A subgroup of Q containing 1: { c/d : p^k | d implies k <= height(p) }.
/// Only finitely many primes carry nonzero height; unlisted primes have
/// height 0. This stores the literal representative, not an isomorphism
/// class -- inputs are expected to be normalized so that 1 has the maximal
/// height profile.
struct Rank1Group {
    std::map<Int, ExtendedHeight> heights;  // nonzero entries only
    std::string label;

    void set_height(const Int& p, ExtendedHeight h) {
        if (!ntheory::is_prime(p))
            throw std::invalid_argument("Rank1Group: " + p.str() + " is not prime");
        if (h.is_zero())
            heights.erase(p);
        else
            heights[p] = h;
    }
    ExtendedHeight height(const Int& p) const {
        auto it = heights.find(p);
        return it == heights.end() ? ExtendedHeight{} : it->second;
    }
    bool operator==(const Rank1Group&) const = default;
};

/// Membership of x (automatically in lowest terms): every prime power p^k
/// dividing the denominator must satisfy k <= height(p). No factoring needed;
/// strip the listed primes and require the rest of the denominator trivial.
inline bool contains(const Rank1Group& g, const Rat& x) {
    Int den = Int(denominator(x));
    if (den == 1) return true;
    for (const auto& [p, h] : g.heights) {
        unsigned k = 0;
        while (den % p == 0) {
            den /= p;
            ++k;
            if (!h.infinite && k > h.value) return false;
        }
    }
    return den == 1;
}

/// Primes inverted by the endomorphism ring: those of infinite height.
inline std::set<Int> inverted_primes(const Rank1Group& g) {
    std::set<Int> out;
    for (const auto& [p, h] : g.heights)
        if (h.infinite) out.insert(p);
    return out;
}

inline bool is_trivially_Z(const Rank1Group& g) { return g.heights.empty(); }

// --- group description file: (prime, height|"inf") pairs, order-insensitive --

inline Rank1Group parse_group(std::istream& in) {
    Rank1Group g;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "label") {
            std::getline(ls >> std::ws, g.label);
            continue;
        }
        Int p;
        try {
            p = Int(first);
        } catch (const std::exception&) {
            throw parse_error("group file: bad prime '" + first + "'", line_no);
        }
        std::string h;
        if (!(ls >> h)) throw parse_error("group file: missing height", line_no);
        try {
            if (h == "inf")
                g.set_height(p, ExtendedHeight::inf());
            else
                g.set_height(p, ExtendedHeight::fin(static_cast<unsigned>(std::stoul(h))));
        } catch (const std::invalid_argument& e) {
            throw parse_error(std::string("group file: ") + e.what(), line_no);
        }
        std::string extra;
        if (ls >> extra) throw parse_error("group file: trailing tokens", line_no);
    }
    return g;
}

inline Rank1Group parse_group(const std::string& text) {
    std::istringstream in(text);
    return parse_group(in);
}

inline void write_group(const Rank1Group& g, std::ostream& out) {
    if (!g.label.empty()) out << "label " << g.label << "\n";
    for (const auto& [p, h] : g.heights) out << p << " " << h.str() << "\n";
}

}  // namespace qgroups::rank1
