#include <catch2/catch_amalgamated.hpp>

#include "qgroups/ntheory.hpp"

#include <random>
#include <set>

using namespace qgroups;
using namespace qgroups::ntheory;

namespace {

// Independent oracle: the set of nonzero squares mod q by enumeration.
std::set<long> squares_mod(long q) {
    std::set<long> s;
    for (long x = 1; x < q; ++x) s.insert(x * x % q);
    return s;
}

}  // namespace

TEST_CASE("primality basics", "[ntheory]") {
    CHECK(is_prime(Int(2)));
    CHECK(is_prime(Int(61)));
    CHECK(is_prime(Int(977)));
    CHECK_FALSE(is_prime(Int(1)));
    CHECK_FALSE(is_prime(Int(561)));   // Carmichael
    CHECK_FALSE(is_prime(Int(62745))); // Carmichael
    CHECK(is_prime(Int("170141183460469231731687303715884105727")));  // 2^127 - 1
    CHECK_FALSE(is_prime(Int("170141183460469231731687303715884105725")));
    // cross-check against the sieve below 10^4
    auto primes = small_primes_1e4();
    std::set<std::uint32_t> sieve(primes.begin(), primes.end());
    for (long n = 2; n < 10000; ++n) CHECK(is_prime(Int(n)) == (sieve.count(n) != 0));
}

TEST_CASE("quadratic residue examples", "[ntheory]") {
    CHECK(is_quadratic_residue(1, 7));
    CHECK(is_quadratic_residue(2, 7));
    CHECK_FALSE(is_quadratic_residue(3, 7));
    CHECK_THROWS_AS(is_quadratic_residue(3, 15), std::invalid_argument);
    CHECK_THROWS_AS(is_quadratic_residue(3, 2), std::invalid_argument);
    CHECK_THROWS_AS(is_quadratic_residue(14, 7), std::invalid_argument);
}

TEST_CASE("Euler criterion matches square enumeration", "[ntheory]") {
    for (std::uint32_t q : small_primes_1e4()) {
        if (q > 100) break;
        if (q == 2) continue;
        auto sq = squares_mod(q);
        for (long a = 1; a < static_cast<long>(q); ++a)
            CHECK(is_quadratic_residue(Int(a), Int(q)) == (sq.count(a) != 0));
    }
}

TEST_CASE("exactly half the units are residues", "[ntheory]") {
    for (std::uint32_t q : small_primes_1e4()) {
        if (q > 200) break;
        if (q == 2) continue;
        CHECK(squares_mod(q).size() == (q - 1) / 2);
    }
}

TEST_CASE("reciprocity examples", "[ntheory]") {
    // both 1 mod 4: statuses equal
    CHECK(is_quadratic_residue(13, 17) == is_quadratic_residue(17, 13));
    CHECK(reciprocity_check(13, 17));
    // both 3 mod 4: statuses differ
    CHECK(is_quadratic_residue(3, 7) != is_quadratic_residue(7, 3));
    CHECK(reciprocity_check(3, 7));
    CHECK_THROWS_AS(reciprocity_check(5, 5), std::invalid_argument);
    CHECK_THROWS_AS(reciprocity_check(2, 7), std::invalid_argument);
}

TEST_CASE("reciprocity law holds for all small odd prime pairs", "[ntheory]") {
    for (std::uint32_t p : small_primes_1e4()) {
        if (p > 60) break;
        if (p == 2) continue;
        for (std::uint32_t q : small_primes_1e4()) {
            if (q > 60) break;
            if (q == 2 || q == p) continue;
            CHECK(reciprocity_check(Int(p), Int(q)));
        }
    }
}

TEST_CASE("a non-residue is never a product of residues", "[ntheory]") {
    std::mt19937_64 rng(20240811);
    for (std::uint32_t q : small_primes_1e4()) {
        if (q > 200) break;
        if (q <= 3) continue;
        auto sq = squares_mod(q);
        std::vector<long> residues(sq.begin(), sq.end());
        std::uniform_int_distribution<std::size_t> pick(0, residues.size() - 1);
        for (int trial = 0; trial < 20; ++trial) {
            long prod = 1;
            for (int k = 0; k < 4; ++k) prod = prod * residues[pick(rng)] % q;
            CHECK(sq.count(prod) != 0);
        }
    }
}

TEST_CASE("dirichlet search examples", "[ntheory]") {
    CHECK(dirichlet_search(1, 12, 0) == 13);
    CHECK(dirichlet_search(1, 4, 13) == 17);
    CHECK_THROWS_AS(dirichlet_search(2, 4, 0), std::invalid_argument);
    SearchLimits tight;
    tight.max_candidates = 2;
    CHECK_THROWS_AS(dirichlet_search(1, 1000003, 0, tight), resource_error);
}

TEST_CASE("dirichlet search returns the minimal qualifying prime", "[ntheory]") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> dmod(2, 120), dres(0, 200), dlow(0, 400);
    for (int trial = 0; trial < 200; ++trial) {
        long d = dmod(rng), a = dres(rng), low = dlow(rng);
        if (std::gcd(a % d == 0 ? d : a % d, d) != 1) continue;
        Int p = dirichlet_search(a, d, low);
        CHECK(is_prime(p));
        CHECK(mod_floor(p, d) == mod_floor(Int(a), d));
        CHECK(p > low);
        for (Int c = low + 1; c < p; ++c)
            if (mod_floor(c, d) == mod_floor(Int(a), d)) CHECK_FALSE(is_prime(c));
    }
}

TEST_CASE("crt examples", "[ntheory]") {
    Congruence combined = crt_combine({{1, 13}, {2, 3}});
    CHECK(combined.residue == 14);
    CHECK(combined.modulus == 39);
    CHECK(mod_floor(combined.residue, 13) == 1);
    CHECK(mod_floor(combined.residue, 3) == 2);

    Congruence single = crt_combine({{0, 5}});
    CHECK(single == Congruence(0, 5));

    CHECK_THROWS_AS(crt_combine({{1, 4}, {1, 6}}), std::invalid_argument);
}

TEST_CASE("unit group generator examples", "[ntheory]") {
    CHECK(unit_group_generators(3) == std::vector<Int>{2});
    CHECK(unit_group_generators(8) == std::vector<Int>{3, 5});
    CHECK(unit_group_generators(2) == std::vector<Int>{});
}

TEST_CASE("subgroup closure examples", "[ntheory]") {
    CHECK(subgroup_generated(7, {2}) == std::set<Int>{1, 2, 4});
    CHECK(subgroup_generated(7, {3}) == std::set<Int>{1, 2, 3, 4, 5, 6});
    CHECK(subgroup_generated(5, {}) == std::set<Int>{1});
    CHECK_THROWS_AS(subgroup_generated(6, {3}), std::invalid_argument);
}

TEST_CASE("greedy generators generate the whole unit group", "[ntheory]") {
    for (long n = 2; n <= 300; ++n) {
        auto gens = unit_group_generators(n);
        auto closure = subgroup_generated(n, gens);
        CHECK(static_cast<Int>(closure.size()) == euler_phi_enumerated(n));
    }
}
