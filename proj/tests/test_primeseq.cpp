#include <catch2/catch_amalgamated.hpp>

#include "qgroups/primeseq.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace qgroups;
using namespace qgroups::primeseq;

namespace {

std::filesystem::path temp_file(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove(p);
    return p;
}

std::string with_fixed_checksum(std::string body) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
    return body + "checksum " + buf + "\n";
}

}  // namespace

TEST_CASE("r enumeration", "[primeseq]") {
    CHECK(r_enumeration(1) == 2);
    CHECK(r_enumeration(2) == 3);
    CHECK(r_enumeration(3) == 2);
    CHECK(r_enumeration(4) == 5);
    CHECK(r_enumeration(6) == 3);
    CHECK(r_enumeration(12) == 5);
    CHECK_THROWS_AS(r_enumeration(0), std::invalid_argument);
    // every prime recurs: the (a+1)-th prime shows up at all i = 2^a (2b+1)
    for (unsigned a = 0; a < 4; ++a)
        for (unsigned b = 0; b < 4; ++b)
            CHECK(r_enumeration((1ull << a) * (2 * b + 1)) ==
                  ntheory::small_primes_1e4()[a]);
}

TEST_CASE("stage 0 pinned values", "[primeseq]") {
    PrimeSequence seq = build_sequence(0);
    CHECK(seq.a[0] == 3);
    REQUIRE(seq.p_set(0, 0).size() == 1);
    CHECK(seq.p_set(0, 0)[0].prime == 5);
    CHECK(seq.p_set(0, 0)[0].target_generator == 2);
}

TEST_CASE("stage 1 pinned values", "[primeseq]") {
    PrimeSequence seq = build_sequence(1);
    CHECK(seq.q[1].prime == 61);
    CHECK(seq.r[1] == 2);
    CHECK(seq.a[1] == 366);
    CHECK(seq.q[1].prov.modulus == 60);
    // derived by hand from the placement policy:
    // P_{0,1}: p = 1 (mod 61), p = 2 (mod 3), minimal above 61 -> 977
    CHECK(seq.p_primes(0, 1) == std::vector<Int>{977});
    // P_{1,0}: greedy generators of (Z/366)^x are {5, 7}; minimal primes in
    // those classes above everything placed: 1103, then 1471
    CHECK(seq.p_primes(1, 0) == std::vector<Int>{1103, 1471});
}

TEST_CASE("construction is deterministic and prefix-stable", "[primeseq]") {
    PrimeSequence one = build_sequence(1);
    PrimeSequence again = build_sequence(1);
    CHECK(one == again);

    PrimeSequence two = build_sequence(2);
    for (unsigned i = 0; i <= 1; ++i) CHECK(two.a[i] == one.a[i]);
    CHECK(two.q[1] == one.q[1]);
    CHECK(two.r[1] == one.r[1]);
    for (const auto& [key, entries] : one.P) CHECK(two.P.at(key) == entries);

    // extending in place gives the same result as building from scratch
    PrimeSequence grown = one;
    extend_sequence(grown, 2);
    CHECK(grown == two);
}

TEST_CASE("invariants hold for build_sequence(2)", "[primeseq]") {
    PrimeSequence seq = build_sequence(2);
    InvariantReport report = verify_invariants(seq, true);
    CAPTURE(report.render());
    CHECK(report.all_pass());
    CHECK(report.clauses.size() == 6);
}

TEST_CASE("tampered sequences fail the named clause", "[primeseq]") {
    PrimeSequence seq = build_sequence(2);

    SECTION("emptied P set fails clause 1") {
        seq.P[{0, 0}].clear();
        auto report = verify_invariants(seq);
        CHECK_FALSE(report.clauses[0].pass);
    }
    SECTION("q_1 replaced by 3 fails clause 4") {
        seq.q[1].prime = 3;
        auto report = verify_invariants(seq);
        CHECK_FALSE(report.clauses[3].pass);
    }
    SECTION("planting a q into a P set fails clause 5") {
        seq.P[{0, 1}].push_back({seq.q[1].prime, 2, {}});
        auto report = verify_invariants(seq);
        CHECK_FALSE(report.clauses[4].pass);
    }
    SECTION("duplicated prime across P sets fails clause 5") {
        seq.P[{0, 1}].push_back({5, 2, {}});
        auto report = verify_invariants(seq);
        CHECK_FALSE(report.clauses[4].pass);
    }
    SECTION("non-minimal provenance fails the audit clause") {
        // pretend the P_{0,0} scan started above the real prime
        seq.P[{0, 0}][0].prime = 11;  // 11 = 2 (mod 3) but 5 comes first
        seq.P[{0, 0}][0].prov.candidates = 3;
        auto report = verify_invariants(seq, true);
        CHECK_FALSE(report.clauses[5].pass);
    }
}

TEST_CASE("cache round trip", "[primeseq]") {
    PrimeSequence seq = build_sequence(2);
    auto path = temp_file("qgroups_seq_cache_test.txt");
    cache_save(seq, path);
    PrimeSequence loaded = cache_load(path);
    CHECK(loaded == seq);
    std::filesystem::remove(path);
}

TEST_CASE("cache refuses corruption", "[primeseq]") {
    PrimeSequence seq = build_sequence(1);
    std::string text = serialize(seq);

    SECTION("truncation is a checksum error") {
        std::string truncated = text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(deserialize(truncated), parse_error);
    }
    SECTION("bit flip is a checksum error") {
        std::string flipped = text;
        flipped[text.find("366")] = '7';
        CHECK_THROWS_AS(deserialize(flipped), parse_error);
    }
    SECTION("edited a value with fixed checksum fails invariants on load") {
        std::string body = text.substr(0, text.rfind("checksum "));
        auto pos = body.find("a 1 366");
        REQUIRE(pos != std::string::npos);
        body.replace(pos, 7, "a 1 732");
        auto path = temp_file("qgroups_seq_cache_tampered.txt");
        std::ofstream(path) << with_fixed_checksum(body);
        CHECK_THROWS_WITH(cache_load(path), Catch::Matchers::ContainsSubstring("clause 3"));
        std::filesystem::remove(path);
    }
}

TEST_CASE("every small prime power eventually divides some a_i", "[primeseq]") {
    PrimeSequence seq = build_sequence(2);
    CHECK(needed_stage_for_divisor(seq, 3) == 0);
    CHECK(needed_stage_for_divisor(seq, 2) == 1);
    CHECK(seq.a[1] % 2 == 0);
    CHECK(needed_stage_for_divisor(seq, 9) == 2);  // r_2 = 3
    CHECK(seq.a[2] % 9 == 0);
    CHECK(needed_stage_for_divisor(seq, 4) == 3);  // r_3 = 2
    CHECK(needed_stage_for_divisor(seq, 5) == 4);  // r_4 = 5
    CHECK(needed_stage_for_divisor(seq, 7) == 8);  // 7 first appears as r_8
}

TEST_CASE("stage 3 is buildable and keeps all invariants", "[primeseq][.slow]") {
    PrimeSequence seq = build_sequence(3);
    CHECK(seq.a[3] % 4 == 0);
    auto report = verify_invariants(seq, true);
    CAPTURE(report.render());
    CHECK(report.all_pass());
}
