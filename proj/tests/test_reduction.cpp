#include <catch2/catch_amalgamated.hpp>

#include "qgroups/reduction.hpp"
#include "test_util.hpp"

#include <random>
#include <sstream>

using namespace qgroups;
using namespace qgroups::reduction;

namespace {

std::shared_ptr<const primeseq::PrimeSequence> seq2() {
    static auto seq =
        std::make_shared<primeseq::PrimeSequence>(primeseq::build_sequence(2));
    return seq;
}

QuantifierTable4 all_true_table(unsigned I, unsigned J, unsigned U, unsigned V) {
    QuantifierTable4 t(I, J, U, V, "alltrue");
    for (unsigned i = 0; i <= I; ++i)
        for (unsigned j = 0; j <= J; ++j) {
            for (unsigned u = 0; u <= U; ++u)
                for (unsigned v = 0; v <= V; ++v) t.set_entry(i, j, u, v);
            t.total_flags.insert({i, j});
        }
    return t;
}

std::set<Int> infinite_height_primes(const rank1::Rank1Group& g) {
    return rank1::inverted_primes(g);
}

}  // namespace

TEST_CASE("table validation rejects inconsistent flags", "[reduction]") {
    QuantifierTable4 t(1, 1, 1, 1);
    t.total_flags.insert({0, 0});
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);  // slice all false
    t.set_entry(0, 0, 0, 0);
    t.set_entry(0, 0, 1, 1);
    CHECK_NOTHROW(t.validate());
    t.total_flags.insert({2, 0});  // outside bounds
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("build_group on the all-true table gives infinite heights", "[reduction]") {
    auto table = all_true_table(1, 1, 2, 2);
    auto g = build_group(table, *seq2());
    // every prime of every built column within the row bound is inverted
    for (const auto& [key, entries] : seq2()->P) {
        if (key.first > table.I_max) continue;
        for (const auto& e : entries) {
            CAPTURE(key.first, key.second);
            CHECK(g.height(e.prime) == rank1::ExtendedHeight::inf());
        }
    }
}

TEST_CASE("build_group rejects a hopeless row zero", "[reduction]") {
    QuantifierTable4 t(1, 1, 1, 1, "badrow");
    // row 0 entirely false, row 1 true
    for (unsigned u = 0; u <= 1; ++u)
        for (unsigned v = 0; v <= 1; ++v) t.set_entry(1, 0, u, v);
    CHECK_THROWS_WITH(build_group(t, *seq2()),
                      Catch::Matchers::ContainsSubstring("normalize"));
}

TEST_CASE("bounded truth yields finite heights", "[reduction]") {
    // true exactly for u <= 2 at (0,0), bounds U = 2; no flag: heights 2
    QuantifierTable4 t(0, 0, 2, 1, "bounded");
    for (unsigned u = 0; u <= 2; ++u) t.set_entry(0, 0, u, 0);
    auto g = build_group(t, *seq2());
    for (const auto& e : seq2()->p_set(0, 0))
        CHECK(g.height(e.prime) == rank1::ExtendedHeight::fin(2));

    // truth only through u <= 1 with U = 2: heights 1
    QuantifierTable4 t2(0, 0, 2, 1, "shorter");
    t2.set_entry(0, 0, 0, 0);
    t2.set_entry(0, 0, 1, 0);
    auto g2 = build_group(t2, *seq2());
    for (const auto& e : seq2()->p_set(0, 0))
        CHECK(g2.height(e.prime) == rank1::ExtendedHeight::fin(1));
}

TEST_CASE("insufficient stages are named", "[reduction]") {
    auto table = all_true_table(2, 2, 1, 1);  // needs stage 4
    try {
        build_group(table, *seq2());
        FAIL("expected stage_needed_error");
    } catch (const stablerange::stage_needed_error& e) {
        CHECK(e.stage() == 4);
    }
}

TEST_CASE("characterize_M reads the flags", "[reduction]") {
    auto total = characterize_M(all_true_table(1, 1, 1, 1), seq2());
    CHECK(total.rule.mode == stablerange::ColumnRule::Mode::total);
    CHECK(total.rule.i_cover == 1);
    CHECK(total.rule.j_of_i == std::map<unsigned, unsigned>{{0, 0}, {1, 0}});

    // row 1 never flagged: cutoff at 1
    QuantifierTable4 t(1, 1, 1, 1, "cut");
    for (unsigned u = 0; u <= 1; ++u) t.set_entry(0, 0, u, 0);
    t.total_flags.insert({0, 0});
    auto cut = characterize_M(t, seq2());
    CHECK(cut.rule.mode == stablerange::ColumnRule::Mode::cutoff);
    CHECK(cut.rule.i_star == 1);
    CHECK(cut.rule.j_of_i == std::map<unsigned, unsigned>{{0, 0}});

    // flag (0,0) is mandatory on the classification path
    QuantifierTable4 noflag(1, 1, 1, 1, "noflag");
    for (unsigned i = 0; i <= 1; ++i)
        for (unsigned u = 0; u <= 1; ++u) noflag.set_entry(i, 0, u, 0);
    CHECK_THROWS_AS(characterize_M(noflag, seq2()), std::invalid_argument);
}

TEST_CASE("heights and characterize_M tell the same story", "[reduction]") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        auto table = testutil::random_table4(rng, trial % 2 == 0);
        auto g = build_group(table, *seq2());
        auto desc = characterize_M(table, seq2());
        std::set<Int> from_desc;
        for (const Int& p : stablerange::included_built_primes(desc)) from_desc.insert(p);
        CAPTURE(table.label, table.I_max, table.J_max);
        CHECK(infinite_height_primes(g) == from_desc);
    }
}

TEST_CASE("classify follows the table shape", "[reduction]") {
    std::mt19937_64 rng(999);
    for (int trial = 0; trial < 40; ++trial) {
        bool total = trial % 2 == 0;
        auto table = testutil::random_table4(rng, total);
        auto verdict = classify(table, seq2());
        CAPTURE(table.label);
        CHECK(verdict.verdict ==
              (total ? stablerange::Verdict::yes : stablerange::Verdict::no));
        if (!total) {
            const auto& ob = std::get<stablerange::Obstruction>(
                verdict.stable_range->certificate);
            CHECK(ob.via_cutoff);
            CHECK(ob.alpha2 == seq2()->q[ob.i_star].prime);
        }
    }
}

TEST_CASE("the bounded condition is monotone in i and antitone in m", "[reduction]") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 30; ++trial) {
        auto t = testutil::random_table4(rng, trial % 2 == 0);
        auto cond = [&](unsigned i, unsigned j, unsigned m) {
            for (unsigned ip = 0; ip <= i; ++ip) {
                bool witnessed = false;
                for (unsigned jp = 0; jp <= j && !witnessed; ++jp) witnessed = t.slice(ip, jp, m);
                if (!witnessed) return false;
            }
            return true;
        };
        for (unsigned i = 0; i <= t.I_max; ++i)
            for (unsigned j = 0; j <= t.J_max; ++j)
                for (unsigned m = 0; m < t.U_max; ++m) {
                    CHECK((!cond(i, j, m + 1) || cond(i, j, m)));          // antitone in m
                    if (i > 0) CHECK((!cond(i, j, m) || cond(i - 1, j, m)));  // antitone in i
                }
    }
}

TEST_CASE("build_ring decides per-column membership by lookup", "[reduction]") {
    QuantifierTable2 all(1, 1, "all");
    for (unsigned i = 0; i <= 1; ++i)
        for (unsigned j = 0; j <= 1; ++j) all.set_entry(i, j);
    auto report = build_ring(all, seq2());
    CHECK(report.total);
    CHECK(report.desc.rule.mode == stablerange::ColumnRule::Mode::total);

    QuantifierTable2 only00(1, 1, "only00");
    only00.set_entry(0, 0);
    auto rep2 = build_ring(only00, seq2());
    CHECK_FALSE(rep2.total);
    CHECK(rep2.desc.rule.mode == stablerange::ColumnRule::Mode::cutoff);
    CHECK(rep2.desc.rule.i_star == 1);
    CHECK(rep2.desc.rule.j_of_i == std::map<unsigned, unsigned>{{0, 0}});
    for (const auto& fact : rep2.facts) {
        bool expect = fact.i == 0;  // only row 0 is certified
        CHECK(fact.included == expect);
    }
    CHECK(rep2.render().find("every column decided: yes") != std::string::npos);
}

TEST_CASE("ring verdicts match the table shape", "[reduction]") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 30; ++trial) {
        bool total = trial % 2 == 0;
        auto table = testutil::random_table2(rng, total);
        auto report = build_ring(table, seq2());
        auto verdict = stablerange::has_one_in_stable_range(report.desc);
        CAPTURE(table.label);
        CHECK(report.total == total);
        CHECK(verdict.verdict ==
              (total ? stablerange::Verdict::yes : stablerange::Verdict::no));
        CHECK(stablerange::check_certificate(report.desc, verdict));
    }
}

TEST_CASE("table files round trip and reject malformed input", "[reduction]") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 10; ++trial) {
        auto t = testutil::random_table4(rng, trial % 2 == 0);
        std::ostringstream os;
        write_table4(t, os);
        auto back = parse_table4(os.str());
        CHECK(back.entries == t.entries);
        CHECK(back.total_flags == t.total_flags);
        CHECK(back.label == t.label);

        auto t2 = testutil::random_table2(rng, trial % 2 == 0);
        std::ostringstream os2;
        write_table2(t2, os2);
        auto back2 = parse_table2(os2.str());
        CHECK(back2.entries == t2.entries);
    }
    CHECK_THROWS_AS(parse_table4("qtable4 2\nbounds 1 1 1 1\n"), parse_error);
    CHECK_THROWS_AS(parse_table4("qtable4 1\nR 0 0 0 0\n"), parse_error);  // no bounds
    // flag set but bounded slice false: rejected at load
    CHECK_THROWS_AS(parse_table4("qtable4 1\nbounds 1 1 1 1\ntotal 0 0\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_table2("qtable2 1\nbounds 1 1\nS 5 0\n"), parse_error);
}
