#include <catch2/catch_amalgamated.hpp>

#include "qgroups/stablerange.hpp"

#include <random>
#include <sstream>

using namespace qgroups;
using namespace qgroups::stablerange;

namespace {

std::shared_ptr<const primeseq::PrimeSequence> seq_cache(unsigned stages) {
    static std::map<unsigned, std::shared_ptr<const primeseq::PrimeSequence>> cache;
    auto it = cache.find(stages);
    if (it == cache.end())
        it = cache.emplace(stages, std::make_shared<primeseq::PrimeSequence>(
                                       primeseq::build_sequence(stages)))
                 .first;
    return it->second;
}

ColumnRule total_rule(std::map<unsigned, unsigned> j_of_i) {
    ColumnRule r;
    r.mode = ColumnRule::Mode::total;
    r.i_cover = j_of_i.rbegin()->first;
    r.j_of_i = std::move(j_of_i);
    return r;
}

ColumnRule cutoff_rule(unsigned i_star, std::map<unsigned, unsigned> j_of_i) {
    ColumnRule r;
    r.mode = ColumnRule::Mode::cutoff;
    r.i_star = i_star;
    r.j_of_i = std::move(j_of_i);
    return r;
}

}  // namespace

TEST_CASE("closed forms", "[stablerange]") {
    auto yes = has_one_in_stable_range(PrimeSetDescription::cofinite({}));
    CHECK(yes.verdict == Verdict::yes);
    CHECK(std::holds_alternative<ClosedForm>(yes.certificate));
    CHECK(yes.caveat.find("Q") != std::string::npos);  // the all-primes scope note
    CHECK(check_certificate(PrimeSetDescription::cofinite({}), yes));

    auto yes2 = has_one_in_stable_range(PrimeSetDescription::cofinite({Int(3), Int(7)}));
    CHECK(yes2.verdict == Verdict::yes);
    CHECK(yes2.caveat.empty());
}

TEST_CASE("finite descriptions get audited obstructions", "[stablerange]") {
    for (auto primes : std::vector<std::set<Int>>{
             {}, {5}, {2, 3}, {7, 11, 13}, {2, 3, 5, 7}, {17}, {3, 41}}) {
        auto desc = PrimeSetDescription::finite(primes);
        auto verdict = has_one_in_stable_range(desc);
        CAPTURE(desc.brief());
        REQUIRE(verdict.verdict == Verdict::no);
        REQUIRE(std::holds_alternative<Obstruction>(verdict.certificate));
        CHECK(check_certificate(desc, verdict));
        const auto& ob = std::get<Obstruction>(verdict.certificate);
        // soundness by brute force: products of description primes (length <= 4,
        // signs included) never satisfy alpha1 * m = m' (mod alpha2)
        std::vector<Int> pool(primes.begin(), primes.end());
        std::set<Int> reachable{mod_floor(1, ob.alpha2), mod_floor(-1, ob.alpha2)};
        for (int len = 0; len < 4; ++len) {
            std::set<Int> next = reachable;
            for (const Int& m : reachable)
                for (const Int& p : pool) {
                    next.insert(mod_floor(m * p, ob.alpha2));
                    next.insert(mod_floor(-m * p, ob.alpha2));
                }
            reachable = std::move(next);
        }
        for (const Int& m : reachable)
            CHECK_FALSE(reachable.count(mod_floor(ob.alpha1 * m, ob.alpha2)));
    }
}

TEST_CASE("certificate audit accepts valid and rejects malformed witnesses", "[stablerange]") {
    auto z_desc = PrimeSetDescription::finite({});
    StableRangeVerdict manual;
    manual.verdict = Verdict::no;
    Obstruction ob;
    ob.alpha1 = 3;
    ob.alpha2 = 10;
    manual.certificate = ob;
    CHECK(check_certificate(z_desc, manual));  // 3 outside {1,9} mod 10

    ob.alpha1 = 9;  // not prime
    manual.certificate = ob;
    CHECK_FALSE(check_certificate(z_desc, manual));

    ob.alpha1 = 11;  // 11 = 1 (mod 10) lies in the reachable subgroup
    manual.certificate = ob;
    CHECK_FALSE(check_certificate(z_desc, manual));

    StableRangeVerdict wrong_shape;
    wrong_shape.verdict = Verdict::yes;
    wrong_shape.certificate = ClosedForm{true};
    CHECK_FALSE(check_certificate(z_desc, wrong_shape));  // finite is not case (i)
}

TEST_CASE("solve_unit over the stage-0 column", "[stablerange]") {
    auto desc = PrimeSetDescription::column_union(seq_cache(0), total_rule({{0, 0}}));
    std::map<Int, unsigned> word;
    CHECK(solve_unit(desc, 2, 3, &word) == 5);  // P_{0,0} = {5}, 2*5 = 10 = 1 (mod 3)
    CHECK(word == std::map<Int, unsigned>{{5, 1}});
    CHECK(solve_unit(desc, 1, 3, &word) == 1);  // empty product
    CHECK(word.empty());

    // 7 divides no built a_i; the r-enumeration first supplies it at stage 8
    auto desc1 = PrimeSetDescription::column_union(seq_cache(1), total_rule({{0, 0}, {1, 0}}));
    try {
        solve_unit(desc1, 2, 7);
        FAIL("expected stage_needed_error");
    } catch (const stage_needed_error& e) {
        CHECK(e.stage() == 8);
    }
    CHECK_THROWS_AS(solve_unit(desc1, 3, 6), std::invalid_argument);  // gcd != 1
}

TEST_CASE("total rules give audited unit recipes", "[stablerange]") {
    auto desc = PrimeSetDescription::column_union(seq_cache(2), total_rule({{0, 0}, {1, 0}, {2, 0}}));
    auto verdict = has_one_in_stable_range(desc);
    REQUIRE(verdict.verdict == Verdict::yes);
    REQUIRE(std::holds_alternative<UnitRecipe>(verdict.certificate));
    const auto& recipe = std::get<UnitRecipe>(verdict.certificate);
    CHECK(recipe.i_cover == 2);
    CHECK_FALSE(recipe.probes.empty());
    for (const auto& probe : recipe.probes)
        CHECK(mod_floor(probe.alpha1 * probe.u, probe.alpha2) == 1);
    CHECK(check_certificate(desc, verdict));
}

TEST_CASE("unbuilt stages surface as unknown with the stage named", "[stablerange]") {
    // j_of_i(1) = 2 needs column P_{1,2}, i.e. stage 3, over a stage-2 build
    auto desc = PrimeSetDescription::column_union(seq_cache(2), total_rule({{0, 0}, {1, 2}}));
    auto verdict = has_one_in_stable_range(desc);
    CHECK(verdict.verdict == Verdict::unknown);
    CHECK(verdict.needed_stage == 3);
    CHECK(verdict.unknown_reason.find("stage 3") != std::string::npos);
    CHECK(check_certificate(desc, verdict));  // unknown claims nothing
}

TEST_CASE("cutoff rules are refuted at q_{i*}", "[stablerange]") {
    auto desc = PrimeSetDescription::column_union(seq_cache(2), cutoff_rule(1, {{0, 0}}));
    auto verdict = has_one_in_stable_range(desc);
    REQUIRE(verdict.verdict == Verdict::no);
    const auto& ob = std::get<Obstruction>(verdict.certificate);
    CHECK(ob.alpha2 == 61);  // q_1
    CHECK(ob.alpha1 == 2);   // least non-residue mod 61
    CHECK(ob.via_cutoff);
    // every included built prime is a residue mod 61
    for (const Int& p : ob.residue_primes) CHECK(ntheory::is_quadratic_residue(p, 61));
    CHECK(check_certificate(desc, verdict));

    // find_obstruction agrees
    auto found = find_obstruction(desc, 100);
    REQUIRE(found.has_value());
    CHECK(found->alpha1 == 2);
    CHECK(found->alpha2 == 61);
}

TEST_CASE("find_obstruction on yes-shapes", "[stablerange]") {
    CHECK_FALSE(find_obstruction(PrimeSetDescription::cofinite({}), 100).has_value());
    auto total = PrimeSetDescription::column_union(seq_cache(1), total_rule({{0, 0}}));
    CHECK_FALSE(find_obstruction(total, 100).has_value());
}

TEST_CASE("cancellability of rank-1 groups", "[stablerange]") {
    rank1::Rank1Group zed;
    auto v = is_cancellable(zed);
    CHECK(v.verdict == Verdict::yes);
    CHECK(v.is_z);

    rank1::Rank1Group g5;
    g5.set_height(5, rank1::ExtendedHeight::inf());
    auto v5 = is_cancellable(g5);
    CHECK(v5.verdict == Verdict::no);
    CHECK_FALSE(v5.is_z);
    REQUIRE(v5.stable_range.has_value());
    CHECK(check_certificate(endomorphism_ring(g5).inverted, *v5.stable_range));

    // finite heights only: literal-representative caveat
    rank1::Rank1Group gfin;
    gfin.set_height(5, rank1::ExtendedHeight::fin(1));
    auto vfin = is_cancellable(gfin);
    CHECK(vfin.verdict == Verdict::no);
    CHECK(vfin.caveat.find("literal representative") != std::string::npos);

    // cofinite-backed description with the not-Z guarantee
    auto vc = is_cancellable(PrimeSetDescription::cofinite({Int(3)}), true);
    CHECK(vc.verdict == Verdict::yes);
    // without the guarantee a No cannot be concluded
    auto vn = is_cancellable(PrimeSetDescription::finite({Int(5)}), false);
    CHECK(vn.verdict == Verdict::unknown);
}

TEST_CASE("bounded refutation oracle for the stable-range definition", "[stablerange]") {
    // Z and Z[1/5]: enumerate f1 g1 + f2 g2 = 1 in a small window and look for
    // pairs with no h making f1 + f2 h a unit. Any counterexample must sit on
    // a No verdict; both of these are No.
    struct Case {
        std::set<Int> primes;
        bool expect_counterexample;
    };
    for (const auto& c : std::vector<Case>{{{}, true}, {{5}, true}}) {
        auto desc = PrimeSetDescription::finite(c.primes);
        auto verdict = has_one_in_stable_range(desc);
        bool found_counterexample = false;
        auto is_unit = [&](const Rat& x) {
            if (x == 0) return false;
            Int num = Int(numerator(x)) < 0 ? Int(-numerator(x)) : Int(numerator(x));
            Int den = Int(denominator(x));
            for (const Int& p : c.primes) {
                while (num % p == 0) num /= p;
                while (den % p == 0) den /= p;
            }
            return num == 1 && den == 1;
        };
        for (long f1 = -12; f1 <= 12 && !found_counterexample; ++f1) {
            for (long f2 = -12; f2 <= 12 && !found_counterexample; ++f2) {
                bool solvable = false;
                for (long g1 = -12; g1 <= 12 && !solvable; ++g1)
                    for (long g2 = -12; g2 <= 12 && !solvable; ++g2)
                        solvable = f1 * g1 + f2 * g2 == 1;
                if (!solvable) continue;
                bool has_h = false;
                for (long h = -50; h <= 50 && !has_h; ++h)
                    has_h = is_unit(Rat(f1 + f2 * h));
                if (!has_h) found_counterexample = true;
            }
        }
        CHECK(found_counterexample == c.expect_counterexample);
        // refutation-only direction: counterexample implies not-Yes
        if (found_counterexample) CHECK(verdict.verdict != Verdict::yes);
    }
}

TEST_CASE("description files round trip", "[stablerange]") {
    for (auto text : {std::string("finite\nprimes 2 5 7\n"), std::string("cofinite\nexcluded 3\n"),
                      std::string("columnunion\ntotal\njofi 0 0\njofi 1 1\n"),
                      std::string("columnunion\ncutoff 1\njofi 0 0\n")}) {
        auto desc = parse_description(text);
        std::ostringstream os;
        write_description(desc, os);
        auto again = parse_description(os.str());
        CHECK(again.kind == desc.kind);
        CHECK(again.primes == desc.primes);
        CHECK(again.rule.mode == desc.rule.mode);
        CHECK(again.rule.j_of_i == desc.rule.j_of_i);
    }
    CHECK_THROWS_AS(parse_description("nonsense\n"), parse_error);
    try {
        parse_description("finite\nprimes 5\nbogus\n");
        FAIL("expected parse error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("reports embed certificates and audit themselves", "[stablerange]") {
    auto desc = PrimeSetDescription::finite({Int(5)});
    auto verdict = has_one_in_stable_range(desc);
    std::string report = render_verdict(desc, verdict);
    CHECK(report.find("verdict: no") != std::string::npos);
    CHECK(report.find("alpha1") != std::string::npos);
    CHECK(report.find("audit: pass") != std::string::npos);
    // byte-for-byte reproducible
    CHECK(report == render_verdict(desc, verdict));
}
