// qgroups: batch CLI over the prime-sequence, stable-range, reduction, and
// tree-group machinery. Every yes/no report embeds a re-checkable certificate;
// canonical mode strips environment-dependent lines so reports are
// byte-reproducible from the same inputs.
//
// Exit codes: 0 yes/pass, 1 no/fail (with certificate), 2 unknown/resource,
// 3 usage or parse error.

#include "qgroups/primeseq.hpp"
#include "qgroups/rank1.hpp"
#include "qgroups/reduction.hpp"
#include "qgroups/stablerange.hpp"
#include "qgroups/treegroup.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitYes = 0;
constexpr int kExitNo = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 3;

constexpr unsigned kStageCap = 3;
constexpr unsigned kTreeSCap = 4, kTreeICap = 4, kTreeKCap = 5, kTreeWCap = 4;
constexpr std::size_t kTreeNodeCap = 12;

namespace fs = std::filesystem;
using namespace qgroups;

fs::path default_cache_path() {
    const char* dir = std::getenv("QGROUPS_CACHE_DIR");
    return fs::path(dir ? dir : ".") / "primeseq.cache";
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int verdict_exit(stablerange::Verdict v) {
    switch (v) {
        case stablerange::Verdict::yes: return kExitYes;
        case stablerange::Verdict::no: return kExitNo;
        default: return kExitUnknown;
    }
}

struct Common {
    std::string cache;
    bool canonical = false;

    fs::path cache_path() const { return cache.empty() ? default_cache_path() : fs::path(cache); }
    void header(std::ostream& os, const std::string& input = "") const {
        if (canonical) return;
        os << "tool: qgroups\n";
        if (!input.empty()) os << "input: " << input << "\n";
    }
};

std::shared_ptr<const primeseq::PrimeSequence> load_cache(const Common& c) {
    return std::make_shared<primeseq::PrimeSequence>(primeseq::cache_load(c.cache_path()));
}

// --- seq ---------------------------------------------------------------

int cmd_seq_build(const Common& c, unsigned stages, bool allow_deep, bool audit) {
    if (stages > kStageCap && !allow_deep) {
        std::cerr << "seq build: stage " << stages << " exceeds the default cap " << kStageCap
                  << " (a_i grows super-exponentially); pass --allow-deep to override\n";
        return kExitUsage;
    }
    primeseq::PrimeSequence seq;
    fs::path path = c.cache_path();
    if (fs::exists(path)) {
        seq = primeseq::cache_load(path);
        if (seq.stages() < stages) primeseq::extend_sequence(seq, stages);
    } else {
        seq = primeseq::build_sequence(stages);
    }
    primeseq::cache_save(seq, path);
    auto report = primeseq::verify_invariants(seq, audit);
    c.header(std::cout, path.string());
    std::cout << "stages built: " << seq.stages() << "\n" << report.render();
    return report.all_pass() ? kExitYes : kExitNo;
}

int cmd_seq_verify(const Common& c, bool audit) {
    fs::path path = c.cache_path();
    primeseq::PrimeSequence seq = primeseq::deserialize(slurp(path));
    auto report = primeseq::verify_invariants(seq, audit);
    c.header(std::cout, path.string());
    std::cout << "stages built: " << seq.stages() << "\n" << report.render();
    return report.all_pass() ? kExitYes : kExitNo;
}

// --- sr ----------------------------------------------------------------

int cmd_sr_check(const Common& c, const std::string& desc_path, long long bound) {
    auto desc = stablerange::parse_description(slurp(desc_path));
    if (desc.kind == stablerange::PrimeSetDescription::Kind::column_union)
        desc.seq = load_cache(c);
    stablerange::Options opts;
    if (bound > 0) opts.obstruction_bound = bound;
    auto verdict = stablerange::has_one_in_stable_range(desc, opts);
    c.header(std::cout, desc_path);
    std::cout << stablerange::render_verdict(desc, verdict, opts);
    return verdict_exit(verdict.verdict);
}

// --- cancel ------------------------------------------------------------

int cmd_cancel_check(const Common& c, const std::string& group_path) {
    auto group = rank1::parse_group(slurp(group_path));
    auto verdict = stablerange::is_cancellable(group);
    c.header(std::cout, group_path);
    if (verdict.is_z) {
        std::cout << stablerange::render_cancellability(verdict, nullptr);
    } else {
        auto endo = stablerange::endomorphism_ring(group).inverted;
        std::cout << stablerange::render_cancellability(verdict, &endo);
    }
    return verdict_exit(verdict.verdict);
}

// --- reduce ------------------------------------------------------------

int cmd_reduce_build(const Common& c, const std::string& table_path, const std::string& out_path) {
    auto table = reduction::parse_table4(slurp(table_path));
    auto seq = load_cache(c);
    auto group = reduction::build_group(table, *seq);
    c.header(std::cout, table_path);
    std::cout << "group " << group.label << " heights:\n";
    std::ostringstream body;
    rank1::write_group(group, body);
    std::cout << body.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        rank1::write_group(group, out);
        if (!c.canonical) std::cout << "written: " << out_path << "\n";
    }
    return kExitYes;
}

int cmd_reduce_classify(const Common& c, const std::string& table_path) {
    auto table = reduction::parse_table4(slurp(table_path));
    auto seq = load_cache(c);
    auto desc = reduction::characterize_M(table, seq);
    auto verdict = reduction::classify(table, seq);
    c.header(std::cout, table_path);
    std::cout << stablerange::render_cancellability(verdict, &desc);
    return verdict_exit(verdict.verdict);
}

int cmd_reduce_ring(const Common& c, const std::string& table_path) {
    auto table = reduction::parse_table2(slurp(table_path));
    auto seq = load_cache(c);
    auto report = reduction::build_ring(table, seq);
    auto verdict = stablerange::has_one_in_stable_range(report.desc);
    c.header(std::cout, table_path);
    std::cout << report.render();
    std::cout << stablerange::render_verdict(report.desc, verdict);
    return verdict_exit(verdict.verdict);
}

// --- tree --------------------------------------------------------------

struct TreeArgs {
    std::string tree_path;
    unsigned smax = 1, imax = 0, kmax = 1, w = 1;
    bool allow_large = false;

    treegroup::TreeT load() const { return treegroup::parse_tree(slurp(tree_path)); }
    treegroup::Truncation truncation(const treegroup::TreeT& tree) const {
        treegroup::Truncation t;
        t.S_max = smax;
        t.I_max = imax;
        t.K_max = kmax;
        t.W = w;
        t.nodes = tree.nodes;
        t.validate(tree);
        return t;
    }
    int check_caps() const {
        if (allow_large) return kExitYes;
        if (smax > kTreeSCap || imax > kTreeICap || kmax > kTreeKCap || w > kTreeWCap) {
            std::cerr << "tree: truncation exceeds the default caps (smax<=" << kTreeSCap
                      << " imax<=" << kTreeICap << " kmax<=" << kTreeKCap << " w<=" << kTreeWCap
                      << "); pass --allow-large to override\n";
            return kExitUsage;
        }
        return kExitYes;
    }
};

int cmd_tree_build(const Common& c, const TreeArgs& args) {
    if (int rc = args.check_caps(); rc != kExitYes) return rc;
    auto tree = args.load();
    if (tree.nodes.size() > kTreeNodeCap && !args.allow_large) {
        std::cerr << "tree: more than " << kTreeNodeCap << " nodes; pass --allow-large\n";
        return kExitUsage;
    }
    auto trunc = args.truncation(tree);
    auto alloc = treegroup::allocate_primes(trunc);
    auto gens = treegroup::enumerate_generators(tree, trunc, alloc);
    c.header(std::cout, args.tree_path);
    std::cout << "window dimension: " << gens.basis.size() << "\n";
    std::cout << "allocated families: " << alloc.families.size() << " (t = " << alloc.t << ")\n";
    for (const auto& [tag, primes] : alloc.families) {
        std::cout << "  " << tag.name << " = {";
        for (std::size_t k = 0; k < primes.size(); ++k)
            std::cout << (k ? " " : "") << primes[k];
        std::cout << "}\n";
    }
    std::cout << "generators: " << gens.gens.size() << "\n";
    for (const auto& g : gens.gens) std::cout << "  " << g.provenance << "\n";
    return kExitYes;
}

int cmd_tree_verify(const Common& c, const TreeArgs& args, const std::string& path_spec) {
    if (int rc = args.check_caps(); rc != kExitYes) return rc;
    auto tree = args.load();
    auto trunc = args.truncation(tree);
    auto alloc = treegroup::allocate_primes(trunc);
    treegroup::Node leaf = treegroup::parse_node(path_spec);
    auto report = treegroup::verify_decomposition(tree, leaf, trunc, alloc);
    c.header(std::cout, args.tree_path);
    std::cout << "path: " << treegroup::node_str(leaf) << "\n" << report.render();
    return report.all_ok() ? kExitYes : kExitNo;
}

int cmd_tree_probe(const Common& c, const TreeArgs& args, const std::string& family_spec,
                   long long coeff_bound, int level_override) {
    if (int rc = args.check_caps(); rc != kExitYes) return rc;
    auto tree = args.load();
    auto trunc = args.truncation(tree);
    auto alloc = treegroup::allocate_primes(trunc);

    std::vector<Int> family;
    unsigned level = trunc.K_max;
    if (family_spec == "t") {
        family = {alloc.t};
    } else if (family_spec == "q") {
        family = alloc.primes(treegroup::FamilyTag::Q());
    } else if (family_spec.rfind("r:", 0) == 0) {
        family = alloc.primes(treegroup::FamilyTag::R(std::stoul(family_spec.substr(2))));
        level = 1;  // the gluing generators carry exponent-1 divisibility only
    } else if (family_spec.rfind("p:", 0) == 0) {
        auto rest = family_spec.substr(2);
        auto colon = rest.find(':');
        if (colon == std::string::npos) throw parse_error("probe: family 'p:<code>:<index>'");
        unsigned code = std::stoul(rest.substr(0, colon));
        std::string payload = rest.substr(colon + 1);
        switch (code) {
            case 0: family = alloc.primes(treegroup::FamilyTag::P_x(std::stoul(payload))); break;
            case 1: family = alloc.primes(treegroup::FamilyTag::P_y(std::stoul(payload))); break;
            case 8: family = alloc.primes(treegroup::FamilyTag::P_diag(std::stoul(payload))); break;
            case 2:
                family = alloc.primes(treegroup::FamilyTag::P_xnode(treegroup::parse_node(payload)));
                break;
            default: throw parse_error("probe: unsupported family code " + std::to_string(code));
        }
    } else {
        throw parse_error("probe: family must be t, q, r:<s>, or p:<code>:<index>");
    }
    if (level_override > 0) level = static_cast<unsigned>(level_override);

    auto gens = treegroup::enumerate_generators(tree, trunc, alloc);
    treegroup::TreeLattice lat(gens);
    auto hits = treegroup::pure_component_probe(family, lat, coeff_bound, level);
    c.header(std::cout, args.tree_path);
    std::cout << "family: " << family_spec << " = {";
    for (std::size_t k = 0; k < family.size(); ++k) std::cout << (k ? " " : "") << family[k];
    std::cout << "}\n";
    std::cout << "divisibility level: " << level << ", coefficient bound: " << coeff_bound
              << "\n";
    std::cout << "elements fully divisible (support <= 2):\n";
    for (const auto& e : hits) std::cout << "  " << e.str() << "\n";
    return kExitYes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"computational companion for cancellable-group classification"};
    app.require_subcommand(1);

    Common common;
    app.add_option("--cache", common.cache, "prime-sequence cache file (default: "
                                            "$QGROUPS_CACHE_DIR/primeseq.cache)");
    app.add_flag("--canonical", common.canonical, "strip environment-dependent report lines");

    // seq
    auto* seq = app.add_subcommand("seq", "build or verify the prime sequence cache");
    seq->require_subcommand(1);
    unsigned stages = 2;
    bool allow_deep = false, audit = false;
    auto* seq_build = seq->add_subcommand("build", "build/extend the cached sequence");
    seq_build->add_option("--stages", stages, "stages to build")->required();
    seq_build->add_flag("--allow-deep", allow_deep, "override the stage cap");
    seq_build->add_flag("--audit-minimality", audit, "re-scan provenance ranges");
    auto* seq_verify = seq->add_subcommand("verify", "verify the cached sequence");
    seq_verify->add_flag("--audit-minimality", audit, "re-scan provenance ranges");

    // sr
    auto* sr = app.add_subcommand("sr", "stable-range-1 verdicts for prime-set descriptions");
    sr->require_subcommand(1);
    std::string desc_path;
    long long bound = 0;
    auto* sr_check = sr->add_subcommand("check", "decide and certify");
    sr_check->add_option("description", desc_path, "description file")->required();
    sr_check->add_option("--bound", bound, "obstruction search bound");

    // cancel
    auto* cancel = app.add_subcommand("cancel", "cancellability of rank-1 groups");
    cancel->require_subcommand(1);
    std::string group_path;
    auto* cancel_check = cancel->add_subcommand("check", "classify a height-described group");
    cancel_check->add_option("group", group_path, "group description file")->required();

    // reduce
    auto* reduce = app.add_subcommand("reduce", "quantifier-table reductions");
    reduce->require_subcommand(1);
    std::string table_path, out_path;
    auto* reduce_build = reduce->add_subcommand("build", "table -> G(x) heights");
    reduce_build->add_option("table", table_path, "qtable4 file")->required();
    reduce_build->add_option("--out", out_path, "write the group description here");
    auto* reduce_classify = reduce->add_subcommand("classify", "table -> cancellability");
    reduce_classify->add_option("table", table_path, "qtable4 file")->required();
    auto* reduce_ring = reduce->add_subcommand("ring", "2-quantifier table -> subring report");
    reduce_ring->add_option("table", table_path, "qtable2 file")->required();

    // tree
    auto* tree = app.add_subcommand("tree", "finite truncations of the tree-indexed group");
    tree->require_subcommand(1);
    TreeArgs targs;
    std::string path_spec, family_spec;
    long long coeff_bound = 2;
    int level = 0;
    auto add_tree_common = [&](CLI::App* cmd) {
        cmd->add_option("tree", targs.tree_path, "tree file")->required();
        cmd->add_option("--smax", targs.smax, "copies of the linked construction");
        cmd->add_option("--imax", targs.imax, "largest index i");
        cmd->add_option("--kmax", targs.kmax, "divisibility exponent window");
        cmd->add_option("--w", targs.w, "primes per infinite family");
        cmd->add_flag("--allow-large", targs.allow_large, "override truncation caps");
    };
    auto* tree_build = tree->add_subcommand("build", "allocate primes and list generators");
    add_tree_common(tree_build);
    auto* tree_verify =
        tree->add_subcommand("verify-decomposition", "check the direct-sum decomposition");
    add_tree_common(tree_verify);
    tree_verify->add_option("--path", path_spec, "path leaf, e.g. 0/0/0")->required();
    auto* tree_probe = tree->add_subcommand("probe", "divisibility profile of a prime family");
    add_tree_common(tree_probe);
    tree_probe->add_option("--family", family_spec, "t | q | r:<s> | p:<code>:<index>")
        ->required();
    tree_probe->add_option("--coeff-bound", coeff_bound, "probe coefficient window");
    tree_probe->add_option("--level", level, "divisibility level (default: kmax, 1 for r)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seq_build->parsed()) return cmd_seq_build(common, stages, allow_deep, audit);
        if (seq_verify->parsed()) return cmd_seq_verify(common, audit);
        if (sr_check->parsed()) return cmd_sr_check(common, desc_path, bound);
        if (cancel_check->parsed()) return cmd_cancel_check(common, group_path);
        if (reduce_build->parsed()) return cmd_reduce_build(common, table_path, out_path);
        if (reduce_classify->parsed()) return cmd_reduce_classify(common, table_path);
        if (reduce_ring->parsed()) return cmd_reduce_ring(common, table_path);
        if (tree_build->parsed()) return cmd_tree_build(common, targs);
        if (tree_verify->parsed()) return cmd_tree_verify(common, targs, path_spec);
        if (tree_probe->parsed()) return cmd_tree_probe(common, targs, family_spec, coeff_bound, level);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const stablerange::stage_needed_error& e) {
        std::cerr << "unknown: " << e.what() << "\n";
        return kExitUnknown;
    } catch (const resource_error& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return kExitUnknown;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNo;
    }
}
