#include <cstdio>
#include <set>

#include "doctest.h"
#include "flagforge/flag.hpp"
#include "flagforge/synth.hpp"

#include "util.hpp"

using namespace flagforge;
using testutil::load_fixture;

namespace {

FaAsg fixture_graph(const std::string& name) {
    return build_fa_asg(load_fixture(name));
}

Flag flag_for(const std::vector<Flag>& flags, const std::string& fn) {
    for (const Flag& f : flags)
        if (f.target_name == fn) return f;
    throw std::runtime_error("no flag for " + fn);
}

std::set<NodeId> node_ids(const Flag& f) {
    std::set<NodeId> out;
    for (const FlagNode& n : f.nodes) out.insert(n.orig_id);
    return out;
}

std::set<NodeId> group_decls(const Flag& f) {
    std::set<NodeId> out;
    for (const FlagGroup& g : f.groups) out.insert(g.decl);
    return out;
}

}  // namespace

TEST_CASE("coverage below 1 is rejected") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    CHECK_THROWS_AS(extract_flags(g, 0), CoverageOutOfRange);
    CHECK_THROWS_AS(extract_flags(g, -3), CoverageOutOfRange);
}

TEST_CASE("coverage 1 keeps only the target subtree in a single group") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    Flag f = flag_for(extract_flags(g, 1), "f");
    CHECK(node_ids(f) == std::set<NodeId>{13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23});
    CHECK(f.groups.size() == 1);
    for (int gidx : f.pool_map) CHECK(gidx == 0);
    CHECK(f.groups[0].decl == 13);
    CHECK(f.groups[0].kind == GroupKind::Function);
}

TEST_CASE("coverage 2 pulls in directly referenced declarations") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    Flag f = flag_for(extract_flags(g, 2), "f");
    CHECK(f.groups.size() == 3);
    CHECK(group_decls(f) == std::set<NodeId>{13, 5, 3});
}

TEST_CASE("coverage 3 reaches transitively referenced declarations") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    Flag f = flag_for(extract_flags(g, 3), "f");
    CHECK(f.groups.size() == 4);
    CHECK(group_decls(f) == std::set<NodeId>{13, 5, 3, 4});
    // group kinds reflect the declaration node type
    for (const FlagGroup& gr : f.groups) {
        if (gr.decl == 3 || gr.decl == 4)
            CHECK(gr.kind == GroupKind::Variable);
        else
            CHECK(gr.kind == GroupKind::Function);
    }
}

TEST_CASE("node sets grow monotonically in coverage and reach a fixed point") {
    for (const char* name :
         {"f04_reentrancy_mini.sol.ast.json", "f12_coverage.sol.ast.json",
          "f08_override.sol.ast.json", "f05_nocall.sol.ast.json"}) {
        CAPTURE(name);
        FaAsg g = fixture_graph(name);
        for (int cov = 1; cov < 5; ++cov) {
            auto lo = extract_flags(g, cov);
            auto hi = extract_flags(g, cov + 1);
            REQUIRE(lo.size() == hi.size());
            for (std::size_t i = 0; i < lo.size(); ++i) {
                std::set<NodeId> a = node_ids(lo[i]), b = node_ids(hi[i]);
                CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
            }
        }
        // fixed point: node sets stop changing at high coverage
        auto c8 = extract_flags(g, 8);
        auto c9 = extract_flags(g, 9);
        for (std::size_t i = 0; i < c8.size(); ++i)
            CHECK(node_ids(c8[i]) == node_ids(c9[i]));
    }
}

TEST_CASE("function without references is identical at coverage 1 through 3") {
    FaAsg g = fixture_graph("f05_nocall.sol.ast.json");
    Flag c1 = flag_for(extract_flags(g, 1), "pure_fn");
    Flag c2 = flag_for(extract_flags(g, 2), "pure_fn");
    Flag c3 = flag_for(extract_flags(g, 3), "pure_fn");
    CHECK(node_ids(c1) == node_ids(c2));
    CHECK(node_ids(c2) == node_ids(c3));
    CHECK(c1.edges == c2.edges);
    CHECK(c1.pool_map == c3.pool_map);
}

TEST_CASE("scaffolding nodes share one Context group") {
    Flag f;
    f.target_function = 1;
    f.nodes.push_back(FlagNode{1, "FunctionDefinition", "FunctionDefinition f", 1});
    f.nodes.push_back(FlagNode{2, "Block", "Block", 1});
    f.nodes.push_back(FlagNode{3, "PragmaDirective", "PragmaDirective", std::nullopt});
    f.nodes.push_back(FlagNode{4, "ContractDefinition", "ContractDefinition C", std::nullopt});
    build_pool_map(f);
    REQUIRE(f.groups.size() == 2);
    CHECK(f.groups[1].kind == GroupKind::Context);
    CHECK(f.pool_map == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("no Context group when every node has a declaration") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    for (const Flag& f : extract_flags(g, 3))
        for (const FlagGroup& gr : f.groups) CHECK(gr.kind != GroupKind::Context);
}

TEST_CASE("single group pools to one supernode with no edges") {
    FaAsg g = fixture_graph("f05_nocall.sol.ast.json");
    Flag f = flag_for(extract_flags(g, 1), "pure_fn");
    PooledFlag p = pool_structure(f);
    CHECK(p.supernodes.size() == 1);
    CHECK(p.edges.empty());
}

TEST_CASE("parallel edges between two groups collapse to one pooled edge") {
    Flag f;
    f.target_function = 1;
    f.nodes.push_back(FlagNode{1, "FunctionDefinition", "fn", 1});
    for (int i = 2; i <= 6; ++i)
        f.nodes.push_back(FlagNode{i, "Identifier", "id", 1});
    f.nodes.push_back(FlagNode{7, "VariableDeclaration", "var", 7});
    for (int i = 1; i <= 5; ++i)
        f.edges.push_back(FlagEdge{i, 6, EdgeKind::ReferencedDeclaration});
    build_pool_map(f);
    PooledFlag p = pool_structure(f);
    CHECK(p.supernodes.size() == 2);
    CHECK(p.edges == std::set<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("pooled edges match a brute-force quotient oracle on the 4-group fixture") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    Flag f = flag_for(extract_flags(g, 3), "f");
    REQUIRE(f.groups.size() == 4);
    std::set<std::pair<int, int>> oracle;
    for (const FlagEdge& e : f.edges) {
        int a = f.pool_map[e.src], b = f.pool_map[e.dst];
        if (a != b) oracle.insert({a, b});
    }
    CHECK(pool_structure(f).edges == oracle);
}

TEST_CASE("flag JSON round-trips") {
    FaAsg g = fixture_graph("f12_coverage.sol.ast.json");
    for (Flag f : extract_flags(g, 3)) {
        f.label = 2;
        Flag r = flag_from_json(flag_to_json(f));
        CHECK(flag_to_json(f).dump() == flag_to_json(r).dump());
        CHECK(r.label == 2);
        CHECK(r.pool_map == f.pool_map);
    }
}

TEST_CASE("dataset file round-trips") {
    FaAsg g = fixture_graph("f04_reentrancy_mini.sol.ast.json");
    std::vector<Flag> flags = extract_flags(g, 4);
    std::string path = "/tmp/flagforge_test_dataset.jsonl";
    write_flag_dataset(path, flags);
    std::vector<Flag> back = read_flag_dataset(path);
    REQUIRE(back.size() == flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i)
        CHECK(flag_to_json(flags[i]).dump() == flag_to_json(back[i]).dump());
    std::remove(path.c_str());
}

TEST_CASE("labels attach by name, signature, or default to class 0") {
    std::vector<std::string> classes = {"safe", "reentrancy", "unchecked_low_level_calls",
                                        "time_manipulation"};
    std::vector<Flag> flags;
    for (const char* name :
         {"f04_reentrancy_mini.sol.ast.json", "f07_returns.sol.ast.json",
          "f12_coverage.sol.ast.json"}) {
        FaAsg g = fixture_graph(name);
        auto fs = extract_flags(g, 2);
        flags.insert(flags.end(), fs.begin(), fs.end());
    }
    auto manifest = nlohmann::ordered_json::parse(
        testutil::read_file(testutil::fixture_dir() + "/labels.json"));
    auto warnings = apply_labels(flags, manifest, classes);

    CHECK(flag_for(flags, "withdraw").label == 1);
    CHECK(flag_for(flags, "r").label == 3);  // matched via signature key
    CHECK(flag_for(flags, "f").label == 2);
    CHECK(flag_for(flags, "g").label == 0);

    bool warned_unknown_fn = false;
    for (const std::string& w : warnings)
        if (w.find("nosuch") != std::string::npos) warned_unknown_fn = true;
    CHECK(warned_unknown_fn);
}

TEST_CASE("unknown class names warn and leave the default label") {
    FaAsg g = fixture_graph("f03_assign.sol.ast.json");
    std::vector<Flag> flags = extract_flags(g, 1);
    nlohmann::ordered_json manifest = {{"f03_assign.sol", {{"f", "bogus_class"}}}};
    auto warnings = apply_labels(flags, manifest, {"safe", "vulnerable"});
    CHECK(flags[0].label == 0);
    REQUIRE_FALSE(warnings.empty());
    CHECK(warnings[0].find("bogus_class") != std::string::npos);
}

TEST_CASE("group kind names round-trip") {
    for (GroupKind k : {GroupKind::Function, GroupKind::Variable, GroupKind::Context})
        CHECK(group_kind_from_name(group_kind_name(k)) == k);
    CHECK_THROWS_AS(group_kind_from_name("Widget"), SchemaMismatch);
}
