#include "doctest.h"
#include "flagforge/ast.hpp"

#include "util.hpp"

using namespace flagforge;
using testutil::load_fixture;

TEST_CASE("minimal document parses with declaration root") {
    AstTree t = parse_ast_json(R"({
        "id": 1, "nodeType": "SourceUnit",
        "nodes": [{"id": 2, "nodeType": "ContractDefinition", "name": "C",
                   "nodes": [{"id": 3, "nodeType": "FunctionDefinition", "name": "f"}]}]
    })");
    CHECK(t.nodes.size() >= 2);
    CHECK(t.root == 1);
    CHECK(t.declaration_roots == std::set<NodeId>{3});
}

TEST_CASE("duplicate id is rejected") {
    CHECK_THROWS_AS(parse_ast_json(R"({
        "id": 7, "nodeType": "SourceUnit",
        "nodes": [{"id": 7, "nodeType": "ContractDefinition", "name": "C"}]
    })"),
                    DuplicateId);
}

TEST_CASE("malformed and schema errors") {
    CHECK_THROWS_AS(parse_ast_json("{not json"), MalformedJson);
    CHECK_THROWS_AS(parse_ast_json(R"({"id": 1})"), SchemaMismatch);
    CHECK_THROWS_AS(parse_ast_json(R"([1, 2])"), SchemaMismatch);
}

TEST_CASE("fixture with 3 functions and 2 state variables has 5 declaration roots") {
    AstTree t = load_fixture("f02_five_decls.sol.ast.json");
    CHECK(t.declaration_roots == std::set<NodeId>{3, 4, 5, 9, 13});
}

TEST_CASE("locals are not declaration roots and map to their function") {
    AstTree t = load_fixture("f07_returns.sol.ast.json");
    // parameter and return declarations sit inside ParameterLists, not the contract
    CHECK(t.declaration_roots == std::set<NodeId>{3});
    CHECK(t.enclosing_decl.at(5) == 3);
    CHECK(t.enclosing_decl.at(7) == 3);
    CHECK(t.enclosing_decl.at(8) == 3);
}

TEST_CASE("state variable is a declaration root") {
    AstTree t = load_fixture("f03_assign.sol.ast.json");
    CHECK(t.declaration_roots.count(3) == 1);
}

TEST_CASE("every node inside a function subtree maps to that function") {
    AstTree t = load_fixture("f04_reentrancy_mini.sol.ast.json");
    // independent recursive walk from the function root
    std::vector<NodeId> stack{4};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        CHECK(t.enclosing_decl.at(id) == 4);
        for (NodeId c : t.node(id).children) stack.push_back(c);
    }
    // scaffolding has no enclosing declaration
    CHECK(t.enclosing_decl.count(1) == 0);
    CHECK(t.enclosing_decl.count(2) == 0);
}

TEST_CASE("synthetic negative ids follow depth-first document order") {
    AstTree t = load_fixture("f11_synthetic.sol.ast.json");
    CHECK(t.node(-1).node_type == "ContractDefinition");
    CHECK(t.node(-2).node_type == "ParameterList");
    CHECK(t.node(-3).node_type == "ParameterList");
    CHECK(t.node(-4).node_type == "Block");
    CHECK(t.node(-5).node_type == "Literal");
    CHECK(t.node(10).node_type == "FunctionDefinition");
    CHECK(t.node(20).node_type == "ExpressionStatement");
    CHECK(t.parent.at(10) == -1);
    CHECK(t.parent.at(-5) == 20);
}

TEST_CASE("child roles and scalar attributes are preserved") {
    AstTree t = load_fixture("f03_assign.sol.ast.json");
    CHECK(t.node(9).attributes.at("operator") == "=");
    CHECK(t.node(10).attributes.at("child_role") == "leftHandSide");
    CHECK(t.node(11).attributes.at("value") == "1");
    CHECK(t.node(11).attributes.at("typeString") == "int_const 1");
    CHECK(t.node(10).referenced_declaration == NodeId{3});
}

TEST_CASE("memberName is used as a name fallback") {
    AstTree t = load_fixture("f04_reentrancy_mini.sol.ast.json");
    CHECK(t.node(12).name == "sender");
}

TEST_CASE("tree serialization round-trips") {
    for (const char* name : {"f02_five_decls.sol.ast.json", "f04_reentrancy_mini.sol.ast.json",
                             "f11_synthetic.sol.ast.json"}) {
        AstTree t = load_fixture(name);
        AstTree u = tree_from_json(tree_to_json(t));
        CHECK(tree_to_json(t).dump() == tree_to_json(u).dump());
        CHECK(t.declaration_roots == u.declaration_roots);
        CHECK(t.enclosing_decl == u.enclosing_decl);
    }
}

TEST_CASE("node_text joins type, name, operator and value") {
    AstNode op;
    op.node_type = "BinaryOperation";
    op.attributes["operator"] = "+";
    CHECK(node_text(op) == "BinaryOperation +");

    AstNode lit;
    lit.node_type = "Literal";
    lit.attributes["value"] = "0";
    CHECK(node_text(lit) == "Literal 0");

    AstNode ident;
    ident.node_type = "Identifier";
    ident.name = "x";
    CHECK(node_text(ident) == "Identifier x");
}
