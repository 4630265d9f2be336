#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace flagforge {

using NodeId = std::int64_t;

struct MalformedJson : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateId : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One node of a compiler-emitted AST. Nodes without a compiler id get
/// synthetic negative ids, assigned in depth-first document order.
struct AstNode {
    NodeId id = 0;
    std::string node_type;
    std::string name;  // empty when absent
    std::map<std::string, std::string> attributes;
    std::optional<NodeId> referenced_declaration;
    std::vector<NodeId> base_functions;  // overridden function ids
    std::vector<NodeId> children;        // document order
    std::string src;
};

struct AstTree {
    NodeId root = 0;
    std::map<NodeId, AstNode> nodes;
    std::string source_path;
    // Roots of FunctionDefinition subtrees and contract-level
    // VariableDeclaration subtrees.
    std::set<NodeId> declaration_roots;
    // Nearest enclosing declaration root per node; absent for scaffolding
    // nodes (SourceUnit, ContractDefinition, pragma, ...).
    std::map<NodeId, NodeId> enclosing_decl;
    // Parent links derived from children.
    std::map<NodeId, NodeId> parent;

    const AstNode& node(NodeId id) const;
    bool has_node(NodeId id) const { return nodes.count(id) > 0; }
};

/// Parse a solc compact-JSON AST document. Typed child fields are flattened
/// into the ordered children list; the field name is kept on the child under
/// attributes["child_role"]. Declaration roots are marked on the way out.
AstTree parse_ast_json(const std::string& raw, const std::string& source_path = "");

/// Recompute declaration_roots, enclosing_decl and parent links.
void mark_declarations(AstTree& tree);

/// Internal AstTree serialization, schema_version 1. Round-trips exactly.
nlohmann::ordered_json tree_to_json(const AstTree& tree);
AstTree tree_from_json(const nlohmann::ordered_json& j);

/// Textual attribute string for one node: node_type, then name, operator
/// and literal value when present, space-joined.
std::string node_text(const AstNode& n);

}  // namespace flagforge
