#pragma once

#include <compare>
#include <set>
#include <string>
#include <vector>

#include "flagforge/ast.hpp"

namespace flagforge {

enum class EdgeKind {
    Child,
    Parent,
    ReferencedDeclaration,
    FunctionReturnParameter,
    SuperFunction,
    Assignment,
    CondTrue,
    CondFalse,
    WhileExecution,
    ForExecution,
    WhileNext,
    ForNext,
    NextStatement,
};

constexpr int kEdgeKindCount = 13;

const std::string& edge_kind_name(EdgeKind k);
EdgeKind edge_kind_from_name(const std::string& name);

/// Canonical node type after the schema-variant alias table
/// (DoWhileStatement -> WhileStatement, UncheckedBlock -> Block).
std::string canonical_node_type(const std::string& node_type);

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    EdgeKind kind = EdgeKind::Child;
    auto operator<=>(const Edge&) const = default;
};

struct FaNode {
    NodeId id = 0;
    std::string node_type;
    std::string text;
    std::optional<NodeId> decl;  // enclosing declaration root
    std::string name;
    std::string signature;  // "name(type,...)", FunctionDefinition only
};

/// Flow-augmented abstract syntax graph. Edges are held sorted by
/// (src, dst, kind) and deduplicated.
struct FaAsg {
    std::map<NodeId, FaNode> nodes;
    std::set<Edge> edges;
    std::string tree_ref;
    std::vector<std::string> warnings;  // dangling references, non-fatal

    void add_edge(NodeId src, NodeId dst, EdgeKind kind) {
        edges.insert(Edge{src, dst, kind});
    }
    bool has_edge(NodeId src, NodeId dst, EdgeKind kind) const {
        return edges.count(Edge{src, dst, kind}) > 0;
    }
};

FaAsg build_basic_edges(const AstTree& tree);
void add_data_flow_edges(FaAsg& g, const AstTree& tree);
void add_control_flow_edges(FaAsg& g, const AstTree& tree);
FaAsg build_fa_asg(const AstTree& tree);

/// Node ids of the subtree rooted at `root`, in DFS order.
std::vector<NodeId> subtree_nodes(const AstTree& tree, NodeId root);

/// One JSON-lines record per graph, schema_version 1.
nlohmann::ordered_json fa_asg_to_json(const FaAsg& g);

}  // namespace flagforge
