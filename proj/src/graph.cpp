#include "flagforge/graph.hpp"

#include <array>

namespace flagforge {

namespace {

const std::array<std::string, kEdgeKindCount> kEdgeNames = {
    "Child",
    "Parent",
    "ReferencedDeclaration",
    "FunctionReturnParameter",
    "SuperFunction",
    "Assignment",
    "CondTrue",
    "CondFalse",
    "WhileExecution",
    "ForExecution",
    "WhileNext",
    "ForNext",
    "NextStatement",
};

const AstNode* child_with_role(const AstTree& tree, const AstNode& n, const std::string& role) {
    for (NodeId c : n.children) {
        const AstNode& cn = tree.node(c);
        auto it = cn.attributes.find("child_role");
        if (it != cn.attributes.end() && it->second == role) return &cn;
    }
    return nullptr;
}

// Leftmost descendant carrying a referencedDeclaration, LHS resolution.
std::optional<NodeId> first_referenced_decl(const AstTree& tree, NodeId id) {
    const AstNode& n = tree.node(id);
    if (n.referenced_declaration) return n.referenced_declaration;
    for (NodeId c : n.children)
        if (auto r = first_referenced_decl(tree, c)) return r;
    return std::nullopt;
}

}  // namespace

const std::string& edge_kind_name(EdgeKind k) {
    return kEdgeNames.at(static_cast<size_t>(k));
}

EdgeKind edge_kind_from_name(const std::string& name) {
    for (size_t i = 0; i < kEdgeNames.size(); ++i)
        if (kEdgeNames[i] == name) return static_cast<EdgeKind>(i);
    throw SchemaMismatch("unknown edge kind: " + name);
}

std::string canonical_node_type(const std::string& node_type) {
    if (node_type == "DoWhileStatement") return "WhileStatement";
    if (node_type == "UncheckedBlock") return "Block";
    return node_type;
}

FaAsg build_basic_edges(const AstTree& tree) {
    FaAsg g;
    g.tree_ref = tree.source_path;
    for (const auto& [id, n] : tree.nodes) {
        FaNode fn;
        fn.id = id;
        fn.node_type = n.node_type;
        fn.text = node_text(n);
        fn.name = n.name;
        if (auto it = tree.enclosing_decl.find(id); it != tree.enclosing_decl.end())
            fn.decl = it->second;
        if (n.node_type == "FunctionDefinition") {
            std::string sig = n.name + "(";
            if (const AstNode* params = child_with_role(tree, n, "parameters")) {
                bool first = true;
                for (NodeId p : params->children) {
                    const AstNode& pn = tree.node(p);
                    if (pn.node_type != "VariableDeclaration") continue;
                    if (!first) sig += ",";
                    first = false;
                    auto ts = pn.attributes.find("typeString");
                    sig += ts != pn.attributes.end() ? ts->second : "?";
                }
            }
            sig += ")";
            fn.signature = sig;
        }
        g.nodes.emplace(id, std::move(fn));
    }
    for (const auto& [id, n] : tree.nodes)
        for (NodeId c : n.children) {
            g.add_edge(id, c, EdgeKind::Child);
            g.add_edge(c, id, EdgeKind::Parent);
        }
    return g;
}

void add_data_flow_edges(FaAsg& g, const AstTree& tree) {
    for (const auto& [id, n] : tree.nodes) {
        if ((n.node_type == "Identifier" || n.node_type == "MemberAccess") &&
            n.referenced_declaration) {
            NodeId target = *n.referenced_declaration;
            if (tree.has_node(target)) {
                g.add_edge(id, target, EdgeKind::ReferencedDeclaration);
            } else {
                g.warnings.push_back("dangling reference " + std::to_string(target) +
                                     " from node " + std::to_string(id));
            }
        }
        if (n.node_type == "FunctionDefinition") {
            if (const AstNode* ret = child_with_role(tree, n, "returnParameters")) {
                for (NodeId p : ret->children)
                    if (tree.node(p).node_type == "VariableDeclaration")
                        g.add_edge(id, p, EdgeKind::FunctionReturnParameter);
            }
            for (NodeId base : n.base_functions)
                if (tree.has_node(base))
                    g.add_edge(id, base, EdgeKind::SuperFunction);
        }
        if (n.node_type == "Assignment") {
            if (const AstNode* lhs = child_with_role(tree, n, "leftHandSide"))
                if (auto decl = first_referenced_decl(tree, lhs->id))
                    if (tree.has_node(*decl))
                        g.add_edge(id, *decl, EdgeKind::Assignment);
        }
    }
}

void add_control_flow_edges(FaAsg& g, const AstTree& tree) {
    for (const auto& [id, n] : tree.nodes) {
        std::string type = canonical_node_type(n.node_type);
        if (type == "IfStatement") {
            if (const AstNode* t = child_with_role(tree, n, "trueBody"))
                g.add_edge(id, t->id, EdgeKind::CondTrue);
            if (const AstNode* f = child_with_role(tree, n, "falseBody"))
                g.add_edge(id, f->id, EdgeKind::CondFalse);
        } else if (type == "WhileStatement" || type == "ForStatement") {
            bool is_while = type == "WhileStatement";
            const AstNode* cond = child_with_role(tree, n, "condition");
            if (!cond) continue;  // for(;;) has no condition
            g.add_edge(id, cond->id,
                       is_while ? EdgeKind::WhileExecution : EdgeKind::ForExecution);
            if (const AstNode* body = child_with_role(tree, n, "body"))
                g.add_edge(cond->id, body->id,
                           is_while ? EdgeKind::WhileNext : EdgeKind::ForNext);
        } else if (type == "Block") {
            std::vector<NodeId> stmts;
            for (NodeId c : n.children) {
                const AstNode& cn = tree.node(c);
                auto it = cn.attributes.find("child_role");
                if (it != cn.attributes.end() && it->second == "statements")
                    stmts.push_back(c);
            }
            for (size_t i = 0; i + 1 < stmts.size(); ++i)
                g.add_edge(stmts[i], stmts[i + 1], EdgeKind::NextStatement);
        }
    }
}

FaAsg build_fa_asg(const AstTree& tree) {
    FaAsg g = build_basic_edges(tree);
    add_data_flow_edges(g, tree);
    add_control_flow_edges(g, tree);
    return g;
}

std::vector<NodeId> subtree_nodes(const AstTree& tree, NodeId root) {
    std::vector<NodeId> out;
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        out.push_back(id);
        const AstNode& n = tree.node(id);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
            stack.push_back(*it);
    }
    return out;
}

nlohmann::ordered_json fa_asg_to_json(const FaAsg& g) {
    nlohmann::ordered_json j;
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& [id, n] : g.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = id;
        nj["node_type"] = n.node_type;
        nj["text"] = n.text;
        if (n.decl)
            nj["decl"] = *n.decl;
        else
            nj["decl"] = nullptr;
        nodes.push_back(nj);
    }
    j["nodes"] = nodes;
    auto edges = nlohmann::ordered_json::array();
    for (const Edge& e : g.edges)
        edges.push_back({e.src, e.dst, edge_kind_name(e.kind)});
    j["edges"] = edges;
    j["schema_version"] = 1;
    return j;
}

}  // namespace flagforge
