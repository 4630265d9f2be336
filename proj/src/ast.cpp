#include "flagforge/ast.hpp"

#include <algorithm>

namespace flagforge {

using json = nlohmann::ordered_json;

const AstNode& AstTree::node(NodeId id) const {
    auto it = nodes.find(id);
    if (it == nodes.end())
        throw SchemaMismatch("unknown node id " + std::to_string(id));
    return it->second;
}

namespace {

bool is_ast_node(const json& j) {
    return j.is_object() && j.contains("nodeType") && j["nodeType"].is_string();
}

// Scalar attributes the graph builder and tokenizer care about.
const char* kScalarAttrs[] = {"operator", "value", "visibility", "kind"};

struct Parser {
    AstTree tree;
    NodeId next_synthetic = -1;

    NodeId parse_node(const json& j, const std::string& role) {
        AstNode n;
        if (j.contains("id") && j["id"].is_number_integer()) {
            n.id = j["id"].get<NodeId>();
        } else {
            n.id = next_synthetic--;
        }
        if (tree.nodes.count(n.id))
            throw DuplicateId("duplicate node id " + std::to_string(n.id));
        tree.nodes.emplace(n.id, AstNode{});  // reserve

        n.node_type = j["nodeType"].get<std::string>();
        if (j.contains("name") && j["name"].is_string())
            n.name = j["name"].get<std::string>();
        else if (j.contains("memberName") && j["memberName"].is_string())
            n.name = j["memberName"].get<std::string>();
        if (j.contains("src") && j["src"].is_string())
            n.src = j["src"].get<std::string>();
        if (j.contains("referencedDeclaration") && j["referencedDeclaration"].is_number_integer())
            n.referenced_declaration = j["referencedDeclaration"].get<NodeId>();
        if (j.contains("baseFunctions") && j["baseFunctions"].is_array()) {
            for (const auto& b : j["baseFunctions"]) {
                if (b.is_number_integer())
                    n.base_functions.push_back(b.get<NodeId>());
                else if (b.is_object() && b.contains("id") && b["id"].is_number_integer())
                    n.base_functions.push_back(b["id"].get<NodeId>());
            }
        }
        for (const char* key : kScalarAttrs) {
            if (!j.contains(key)) continue;
            const auto& v = j[key];
            if (v.is_string())
                n.attributes[key] = v.get<std::string>();
            else if (v.is_number() || v.is_boolean())
                n.attributes[key] = v.dump();
        }
        if (j.contains("typeDescriptions") && j["typeDescriptions"].is_object()) {
            const auto& td = j["typeDescriptions"];
            if (td.contains("typeString") && td["typeString"].is_string())
                n.attributes["typeString"] = td["typeString"].get<std::string>();
        }
        if (!role.empty())
            n.attributes["child_role"] = role;

        // Typed child fields are flattened, in document order.
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            if (key == "id" || key == "nodeType" || key == "src" || key == "typeDescriptions")
                continue;
            const json& v = it.value();
            if (is_ast_node(v)) {
                n.children.push_back(parse_node(v, key));
            } else if (v.is_array()) {
                for (const auto& elem : v)
                    if (is_ast_node(elem))
                        n.children.push_back(parse_node(elem, key));
            }
        }
        tree.nodes[n.id] = std::move(n);
        return tree.nodes[n.id].id;
    }
};

}  // namespace

AstTree parse_ast_json(const std::string& raw, const std::string& source_path) {
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw MalformedJson(std::string("AST JSON not parseable: ") + e.what());
    }
    if (!is_ast_node(doc))
        throw SchemaMismatch("root object carries no nodeType");
    Parser p;
    p.tree.source_path = source_path;
    p.tree.root = p.parse_node(doc, "");
    mark_declarations(p.tree);
    return std::move(p.tree);
}

namespace {

void walk_enclosing(AstTree& tree, NodeId id, std::optional<NodeId> current) {
    if (tree.declaration_roots.count(id)) current = id;
    if (current) tree.enclosing_decl[id] = *current;
    for (NodeId c : tree.node(id).children) walk_enclosing(tree, c, current);
}

}  // namespace

void mark_declarations(AstTree& tree) {
    tree.declaration_roots.clear();
    tree.enclosing_decl.clear();
    tree.parent.clear();
    for (const auto& [id, n] : tree.nodes)
        for (NodeId c : n.children) {
            if (!tree.has_node(c))
                throw SchemaMismatch("child id " + std::to_string(c) + " missing");
            tree.parent[c] = id;
        }
    for (const auto& [id, n] : tree.nodes) {
        if (n.node_type == "FunctionDefinition") {
            tree.declaration_roots.insert(id);
        } else if (n.node_type == "VariableDeclaration") {
            auto it = tree.parent.find(id);
            if (it != tree.parent.end() &&
                tree.node(it->second).node_type == "ContractDefinition")
                tree.declaration_roots.insert(id);
        }
    }
    walk_enclosing(tree, tree.root, std::nullopt);
}

nlohmann::ordered_json tree_to_json(const AstTree& tree) {
    json j;
    j["schema_version"] = 1;
    j["source_path"] = tree.source_path;
    j["root"] = tree.root;
    json nodes = json::array();
    for (const auto& [id, n] : tree.nodes) {
        json nj;
        nj["id"] = id;
        nj["node_type"] = n.node_type;
        if (!n.name.empty()) nj["name"] = n.name;
        if (!n.src.empty()) nj["src"] = n.src;
        if (!n.attributes.empty()) {
            json attrs;
            for (const auto& [k, v] : n.attributes) attrs[k] = v;
            nj["attributes"] = attrs;
        }
        if (n.referenced_declaration) nj["referenced_declaration"] = *n.referenced_declaration;
        if (!n.base_functions.empty()) nj["base_functions"] = n.base_functions;
        nj["children"] = n.children;
        nodes.push_back(nj);
    }
    j["nodes"] = nodes;
    return j;
}

AstTree tree_from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw SchemaMismatch("unsupported AstTree schema_version");
    AstTree tree;
    tree.source_path = j.value("source_path", "");
    tree.root = j["root"].get<NodeId>();
    for (const auto& nj : j["nodes"]) {
        AstNode n;
        n.id = nj["id"].get<NodeId>();
        n.node_type = nj["node_type"].get<std::string>();
        n.name = nj.value("name", "");
        n.src = nj.value("src", "");
        if (nj.contains("attributes"))
            for (auto it = nj["attributes"].begin(); it != nj["attributes"].end(); ++it)
                n.attributes[it.key()] = it.value().get<std::string>();
        if (nj.contains("referenced_declaration"))
            n.referenced_declaration = nj["referenced_declaration"].get<NodeId>();
        if (nj.contains("base_functions"))
            for (const auto& b : nj["base_functions"]) n.base_functions.push_back(b.get<NodeId>());
        for (const auto& c : nj["children"]) n.children.push_back(c.get<NodeId>());
        if (tree.nodes.count(n.id))
            throw DuplicateId("duplicate node id " + std::to_string(n.id));
        tree.nodes.emplace(n.id, std::move(n));
    }
    mark_declarations(tree);
    return tree;
}

std::string node_text(const AstNode& n) {
    std::string text = n.node_type;
    if (!n.name.empty()) text += " " + n.name;
    if (auto it = n.attributes.find("operator"); it != n.attributes.end())
        text += " " + it->second;
    if (auto it = n.attributes.find("value"); it != n.attributes.end())
        text += " " + it->second;
    return text;
}

}  // namespace flagforge
