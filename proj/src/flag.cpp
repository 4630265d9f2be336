#include "flagforge/flag.hpp"

#include <algorithm>
#include <array>
#include <fstream>

namespace flagforge {

namespace {

const std::array<std::string, 3> kGroupNames = {"Function", "Variable", "Context"};

bool drives_expansion(EdgeKind k) {
    return k == EdgeKind::ReferencedDeclaration || k == EdgeKind::Assignment ||
           k == EdgeKind::SuperFunction;
}

}  // namespace

const std::string& group_kind_name(GroupKind k) {
    return kGroupNames.at(static_cast<size_t>(k));
}

GroupKind group_kind_from_name(const std::string& name) {
    for (size_t i = 0; i < kGroupNames.size(); ++i)
        if (kGroupNames[i] == name) return static_cast<GroupKind>(i);
    throw SchemaMismatch("unknown group kind: " + name);
}

std::vector<Flag> extract_flags(const FaAsg& g, int coverage) {
    if (coverage < 1)
        throw CoverageOutOfRange("coverage must be >= 1, got " + std::to_string(coverage));

    // Declaration subtree membership: all nodes whose nearest enclosing
    // declaration root is r.
    std::map<NodeId, std::vector<NodeId>> members;
    for (const auto& [id, n] : g.nodes)
        if (n.decl) members[*n.decl].push_back(id);

    std::vector<Flag> flags;
    for (const auto& [fid, fn] : g.nodes) {
        if (fn.node_type != "FunctionDefinition") continue;

        std::set<NodeId> included_decls{fid};
        std::set<NodeId> node_set(members[fid].begin(), members[fid].end());
        for (int round = 1; round < coverage; ++round) {
            std::set<NodeId> frontier;
            for (const Edge& e : g.edges) {
                if (!drives_expansion(e.kind)) continue;
                if (!node_set.count(e.src)) continue;
                auto it = g.nodes.find(e.dst);
                if (it == g.nodes.end() || !it->second.decl) continue;
                NodeId root = *it->second.decl;
                if (!included_decls.count(root)) frontier.insert(root);
            }
            if (frontier.empty()) break;  // fixed point
            for (NodeId root : frontier) {
                included_decls.insert(root);
                node_set.insert(members[root].begin(), members[root].end());
            }
        }

        Flag f;
        f.target_function = fid;
        f.target_name = fn.name;
        f.target_signature = fn.signature;
        f.source_path = g.tree_ref;
        f.coverage = coverage;
        std::map<NodeId, int> index;
        for (NodeId id : node_set) {  // std::set iterates in id order
            index[id] = static_cast<int>(f.nodes.size());
            const FaNode& n = g.nodes.at(id);
            f.nodes.push_back(FlagNode{id, n.node_type, n.text, n.decl});
        }
        for (const Edge& e : g.edges) {
            auto su = index.find(e.src);
            auto sv = index.find(e.dst);
            if (su != index.end() && sv != index.end())
                f.edges.push_back(FlagEdge{su->second, sv->second, e.kind});
        }
        std::sort(f.edges.begin(), f.edges.end());
        build_pool_map(f);
        flags.push_back(std::move(f));
    }
    return flags;
}

void build_pool_map(Flag& f) {
    f.groups.clear();
    f.pool_map.assign(f.nodes.size(), -1);

    // Group 0 is the target function; other declarations follow in id order,
    // then a single Context group for scaffolding nodes, if any.
    std::map<NodeId, std::string> decl_types;
    for (const FlagNode& n : f.nodes)
        if (n.decl && n.orig_id == *n.decl) decl_types[*n.decl] = n.node_type;

    std::map<NodeId, int> group_of_decl;
    f.groups.push_back(FlagGroup{GroupKind::Function, f.target_function});
    group_of_decl[f.target_function] = 0;
    for (const FlagNode& n : f.nodes) {
        if (!n.decl || group_of_decl.count(*n.decl)) continue;
        // Seen out of order only if node ids interleave; assign in first-seen
        // order over the id-sorted node list for determinism.
        GroupKind kind = decl_types.count(*n.decl) &&
                                 decl_types[*n.decl] != "FunctionDefinition"
                             ? GroupKind::Variable
                             : GroupKind::Function;
        group_of_decl[*n.decl] = static_cast<int>(f.groups.size());
        f.groups.push_back(FlagGroup{kind, *n.decl});
    }
    int context_group = -1;
    for (size_t i = 0; i < f.nodes.size(); ++i) {
        if (f.nodes[i].decl) {
            f.pool_map[i] = group_of_decl.at(*f.nodes[i].decl);
        } else {
            if (context_group < 0) {
                context_group = static_cast<int>(f.groups.size());
                f.groups.push_back(FlagGroup{GroupKind::Context, 0});
            }
            f.pool_map[i] = context_group;
        }
    }
}

PooledFlag pool_structure(const Flag& f) {
    PooledFlag p;
    p.supernodes = f.groups;
    for (const FlagEdge& e : f.edges) {
        int gu = f.pool_map.at(e.src);
        int gv = f.pool_map.at(e.dst);
        if (gu != gv) p.edges.insert({gu, gv});
    }
    return p;
}

nlohmann::ordered_json flag_to_json(const Flag& f) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["path"] = f.source_path;
    j["function"] = f.target_name;
    j["signature"] = f.target_signature;
    j["target_id"] = f.target_function;
    j["coverage"] = f.coverage;
    if (f.label)
        j["label"] = *f.label;
    else
        j["label"] = nullptr;
    auto nodes = nlohmann::ordered_json::array();
    for (size_t i = 0; i < f.nodes.size(); ++i) {
        nlohmann::ordered_json nj;
        nj["id"] = f.nodes[i].orig_id;
        nj["node_type"] = f.nodes[i].node_type;
        nj["text"] = f.nodes[i].text;
        if (f.nodes[i].decl)
            nj["decl"] = *f.nodes[i].decl;
        else
            nj["decl"] = nullptr;
        nj["group"] = f.pool_map.at(i);
        nodes.push_back(nj);
    }
    j["nodes"] = nodes;
    auto groups = nlohmann::ordered_json::array();
    for (const FlagGroup& gr : f.groups)
        groups.push_back({{"kind", group_kind_name(gr.kind)}, {"decl", gr.decl}});
    j["groups"] = groups;
    auto edges = nlohmann::ordered_json::array();
    for (const FlagEdge& e : f.edges)
        edges.push_back({e.src, e.dst, edge_kind_name(e.kind)});
    j["edges"] = edges;
    return j;
}

Flag flag_from_json(const nlohmann::ordered_json& j) {
    if (j.value("schema_version", 0) != 1)
        throw SchemaMismatch("unsupported Flag schema_version");
    Flag f;
    f.source_path = j.value("path", "");
    f.target_name = j.value("function", "");
    f.target_signature = j.value("signature", "");
    f.target_function = j.value("target_id", NodeId{0});
    f.coverage = j.value("coverage", 1);
    if (j.contains("label") && !j["label"].is_null()) f.label = j["label"].get<int>();
    for (const auto& nj : j["nodes"]) {
        FlagNode n;
        n.orig_id = nj["id"].get<NodeId>();
        n.node_type = nj["node_type"].get<std::string>();
        n.text = nj["text"].get<std::string>();
        if (!nj["decl"].is_null()) n.decl = nj["decl"].get<NodeId>();
        f.nodes.push_back(std::move(n));
        f.pool_map.push_back(nj["group"].get<int>());
    }
    for (const auto& gj : j["groups"])
        f.groups.push_back(FlagGroup{group_kind_from_name(gj["kind"].get<std::string>()),
                                     gj["decl"].get<NodeId>()});
    for (const auto& ej : j["edges"])
        f.edges.push_back(FlagEdge{ej[0].get<int>(), ej[1].get<int>(),
                                   edge_kind_from_name(ej[2].get<std::string>())});
    return f;
}

void write_flag_dataset(const std::string& path, const std::vector<Flag>& flags) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const Flag& f : flags) out << flag_to_json(f).dump() << "\n";
}

std::vector<Flag> read_flag_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Flag> flags;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        flags.push_back(flag_from_json(nlohmann::ordered_json::parse(line)));
    }
    return flags;
}

namespace {

std::string basename_of(const std::string& path) {
    auto pos = path.find_last_of("/\\");
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

std::vector<std::string> apply_labels(std::vector<Flag>& flags,
                                      const nlohmann::ordered_json& manifest,
                                      const std::vector<std::string>& class_names) {
    std::map<std::string, int> class_id;
    for (size_t i = 0; i < class_names.size(); ++i)
        class_id[class_names[i]] = static_cast<int>(i);

    std::vector<std::string> warnings;
    std::set<std::pair<std::string, std::string>> used;
    for (Flag& f : flags) {
        f.label = 0;
        std::string base = basename_of(f.source_path);
        std::vector<std::string> candidates = {f.source_path, base};
        for (const std::string& suffix : {std::string(".ast.json"), std::string(".json")})
            if (base.size() > suffix.size() &&
                base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
                candidates.push_back(base.substr(0, base.size() - suffix.size()));
        const nlohmann::ordered_json* entry = nullptr;
        std::string file_key;
        for (const std::string& key : candidates) {
            if (manifest.contains(key)) {
                entry = &manifest[key];
                file_key = key;
                break;
            }
        }
        if (!entry) continue;
        std::string match;
        if (entry->contains(f.target_signature))
            match = f.target_signature;
        else if (entry->contains(f.target_name))
            match = f.target_name;
        else
            continue;
        std::string cls = (*entry)[match].get<std::string>();
        auto it = class_id.find(cls);
        if (it == class_id.end()) {
            warnings.push_back("unknown class '" + cls + "' for " + file_key + ":" + match);
            continue;
        }
        f.label = it->second;
        used.insert({file_key, match});
    }
    for (auto it = manifest.begin(); it != manifest.end(); ++it)
        for (auto fit = it.value().begin(); fit != it.value().end(); ++fit)
            if (!used.count({it.key(), fit.key()}))
                warnings.push_back("label names unknown function " + it.key() + ":" + fit.key());
    return warnings;
}

}  // namespace flagforge
