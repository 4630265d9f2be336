#pragma once

#include <optional>
#include <set>
#include <utility>

#include "flagforge/graph.hpp"

namespace flagforge {

struct CoverageOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GroupKind { Function, Variable, Context };

const std::string& group_kind_name(GroupKind k);
GroupKind group_kind_from_name(const std::string& name);

struct FlagGroup {
    GroupKind kind = GroupKind::Context;
    NodeId decl = 0;  // original declaration id; 0 for the Context group
    auto operator<=>(const FlagGroup&) const = default;
};

struct FlagNode {
    NodeId orig_id = 0;
    std::string node_type;
    std::string text;
    std::optional<NodeId> decl;
};

struct FlagEdge {
    int src = 0;
    int dst = 0;
    EdgeKind kind = EdgeKind::Child;
    auto operator<=>(const FlagEdge&) const = default;
};

/// Function-level abstract syntax graph: one target function expanded to
/// the referenced declarations within the coverage bound. Nodes are
/// re-indexed 0..n-1; orig_id maps back to the FA-ASG.
struct Flag {
    NodeId target_function = 0;
    std::string target_name;
    std::string target_signature;  // "name(type,...)" for overload labels
    std::string source_path;
    int coverage = 1;
    std::vector<FlagNode> nodes;
    std::vector<FlagEdge> edges;  // induced, sorted
    std::vector<int> pool_map;    // node index -> group index
    std::vector<FlagGroup> groups;
    std::optional<int> label;
};

/// Supernode graph produced by pooling: one node per declaration group,
/// edges deduplicated from the original inter-group edges.
struct PooledFlag {
    std::vector<FlagGroup> supernodes;
    std::set<std::pair<int, int>> edges;
    int batch_id = 0;
};

/// One Flag per FunctionDefinition in the graph. Coverage c expands the
/// target's subtree by c-1 rounds of declaration references.
std::vector<Flag> extract_flags(const FaAsg& g, int coverage);

/// Assign every node to a group: its enclosing declaration subtree, or a
/// single synthetic Context group for scaffolding nodes. Group 0 is the
/// target function's group.
void build_pool_map(Flag& f);

PooledFlag pool_structure(const Flag& f);

nlohmann::ordered_json flag_to_json(const Flag& f);
Flag flag_from_json(const nlohmann::ordered_json& j);

void write_flag_dataset(const std::string& path, const std::vector<Flag>& flags);
std::vector<Flag> read_flag_dataset(const std::string& path);

/// Label manifest {"file.sol": {"functionName": "class"}}. Keys may carry a
/// parameter list ("f(uint256)") to disambiguate overloads. Unlabeled
/// functions get class 0. Returns warnings for labels that match nothing.
std::vector<std::string> apply_labels(std::vector<Flag>& flags,
                                      const nlohmann::ordered_json& manifest,
                                      const std::vector<std::string>& class_names);

}  // namespace flagforge
