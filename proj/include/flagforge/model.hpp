#pragma once

#include "flagforge/bpe.hpp"
#include "flagforge/flag.hpp"
#include "flagforge/nn.hpp"

namespace flagforge {

struct EmptyGraph : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    int embed_dim = 512;
    int sage_dim = 1024;
    int sage_layers = 3;
    int gat_dim = 1024;
    int gat_heads = 4;  // first GAT layer; later layers use 1 head
    int gat_layers = 3;
    int classes = 4;
    double dropout_gnn = 0.5;
    double dropout_clf = 0.3;
    double leaky_slope = 0.2;
    int vocab_size = 0;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::ordered_json& j);
    std::string hash() const;  // fnv1a of the canonical JSON dump
};

struct GatLayerParams {
    std::vector<Tensor> w;      // per head: in x head_dim
    std::vector<Tensor> a_src;  // per head: head_dim x 1, self/destination part
    std::vector<Tensor> a_dst;  // per head: head_dim x 1, neighbor part
};

struct ModelParams {
    ModelConfig cfg;
    Tensor token_embedding;  // vocab_size x embed_dim
    std::vector<Tensor> sage_w, sage_b;
    std::vector<GatLayerParams> gat;
    Tensor clf_w1, clf_b1, clf_w2, clf_b2, clf_w3, clf_b3;

    static ModelParams init(const ModelConfig& cfg, Rng& rng);
    std::vector<Tensor> all() const;
    std::vector<std::pair<std::string, Tensor>> named() const;
    static ModelParams from_checkpoint(const ModelConfig& cfg, const Checkpoint& ckpt);
};

/// A set of Flags merged into one forward pass; graphs stay independent
/// (no cross-graph edges, per-graph readout).
struct Batch {
    std::vector<const Flag*> flags;
    std::vector<int> token_ids;                      // flattened, row per token
    std::vector<std::vector<int>> token_groups;      // per node: token row indices
    std::vector<std::vector<int>> in_neighbors;      // per node
    std::vector<std::vector<int>> pool_groups;       // per supernode: node indices
    std::vector<std::pair<int, int>> pooled_edges;   // directed, no self-loops
    std::vector<std::vector<int>> graph_supernodes;  // per graph
    std::vector<int> labels;                         // -1 when unlabeled
};

Batch make_batch(const std::vector<const Flag*>& flags, const BpeVocab& vocab);

/// h0: mean of the node's token embeddings.
Tensor embed_nodes(const Batch& batch, const Tensor& token_embedding);

/// One GraphSAGE layer: mean over in-neighbors, concat with self, linear.
Tensor sage_forward(const Tensor& h, const std::vector<std::vector<int>>& in_neighbors,
                    const Tensor& w, const Tensor& b, bool activation);

/// Supernode features: group-wise mean of node embeddings.
Tensor cg_pool(const Tensor& h, const Batch& batch);

/// One (multi-head) GAT layer over the pooled graph; self-loops are added
/// to every supernode before attention. Heads are concatenated.
Tensor gat_forward(const Tensor& s, const Batch& batch, const GatLayerParams& layer,
                   double leaky_slope);

/// Per-graph mean readout followed by the 3-layer classifier and softmax.
Tensor classify(const Tensor& s_final, const Batch& batch, const ModelParams& params,
                bool train_mode, Rng& rng);

/// Full two-stage forward: embed -> SAGE x3 -> CGPool -> GAT x3 -> classify.
/// Returns one probability row per graph.
Tensor full_forward(const Batch& batch, const ModelParams& params, bool train_mode, Rng& rng);

}  // namespace flagforge
