#include "flagforge/model.hpp"

#include <sstream>

namespace flagforge {

nlohmann::ordered_json ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["embed_dim"] = embed_dim;
    j["sage_dim"] = sage_dim;
    j["sage_layers"] = sage_layers;
    j["gat_dim"] = gat_dim;
    j["gat_heads"] = gat_heads;
    j["gat_layers"] = gat_layers;
    j["classes"] = classes;
    j["dropout_gnn"] = dropout_gnn;
    j["dropout_clf"] = dropout_clf;
    j["leaky_slope"] = leaky_slope;
    j["vocab_size"] = vocab_size;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
    ModelConfig c;
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.sage_dim = j.value("sage_dim", c.sage_dim);
    c.sage_layers = j.value("sage_layers", c.sage_layers);
    c.gat_dim = j.value("gat_dim", c.gat_dim);
    c.gat_heads = j.value("gat_heads", c.gat_heads);
    c.gat_layers = j.value("gat_layers", c.gat_layers);
    c.classes = j.value("classes", c.classes);
    c.dropout_gnn = j.value("dropout_gnn", c.dropout_gnn);
    c.dropout_clf = j.value("dropout_clf", c.dropout_clf);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    return c;
}

std::string ModelConfig::hash() const {
    std::ostringstream os;
    os << std::hex << fnv1a(to_json().dump());
    return os.str();
}

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
    if (cfg.gat_dim % cfg.gat_heads != 0)
        throw ConfigMismatch("gat_dim must be divisible by gat_heads");
    ModelParams p;
    p.cfg = cfg;
    p.token_embedding = Tensor::glorot(cfg.vocab_size, cfg.embed_dim, rng);
    for (int k = 0; k < cfg.sage_layers; ++k) {
        int in = k == 0 ? cfg.embed_dim : cfg.sage_dim;
        p.sage_w.push_back(Tensor::glorot(2 * in, cfg.sage_dim, rng));
        p.sage_b.push_back(Tensor::zeros(1, cfg.sage_dim, true));
    }
    for (int l = 0; l < cfg.gat_layers; ++l) {
        int heads = l == 0 ? cfg.gat_heads : 1;
        int head_dim = cfg.gat_dim / heads;
        GatLayerParams layer;
        for (int h = 0; h < heads; ++h) {
            layer.w.push_back(Tensor::glorot(cfg.gat_dim, head_dim, rng));
            layer.a_src.push_back(Tensor::glorot(head_dim, 1, rng));
            layer.a_dst.push_back(Tensor::glorot(head_dim, 1, rng));
        }
        p.gat.push_back(std::move(layer));
    }
    p.clf_w1 = Tensor::glorot(cfg.gat_dim, cfg.gat_dim, rng);
    p.clf_b1 = Tensor::zeros(1, cfg.gat_dim, true);
    p.clf_w2 = Tensor::glorot(cfg.gat_dim, cfg.gat_dim, rng);
    p.clf_b2 = Tensor::zeros(1, cfg.gat_dim, true);
    p.clf_w3 = Tensor::glorot(cfg.gat_dim, cfg.classes, rng);
    p.clf_b3 = Tensor::zeros(1, cfg.classes, true);
    for (auto& [name, t] : p.named()) const_cast<Tensor&>(t).set_name(name);
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("token_embedding", token_embedding);
    for (std::size_t k = 0; k < sage_w.size(); ++k) {
        out.emplace_back("sage" + std::to_string(k) + ".w", sage_w[k]);
        out.emplace_back("sage" + std::to_string(k) + ".b", sage_b[k]);
    }
    for (std::size_t l = 0; l < gat.size(); ++l)
        for (std::size_t h = 0; h < gat[l].w.size(); ++h) {
            std::string prefix = "gat" + std::to_string(l) + ".h" + std::to_string(h);
            out.emplace_back(prefix + ".w", gat[l].w[h]);
            out.emplace_back(prefix + ".a_src", gat[l].a_src[h]);
            out.emplace_back(prefix + ".a_dst", gat[l].a_dst[h]);
        }
    out.emplace_back("clf.w1", clf_w1);
    out.emplace_back("clf.b1", clf_b1);
    out.emplace_back("clf.w2", clf_w2);
    out.emplace_back("clf.b2", clf_b2);
    out.emplace_back("clf.w3", clf_w3);
    out.emplace_back("clf.b3", clf_b3);
    return out;
}

std::vector<Tensor> ModelParams::all() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

ModelParams ModelParams::from_checkpoint(const ModelConfig& cfg, const Checkpoint& ckpt) {
    Rng rng(0);
    ModelParams p = init(cfg, rng);
    auto expected = p.named();
    if (expected.size() != ckpt.params.size())
        throw ConfigMismatch("checkpoint parameter count does not match config");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& [name, t] = expected[i];
        const auto& [cname, ct] = ckpt.params[i];
        if (name != cname || t.rows() != ct.rows() || t.cols() != ct.cols())
            throw ConfigMismatch("checkpoint parameter '" + cname + "' does not match config");
        const_cast<Tensor&>(t).data() = ct.data();
    }
    return p;
}

Batch make_batch(const std::vector<const Flag*>& flags, const BpeVocab& vocab) {
    Batch b;
    b.flags = flags;
    int node_offset = 0;
    int group_offset = 0;
    for (const Flag* f : flags) {
        if (f->nodes.empty()) throw EmptyGraph("flag with no nodes in batch");
        for (const FlagNode& n : f->nodes) {
            std::vector<int> rows;
            for (int id : encode(vocab, n.text)) {
                rows.push_back(static_cast<int>(b.token_ids.size()));
                b.token_ids.push_back(id);
            }
            b.token_groups.push_back(std::move(rows));
            b.in_neighbors.emplace_back();
        }
        for (const FlagEdge& e : f->edges)
            b.in_neighbors[node_offset + e.dst].push_back(node_offset + e.src);
        b.pool_groups.resize(group_offset + f->groups.size());
        for (std::size_t i = 0; i < f->nodes.size(); ++i)
            b.pool_groups[group_offset + f->pool_map[i]].push_back(node_offset +
                                                                   static_cast<int>(i));
        PooledFlag pooled = pool_structure(*f);
        for (const auto& [gu, gv] : pooled.edges)
            b.pooled_edges.emplace_back(group_offset + gu, group_offset + gv);
        std::vector<int> supers;
        for (std::size_t gi = 0; gi < f->groups.size(); ++gi)
            supers.push_back(group_offset + static_cast<int>(gi));
        b.graph_supernodes.push_back(std::move(supers));
        b.labels.push_back(f->label.value_or(-1));
        node_offset += static_cast<int>(f->nodes.size());
        group_offset += static_cast<int>(f->groups.size());
    }
    return b;
}

Tensor embed_nodes(const Batch& batch, const Tensor& token_embedding) {
    Tensor tokens = gather_rows(token_embedding, batch.token_ids);
    return mean_over_rows(tokens, batch.token_groups);
}

Tensor sage_forward(const Tensor& h, const std::vector<std::vector<int>>& in_neighbors,
                    const Tensor& w, const Tensor& b, bool activation) {
    Tensor neigh = mean_over_rows(h, in_neighbors);
    Tensor z = add(matmul(concat_cols(neigh, h), w), b);
    return activation ? relu(z) : z;
}

Tensor cg_pool(const Tensor& h, const Batch& batch) {
    return mean_over_rows(h, batch.pool_groups);
}

Tensor gat_forward(const Tensor& s, const Batch& batch, const GatLayerParams& layer,
                   double leaky_slope) {
    int g = static_cast<int>(s.rows());
    std::vector<int> esrc, edst;
    for (const auto& [u, v] : batch.pooled_edges) {
        esrc.push_back(u);
        edst.push_back(v);
    }
    for (int v = 0; v < g; ++v) {  // self-loops
        esrc.push_back(v);
        edst.push_back(v);
    }
    Tensor out;
    for (std::size_t h = 0; h < layer.w.size(); ++h) {
        Tensor z = matmul(s, layer.w[h]);
        Tensor score_self = matmul(z, layer.a_src[h]);   // g x 1
        Tensor score_neigh = matmul(z, layer.a_dst[h]);  // g x 1
        Tensor logits = leaky_relu(
            add(gather_rows(score_self, edst), gather_rows(score_neigh, esrc)), leaky_slope);
        Tensor alpha = segment_softmax(logits, edst, g);
        Tensor head = segment_sum_rows(mul_rows(gather_rows(z, esrc), alpha), edst, g);
        out = h == 0 ? head : concat_cols(out, head);
    }
    return out;
}

Tensor classify(const Tensor& s_final, const Batch& batch, const ModelParams& params,
                bool train_mode, Rng& rng) {
    for (const auto& supers : batch.graph_supernodes)
        if (supers.empty()) throw EmptyGraph("graph with no supernodes");
    Tensor hg = mean_over_rows(s_final, batch.graph_supernodes);
    Tensor h1 = relu(add(matmul(hg, params.clf_w1), params.clf_b1));
    h1 = dropout(h1, params.cfg.dropout_clf, train_mode, rng);
    Tensor h2 = relu(add(matmul(h1, params.clf_w2), params.clf_b2));
    h2 = dropout(h2, params.cfg.dropout_clf, train_mode, rng);
    Tensor logits = add(matmul(h2, params.clf_w3), params.clf_b3);
    return row_softmax(logits);
}

Tensor full_forward(const Batch& batch, const ModelParams& params, bool train_mode, Rng& rng) {
    Tensor h = embed_nodes(batch, params.token_embedding);
    for (int k = 0; k < params.cfg.sage_layers; ++k) {
        // last SAGE layer has no activation
        bool act = k + 1 < params.cfg.sage_layers;
        h = sage_forward(h, batch.in_neighbors, params.sage_w[k], params.sage_b[k], act);
        if (act) h = dropout(h, params.cfg.dropout_gnn, train_mode, rng);
    }
    Tensor s = cg_pool(h, batch);
    for (int l = 0; l < params.cfg.gat_layers; ++l) {
        s = relu(gat_forward(s, batch, params.gat[l], params.cfg.leaky_slope));
        if (l + 1 < params.cfg.gat_layers)
            s = dropout(s, params.cfg.dropout_gnn, train_mode, rng);
    }
    return classify(s, batch, params, train_mode, rng);
}

}  // namespace flagforge
