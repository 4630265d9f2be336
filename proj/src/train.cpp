#include "flagforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flagforge {

nlohmann::ordered_json TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    ModelConfig mc = model;
    mc.classes = classes();  // canonical: the class list wins
    j["lr"] = lr;
    j["weight_decay"] = weight_decay;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["seed"] = seed;
    j["coverage"] = coverage;
    j["class_names"] = class_names;
    j["class_weights"] = class_weights;
    j["checkpoint_policy"] = checkpoint_policy;
    j["model"] = mc.to_json();
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
    TrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.seed = j.value("seed", c.seed);
    c.coverage = j.value("coverage", c.coverage);
    if (j.contains("class_names"))
        c.class_names = j["class_names"].get<std::vector<std::string>>();
    c.class_weights = j.value("class_weights", c.class_weights);
    c.checkpoint_policy = j.value("checkpoint_policy", c.checkpoint_policy);
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
    c.model.classes = c.classes();
    return c;
}

std::string TrainConfig::hash() const {
    std::ostringstream os;
    os << std::hex << fnv1a(to_json().dump());
    return os.str();
}

std::vector<std::string> TrainConfig::validate() const {
    std::vector<std::string> warnings;
    if (lr < 1e-5 || lr > 1e-3) warnings.push_back("lr outside search range [1e-5, 1e-3]");
    if (weight_decay < 1e-5 || weight_decay > 1e-3)
        warnings.push_back("weight_decay outside search range [1e-5, 1e-3]");
    if (batch_size < 32 || batch_size > 64)
        warnings.push_back("batch_size outside search range [32, 64]");
    if (model.dropout_gnn < 0.3 || model.dropout_gnn > 0.5 || model.dropout_clf < 0.3 ||
        model.dropout_clf > 0.5)
        warnings.push_back("dropout outside search range [0.3, 0.5]");
    if (coverage < 1 || coverage > 5) warnings.push_back("coverage outside search range [1, 5]");
    if (batch_size < 1) throw EmptyDataset("batch_size must be >= 1");
    return warnings;
}

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                        int classes) {
    if (predictions.size() != labels.size())
        throw LabelOutOfRange("prediction/label length mismatch");
    Metrics m;
    m.confusion.assign(classes, std::vector<long>(classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes || predictions[i] < 0 ||
            predictions[i] >= classes)
            throw LabelOutOfRange("class id out of range at index " + std::to_string(i));
        m.confusion[labels[i]][predictions[i]]++;
    }
    for (int c = 0; c < classes; ++c) {
        long tp = m.confusion[c][c], fp = 0, fn = 0;
        for (int o = 0; o < classes; ++o) {
            if (o == c) continue;
            fp += m.confusion[o][c];
            fn += m.confusion[c][o];
        }
        Metrics::PerClass pc;
        pc.support = tp + fn;
        pc.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        pc.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        pc.f1 = pc.precision + pc.recall > 0.0
                    ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                    : 0.0;
        m.per_class.push_back(pc);
        m.macro_precision += pc.precision;
        m.macro_recall += pc.recall;
        m.macro_f1 += pc.f1;
    }
    m.macro_precision /= classes;
    m.macro_recall /= classes;
    m.macro_f1 /= classes;
    return m;
}

nlohmann::ordered_json Metrics::to_json() const {
    nlohmann::ordered_json j;
    auto pcs = nlohmann::ordered_json::array();
    for (const auto& pc : per_class)
        pcs.push_back({{"precision", pc.precision},
                       {"recall", pc.recall},
                       {"f1", pc.f1},
                       {"support", pc.support}});
    j["per_class"] = pcs;
    j["macro_precision"] = macro_precision;
    j["macro_recall"] = macro_recall;
    j["macro_f1"] = macro_f1;
    j["confusion"] = confusion;
    return j;
}

namespace {

std::vector<double> inverse_frequency_weights(const std::vector<Flag>& flags, int classes) {
    std::vector<long> counts(classes, 0);
    for (const Flag& f : flags) counts[f.label.value_or(0)]++;
    std::vector<double> w(classes, 0.0);
    for (int c = 0; c < classes; ++c)
        if (counts[c] > 0)
            w[c] = static_cast<double>(flags.size()) /
                   (static_cast<double>(classes) * static_cast<double>(counts[c]));
    return w;
}

}  // namespace

std::vector<int> predict(const ModelParams& params, const BpeVocab& vocab,
                         const std::vector<Flag>& flags, int batch_size) {
    std::vector<int> preds;
    Rng rng(0);  // unused in eval mode
    for (std::size_t start = 0; start < flags.size(); start += batch_size) {
        std::vector<const Flag*> chunk;
        for (std::size_t i = start; i < std::min(flags.size(), start + batch_size); ++i)
            chunk.push_back(&flags[i]);
        Batch batch = make_batch(chunk, vocab);
        Tensor probs = full_forward(batch, params, false, rng);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
            int best = 0;
            for (std::size_t c = 1; c < probs.cols(); ++c)
                if (probs.at(r, c) > probs.at(r, best)) best = static_cast<int>(c);
            preds.push_back(best);
        }
    }
    return preds;
}

Metrics evaluate(const ModelParams& params, const BpeVocab& vocab,
                 const std::vector<Flag>& flags, int batch_size) {
    std::vector<int> labels;
    for (const Flag& f : flags) labels.push_back(f.label.value_or(0));
    return compute_metrics(predict(params, vocab, flags, batch_size), labels,
                           params.cfg.classes);
}

TrainResult train(const std::vector<Flag>& train_set, const std::vector<Flag>& val_set,
                  const BpeVocab& vocab, const TrainConfig& cfg) {
    if (train_set.empty()) throw EmptyDataset("empty training set");
    int classes = cfg.classes();
    for (const Flag& f : train_set)
        if (f.label.value_or(0) < 0 || f.label.value_or(0) >= classes)
            throw LabelOutOfRange("label " + std::to_string(f.label.value_or(0)) +
                                  " out of range for " + std::to_string(classes) + " classes");

    ModelConfig mc = cfg.model;
    mc.classes = classes;
    mc.vocab_size = vocab.vocab_size;
    Rng rng(cfg.seed);
    ModelParams params = ModelParams::init(mc, rng);
    std::vector<Tensor> plist = params.all();
    AdamState adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;

    std::vector<double> class_w;
    if (cfg.class_weights) class_w = inverse_frequency_weights(train_set, classes);

    TrainResult result;
    result.params = params;

    auto snapshot = [&](int epoch, double val_f1) {
        Checkpoint ckpt;
        for (const auto& [name, t] : params.named()) {
            Tensor copy = Tensor::from(t.rows(), t.cols(), t.data(), true);
            ckpt.params.emplace_back(name, copy);
        }
        ckpt.adam = adam;
        ckpt.seed = cfg.seed;
        ckpt.config_hash = cfg.hash();
        result.checkpoint = std::move(ckpt);
        result.best_epoch = epoch;
        result.best_val_macro_f1 = val_f1;
    };
    snapshot(-1, 0.0);  // max_epochs = 0 returns the initialized model

    bool track_best = cfg.checkpoint_policy != "last" && !val_set.empty();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::vector<const Flag*> chunk;
            std::vector<int> labels;
            for (std::size_t i = start;
                 i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                 ++i) {
                chunk.push_back(&train_set[order[i]]);
                labels.push_back(train_set[order[i]].label.value_or(0));
            }
            Batch batch = make_batch(chunk, vocab);
            Tensor probs = full_forward(batch, params, true, rng);
            Tensor loss = neg_log_likelihood(probs, labels, class_w);
            zero_grads(plist);
            backward(loss);
            adam_step(plist, adam);
            epoch_loss += loss.item() * static_cast<double>(chunk.size());
        }
        epoch_loss /= static_cast<double>(train_set.size());

        double val_f1 = 0.0;
        if (!val_set.empty()) val_f1 = evaluate(params, vocab, val_set, cfg.batch_size).macro_f1;
        result.history.push_back(EpochRecord{epoch, epoch_loss, val_f1});

        if (track_best) {
            if (val_f1 > result.best_val_macro_f1 || result.best_epoch < 0)
                snapshot(epoch, val_f1);
        } else {
            snapshot(epoch, val_f1);
        }
    }
    result.params = ModelParams::from_checkpoint(mc, result.checkpoint);
    return result;
}

Split split_dataset(const std::vector<Flag>& flags, double r_train, double r_val,
                    double r_test, std::uint64_t seed) {
    if (std::fabs(r_train + r_val + r_test - 1.0) > 1e-9)
        throw EmptyDataset("split ratios must sum to 1");
    std::vector<std::string> contracts;
    for (const Flag& f : flags)
        if (std::find(contracts.begin(), contracts.end(), f.source_path) == contracts.end())
            contracts.push_back(f.source_path);
    std::sort(contracts.begin(), contracts.end());
    Rng rng(seed);
    rng.shuffle(contracts);

    std::size_t n = contracts.size();
    auto n_train = static_cast<std::size_t>(std::floor(r_train * static_cast<double>(n)));
    auto n_train_val =
        static_cast<std::size_t>(std::floor((r_train + r_val) * static_cast<double>(n)));
    std::map<std::string, int> split_of;
    for (std::size_t i = 0; i < n; ++i)
        split_of[contracts[i]] = i < n_train ? 0 : (i < n_train_val ? 1 : 2);

    Split out;
    for (const Flag& f : flags) {
        switch (split_of.at(f.source_path)) {
            case 0: out.train.push_back(f); break;
            case 1: out.val.push_back(f); break;
            default: out.test.push_back(f); break;
        }
    }
    return out;
}

std::string mean_std(const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << mean << " (" << std::sqrt(var) << ")";
    return os.str();
}

}  // namespace flagforge
