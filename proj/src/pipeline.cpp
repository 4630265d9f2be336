#include "flagforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "flagforge/graph.hpp"

namespace flagforge {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BuildError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BuildError("cannot write " + path.string());
    out << content;
}

int build_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FLAGFORGE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::uint64_t serialized_bytes(const std::vector<Flag>& flags) {
    std::uint64_t total = 0;
    for (const Flag& f : flags) total += flag_to_json(f).dump().size() + 1;
    return total;
}

}  // namespace

json BuildReport::to_json() const {
    json j;
    j["files"] = files;
    j["functions"] = functions;
    json labels;
    for (const auto& [name, count] : label_counts) labels[name] = count;
    j["label_counts"] = labels;
    j["warnings"] = warnings;
    json sweep = json::array();
    for (const auto& [cov, bytes] : bytes_per_coverage)
        sweep.push_back({{"coverage", cov}, {"bytes", bytes}});
    j["bytes_per_coverage"] = sweep;
    j["created_at"] = created_at;
    j["tool_version"] = "1";
    return j;
}

BuildReport build_dataset(const BuildOptions& opt) {
    std::vector<std::string> files;
    if (fs::is_directory(opt.ast_dir)) {
        for (const auto& entry : fs::directory_iterator(opt.ast_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".json" &&
                entry.path().filename() != "labels.json")
                files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw BuildError("no input files in " + opt.ast_dir);

    // Parse in parallel, keep results in input order.
    std::vector<FaAsg> graphs(files.size());
    std::vector<std::string> errors(files.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor.fetch_add(1); i < files.size(); i = cursor.fetch_add(1)) {
            try {
                AstTree tree = parse_ast_json(read_file(files[i]), files[i]);
                graphs[i] = build_fa_asg(tree);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    int n_threads = std::min<int>(build_threads(opt.threads), static_cast<int>(files.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string parse_errors;
    for (std::size_t i = 0; i < files.size(); ++i)
        if (!errors[i].empty()) parse_errors += files[i] + ": " + errors[i] + "\n";
    if (!parse_errors.empty()) throw BuildError("parse failures:\n" + parse_errors);

    json manifest = json::object();
    if (!opt.labels_path.empty()) manifest = json::parse(read_file(opt.labels_path));

    BuildReport report;
    report.files = static_cast<int>(files.size());
    if (!opt.deterministic) {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        report.created_at = buf;
    }

    std::vector<Flag> flags;
    for (const FaAsg& g : graphs) {
        for (const std::string& w : g.warnings) report.warnings.push_back(g.tree_ref + ": " + w);
        auto extracted = extract_flags(g, opt.coverage);
        flags.insert(flags.end(), extracted.begin(), extracted.end());
    }
    auto label_warnings = apply_labels(flags, manifest, opt.class_names);
    report.warnings.insert(report.warnings.end(), label_warnings.begin(), label_warnings.end());
    report.functions = static_cast<int>(flags.size());
    for (const Flag& f : flags) report.label_counts[opt.class_names.at(f.label.value_or(0))]++;

    if (!opt.out_path.empty()) write_flag_dataset(opt.out_path, flags);

    for (int cov : opt.sweep_coverages) {
        std::vector<Flag> swept;
        for (const FaAsg& g : graphs) {
            auto extracted = extract_flags(g, cov);
            swept.insert(swept.end(), extracted.begin(), extracted.end());
        }
        apply_labels(swept, manifest, opt.class_names);
        report.bytes_per_coverage.emplace_back(cov, serialized_bytes(swept));
    }
    return report;
}

namespace {

json metrics_bundle(const ModelParams& params, const BpeVocab& vocab, const Split& split,
                    const TrainConfig& cfg, int best_epoch) {
    json j;
    j["train"] = evaluate(params, vocab, split.train, cfg.batch_size).to_json();
    if (!split.val.empty())
        j["val"] = evaluate(params, vocab, split.val, cfg.batch_size).to_json();
    if (!split.test.empty())
        j["test"] = evaluate(params, vocab, split.test, cfg.batch_size).to_json();
    j["best_epoch"] = best_epoch;
    j["config_hash"] = cfg.hash();
    return j;
}

}  // namespace

json run_training(const RunOptions& opt) {
    std::vector<Flag> flags = read_flag_dataset(opt.data_path);
    if (flags.empty()) throw EmptyDataset("dataset is empty: " + opt.data_path);
    Split split = split_dataset(flags, opt.r_train, opt.r_val, opt.r_test, opt.split_seed);
    if (split.train.empty()) throw EmptyDataset("training split is empty");

    // Tokenizer is fit on the training split only.
    std::vector<std::string> corpus;
    for (const Flag& f : split.train)
        for (const FlagNode& n : f.nodes) corpus.push_back(n.text);
    BpeVocab vocab = train_bpe(corpus, opt.bpe_vocab_size);

    std::map<std::string, std::vector<double>> metric_values;
    json summary;
    json seed_list = json::array();
    for (std::uint64_t seed : opt.seeds) {
        TrainConfig cfg = opt.config;
        cfg.seed = seed;
        cfg.model.classes = cfg.classes();
        cfg.model.vocab_size = vocab.vocab_size;
        TrainResult result = train(split.train, split.val, vocab, cfg);

        fs::path run_dir = fs::path(opt.out_dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(run_dir / "checkpoints");
        write_file(run_dir / "config.json", cfg.to_json().dump(2) + "\n");
        save_vocab((run_dir / "vocab.json").string(), vocab);
        save_checkpoint((run_dir / "checkpoints" / "best.bin").string(), result.checkpoint);
        std::ostringstream history;
        for (const EpochRecord& r : result.history) {
            json h;
            h["epoch"] = r.epoch;
            h["loss"] = r.train_loss;
            h["val_macro_f1"] = r.val_macro_f1;
            history << h.dump() << "\n";
        }
        write_file(run_dir / "history.jsonl", history.str());
        json metrics = metrics_bundle(result.params, vocab, split, cfg, result.best_epoch);
        write_file(run_dir / "metrics.json", metrics.dump(2) + "\n");

        seed_list.push_back(seed);
        const char* keys[] = {"macro_precision", "macro_recall", "macro_f1"};
        const std::string eval_split = metrics.contains("test") ? "test" : "train";
        for (const char* key : keys)
            metric_values[key].push_back(metrics[eval_split][key].get<double>());
    }
    summary["seeds"] = seed_list;
    json agg;
    for (const auto& [key, values] : metric_values) agg[key] = mean_std(values);
    summary["summary"] = agg;
    write_file(fs::path(opt.out_dir) / "seeds.json", summary.dump(2) + "\n");
    return summary;
}

json predict_file(const std::string& run_dir, const std::string& ast_path) {
    fs::path dir(run_dir);
    TrainConfig cfg = TrainConfig::from_json(json::parse(read_file((dir / "config.json").string())));
    BpeVocab vocab = load_vocab((dir / "vocab.json").string());
    Checkpoint ckpt = load_checkpoint((dir / "checkpoints" / "best.bin").string());
    if (ckpt.config_hash != cfg.hash())
        throw ConfigMismatch("checkpoint was trained with a different config");
    ModelConfig mc = cfg.model;
    mc.classes = cfg.classes();
    mc.vocab_size = vocab.vocab_size;
    ModelParams params = ModelParams::from_checkpoint(mc, ckpt);

    AstTree tree = parse_ast_json(read_file(ast_path), ast_path);
    FaAsg g = build_fa_asg(tree);
    std::vector<Flag> flags = extract_flags(g, cfg.coverage);

    json out = json::array();
    if (flags.empty()) return out;
    std::vector<int> preds = predict(params, vocab, flags, cfg.batch_size);
    Rng rng(0);
    std::vector<const Flag*> ptrs;
    for (const Flag& f : flags) ptrs.push_back(&f);
    Batch batch = make_batch(ptrs, vocab);
    Tensor probs = full_forward(batch, params, false, rng);
    for (std::size_t i = 0; i < flags.size(); ++i) {
        json rec;
        rec["name"] = flags[i].target_name;
        rec["signature"] = flags[i].target_signature;
        rec["predicted_class"] = cfg.class_names.at(preds[i]);
        json pr = json::array();
        for (std::size_t c = 0; c < probs.cols(); ++c) pr.push_back(probs.at(i, c));
        rec["probabilities"] = pr;
        out.push_back(rec);
    }
    return out;
}

std::string report_comparison(const std::string& runs_a, const std::string& runs_b) {
    auto load_scores = [](const std::string& dir) {
        json seeds = json::parse(read_file((fs::path(dir) / "seeds.json").string()));
        std::map<std::string, std::vector<double>> scores;
        std::vector<std::uint64_t> seed_ids;
        for (const auto& s : seeds["seeds"]) {
            std::uint64_t seed = s.get<std::uint64_t>();
            seed_ids.push_back(seed);
            json m = json::parse(read_file(
                (fs::path(dir) / ("seed_" + std::to_string(seed)) / "metrics.json").string()));
            const std::string split = m.contains("test") ? "test" : "train";
            for (const char* key : {"macro_precision", "macro_recall", "macro_f1"})
                scores[key].push_back(m[split][key].get<double>());
        }
        return std::make_pair(seed_ids, scores);
    };
    auto [seeds_a, scores_a] = load_scores(runs_a);
    auto [seeds_b, scores_b] = load_scores(runs_b);
    if (seeds_a != seeds_b)
        throw BuildError("seed lists differ between " + runs_a + " and " + runs_b);

    std::ostringstream os;
    os << "| Metric | " << runs_a << " | " << runs_b << " | p-value |\n";
    os << "|---|---|---|---|\n";
    for (const char* key : {"macro_precision", "macro_recall", "macro_f1"}) {
        os << "| " << key << " | " << mean_std(scores_a[key]) << " | " << mean_std(scores_b[key])
           << " | ";
        try {
            auto [t, p] = paired_t_test(scores_a[key], scores_b[key]);
            os.setf(std::ios::fixed);
            os.precision(4);
            os << p << (p <= 0.05 ? " *" : "");
        } catch (const DegenerateDifferences&) {
            os << "degenerate (zero-variance differences)";
        }
        os << " |\n";
    }
    return os.str();
}

}  // namespace flagforge
