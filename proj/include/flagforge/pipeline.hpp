#pragma once

#include "flagforge/train.hpp"

namespace flagforge {

struct BuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BuildOptions {
    std::string ast_dir;
    std::string labels_path;  // empty: every function gets class 0
    std::string out_path;
    int coverage = 4;
    std::vector<std::string> class_names = {"safe", "reentrancy", "unchecked_low_level_calls",
                                            "time_manipulation"};
    std::vector<int> sweep_coverages;  // extra serialized-size measurements
    bool deterministic = false;        // zero timestamps in the report
    int threads = 0;                   // 0: FLAGFORGE_THREADS env or 1
};

struct BuildReport {
    int files = 0;
    int functions = 0;
    std::map<std::string, long> label_counts;
    std::vector<std::string> warnings;
    std::vector<std::pair<int, std::uint64_t>> bytes_per_coverage;
    std::string created_at;
    nlohmann::ordered_json to_json() const;
};

/// Parse every AST JSON under ast_dir, build FA-ASGs, extract labeled Flags
/// at the requested coverage and write them as JSONL.
BuildReport build_dataset(const BuildOptions& opt);

struct RunOptions {
    std::string data_path;
    std::string out_dir;
    TrainConfig config;
    std::vector<std::uint64_t> seeds = {42};
    std::uint64_t split_seed = 42;  // fixed across seeds; only init/shuffle vary
    double r_train = 0.5, r_val = 0.25, r_test = 0.25;
    int bpe_vocab_size = 4096;
};

/// One run directory per seed (config.json, vocab.json, checkpoints/best.bin,
/// history.jsonl, metrics.json) plus seeds.json with the cross-seed summary.
nlohmann::ordered_json run_training(const RunOptions& opt);

/// Per-function predictions for one AST file, using a run directory's
/// checkpoint, config and vocab.
nlohmann::ordered_json predict_file(const std::string& run_dir, const std::string& ast_path);

/// Markdown comparison of two run sets with paired t-tests per metric.
std::string report_comparison(const std::string& runs_a, const std::string& runs_b);

}  // namespace flagforge
