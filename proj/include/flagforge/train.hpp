#pragma once

#include "flagforge/model.hpp"

namespace flagforge {

struct LabelOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateDifferences : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-5;
    int batch_size = 64;
    int max_epochs = 500;
    std::uint64_t seed = 42;
    int coverage = 4;
    std::vector<std::string> class_names = {"safe", "reentrancy", "unchecked_low_level_calls",
                                            "time_manipulation"};
    bool class_weights = false;  // inverse-frequency loss weights, off by default
    std::string checkpoint_policy = "best-val-macro-f1";  // or "last"
    ModelConfig model;

    int classes() const { return static_cast<int>(class_names.size()); }
    nlohmann::ordered_json to_json() const;
    static TrainConfig from_json(const nlohmann::ordered_json& j);
    std::string hash() const;
    /// Soft bounds from the hyperparameter search ranges; out-of-range
    /// values warn, they do not fail.
    std::vector<std::string> validate() const;
};

struct Metrics {
    struct PerClass {
        double precision = 0, recall = 0, f1 = 0;
        long support = 0;
    };
    std::vector<PerClass> per_class;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    std::vector<std::vector<long>> confusion;  // [true][pred]

    nlohmann::ordered_json to_json() const;
};

/// Confusion-matrix arithmetic with the zero-denominator-is-zero convention.
Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels,
                        int classes);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0;
    double val_macro_f1 = 0;
};

struct TrainResult {
    ModelParams params;  // best (or last) parameters
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_macro_f1 = 0;
};

TrainResult train(const std::vector<Flag>& train_set, const std::vector<Flag>& val_set,
                  const BpeVocab& vocab, const TrainConfig& cfg);

std::vector<int> predict(const ModelParams& params, const BpeVocab& vocab,
                         const std::vector<Flag>& flags, int batch_size = 64);

Metrics evaluate(const ModelParams& params, const BpeVocab& vocab,
                 const std::vector<Flag>& flags, int batch_size = 64);

struct Split {
    std::vector<Flag> train, val, test;
};

/// Contract-grouped split: all Flags sharing a source path land in one
/// split. Seeded shuffle of contracts, then cumulative-ratio cut points.
Split split_dataset(const std::vector<Flag>& flags, double r_train, double r_val,
                    double r_test, std::uint64_t seed);

/// Two-sided paired t-test; returns (t, p) with n-1 degrees of freedom.
std::pair<double, double> paired_t_test(const std::vector<double>& a,
                                        const std::vector<double>& b);

/// CDF of Student's t distribution, via the regularized incomplete beta.
double student_t_cdf(double t, int df);

/// "mean (std)" with sample standard deviation, 4 decimals.
std::string mean_std(const std::vector<double>& values);

}  // namespace flagforge
