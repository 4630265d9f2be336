#include <iostream>

#include "CLI11.hpp"
#include "flagforge/pipeline.hpp"

using namespace flagforge;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int cmd_build(const std::string& ast_dir, const std::string& labels, int coverage,
              const std::string& out, const std::string& classes, bool sweep,
              bool deterministic, int threads) {
    BuildOptions opt;
    opt.ast_dir = ast_dir;
    opt.labels_path = labels;
    opt.coverage = coverage;
    opt.out_path = out;
    if (!classes.empty()) opt.class_names = split_csv(classes);
    if (sweep) opt.sweep_coverages = {1, 2, 3, 4, 5};
    opt.deterministic = deterministic;
    opt.threads = threads;
    BuildReport report = build_dataset(opt);
    std::cout << report.to_json().dump(2) << "\n";
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_train(const std::string& data, const std::string& config_path, const std::string& out,
              const std::string& seeds, std::uint64_t split_seed, int vocab_size) {
    RunOptions opt;
    opt.data_path = data;
    opt.out_dir = out;
    opt.split_seed = split_seed;
    opt.bpe_vocab_size = vocab_size;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw BuildError("cannot read config " + config_path);
        nlohmann::ordered_json j;
        in >> j;
        opt.config = TrainConfig::from_json(j);
    }
    opt.seeds.clear();
    for (const std::string& s : split_csv(seeds)) opt.seeds.push_back(std::stoull(s));
    if (opt.seeds.empty()) throw BuildError("no seeds given");
    for (const std::string& w : opt.config.validate()) std::cerr << "warning: " << w << "\n";
    nlohmann::ordered_json summary = run_training(opt);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& ast) {
    std::cout << predict_file(checkpoint, ast).dump(2) << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& runs) {
    if (runs.size() != 2) throw BuildError("--runs takes exactly two run directories");
    std::cout << report_comparison(runs[0], runs[1]);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FLAG pipeline: graph construction, training, prediction, reporting"};
    app.require_subcommand(1);

    std::string ast_dir, labels, out, classes, data, config_path, checkpoint, ast, seeds = "42";
    std::vector<std::string> runs;
    int coverage = 4, threads = 0, vocab_size = 4096;
    std::uint64_t split_seed = 42;
    bool sweep = false, deterministic = false;

    auto* build = app.add_subcommand("build", "Build a FLAG dataset from AST JSON files");
    build->add_option("--ast-dir", ast_dir, "Directory of compiler AST JSON files")->required();
    build->add_option("--labels", labels, "Label manifest JSON");
    build->add_option("--coverage", coverage, "Neighborhood expansion bound");
    build->add_option("--out", out, "Output JSONL dataset path")->required();
    build->add_option("--classes", classes, "Comma-separated class names");
    build->add_flag("--sweep-coverage", sweep, "Also report serialized bytes for coverage 1-5");
    build->add_flag("--deterministic", deterministic, "Zero timestamps in the report");
    build->add_option("--threads", threads, "Parallel parse workers (default FLAGFORGE_THREADS)");

    auto* train = app.add_subcommand("train", "Train the two-stage GNN");
    train->add_option("--data", data, "FLAG JSONL dataset")->required();
    train->add_option("--config", config_path, "Training config JSON");
    train->add_option("--out", out, "Output directory for run dirs")->required();
    train->add_option("--seeds", seeds, "Comma-separated seeds");
    train->add_option("--split-seed", split_seed, "Contract-split seed (fixed across seeds)");
    train->add_option("--vocab-size", vocab_size, "BPE vocabulary budget");

    auto* predict = app.add_subcommand("predict", "Predict per-function classes for one file");
    predict->add_option("--checkpoint", checkpoint, "Run directory with checkpoint")->required();
    predict->add_option("--ast", ast, "AST JSON file")->required();

    auto* report = app.add_subcommand("report", "Compare two run sets with paired t-tests");
    report->add_option("--runs", runs, "Two run-set directories")->expected(2);

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed())
            return cmd_build(ast_dir, labels, coverage, out, classes, sweep, deterministic,
                             threads);
        if (train->parsed())
            return cmd_train(data, config_path, out, seeds, split_seed, vocab_size);
        if (predict->parsed()) return cmd_predict(checkpoint, ast);
        if (report->parsed()) return cmd_report(runs);
    } catch (const BuildError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MalformedJson& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyDataset& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CoverageOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
