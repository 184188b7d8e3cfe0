#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "appsel/runner.hpp"

namespace fs = std::filesystem;
using namespace appsel;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitMethodFailure = 4;

runner::MethodConfig find_method(const runner::ExperimentConfig& config,
                                 const std::string& name) {
    for (const auto& m : config.methods) {
        if (m.name == name) return m;
    }
    throw runner::ConfigError("method '" + name + "' not in config");
}

int do_prepare(const runner::ExperimentConfig& config) {
    runner::PreparedExperiment prep = runner::prepare(config);
    runner::leakage_check(prep);
    fs::create_directories(config.output_dir);
    const fs::path out(config.output_dir);
    corpus::save_dataset(prep.dataset, (out / "dataset.jsonl").string(),
                         (out / "registry.jsonl").string());
    appdocs::save_app_documents(prep.app_docs, (out / "appdocs.jsonl").string());
    nlohmann::json split;
    split["mode"] = config.split_mode == corpus::SplitMode::by_query ? "by_query" : "by_task";
    split["seed"] = config.split_seed;
    split["train"] = prep.split.train;
    split["validation"] = prep.split.validation;
    split["test"] = prep.split.test;
    std::ofstream sf(out / "split.json");
    sf << split.dump(2) << "\n";
    std::cout << "prepared " << prep.dataset.queries.size() << " queries ("
              << prep.split.train.size() << "/" << prep.split.validation.size() << "/"
              << prep.split.test.size() << " train/val/test) in " << config.output_dir
              << "\n";
    return 0;
}

int do_train(const runner::ExperimentConfig& config, const std::string& method_name) {
    const runner::MethodConfig method = find_method(config, method_name);
    runner::PreparedExperiment prep = runner::prepare(config);
    const fs::path out(config.output_dir);
    fs::create_directories(out / "models");
    if (method.name == "lambdamart") {
        ltr::LambdaMartModel model = runner::fit_lambdamart(config, prep, method);
        model.save((out / "models" / "lambdamart.txt").string());
        std::cout << "trained lambdamart (" << model.trees.size() << " trees) -> "
                  << (out / "models" / "lambdamart.txt").string() << "\n";
    } else if (method.name == "crossencoder") {
        ce::FinetuneResult stats;
        auto encoder = runner::fit_crossencoder(config, prep, method, &stats);
        encoder->save((out / "models" / "crossencoder").string());
        std::cout << "fine-tuned crossencoder";
        if (!stats.epoch_losses.empty()) std::cout << ", final loss " << stats.final_loss;
        std::cout << " -> " << (out / "models" / "crossencoder").string() << "\n";
    } else {
        std::cout << "method '" << method.name << "' has no training stage\n";
    }
    return 0;
}

int do_rank(const runner::ExperimentConfig& config, const std::string& method_name) {
    const runner::MethodConfig method = find_method(config, method_name);
    runner::PreparedExperiment prep = runner::prepare(config);
    RunResult run = runner::run_method(config, prep, method);
    const fs::path out(config.output_dir);
    fs::create_directories(out / "runs");
    const std::string path = (out / "runs" / (method.name + ".run")).string();
    save_run(run, path);
    std::cout << "ranked " << run.rankings.size() << " test queries -> " << path << "\n";
    return 0;
}

int do_evaluate(const runner::ExperimentConfig& config, const std::string& method_name) {
    runner::PreparedExperiment prep = runner::prepare(config);
    const fs::path out(config.output_dir);
    std::vector<std::string> names;
    if (!method_name.empty()) {
        names.push_back(method_name);
    } else {
        for (const auto& m : config.methods) names.push_back(m.name);
    }
    fs::create_directories(out / "reports");
    for (const auto& name : names) {
        const fs::path run_path = out / "runs" / (name + ".run");
        if (!fs::exists(run_path)) {
            std::cerr << "no run file for '" << name << "' (expected " << run_path << ")\n";
            return kExitDataError;
        }
        RunResult run = load_run(run_path.string());
        eval::MetricReport report =
            eval::evaluate_run(run, prep.dataset.judgments, config.cutoffs);
        nlohmann::json rj;
        for (const auto& [metric, values] : report.per_metric) {
            rj["metrics"][metric] = values.aggregate;
        }
        rj["macro_mrr"] = report.macro_mrr;
        rj["per_app_mrr"] = report.per_app_mrr;
        std::ofstream rf(out / "reports" / (name + ".json"));
        rf << rj.dump(2) << "\n";
        std::cout << name << ":";
        for (const auto& [metric, values] : report.per_metric) {
            std::cout << " " << metric << "=" << values.aggregate;
        }
        std::cout << "\n";
    }
    return 0;
}

int do_report(const runner::ExperimentConfig& config) {
    runner::PreparedExperiment prep = runner::prepare(config);
    const fs::path out(config.output_dir);
    std::map<std::string, RunResult> runs;
    std::map<std::string, eval::MetricReport> reports;
    for (const auto& m : config.methods) {
        const fs::path run_path = out / "runs" / (m.name + ".run");
        if (!fs::exists(run_path)) continue;
        RunResult run = load_run(run_path.string());
        reports.emplace(m.name,
                        eval::evaluate_run(run, prep.dataset.judgments, config.cutoffs));
        runs.emplace(m.name, std::move(run));
    }
    if (reports.empty()) {
        std::cerr << "no run files under " << (out / "runs") << "\n";
        return kExitDataError;
    }
    runner::ExperimentConfig rc = config;
    if (rc.dominant_app.empty()) rc.dominant_app = prep.dataset.registry.dominant_app;
    runner::emit_report(rc, reports, runs, prep.dataset.judgments,
                        runner::ReportFormat::markdown, (out / "reports").string());
    runner::emit_report(rc, reports, runs, prep.dataset.judgments,
                        runner::ReportFormat::delimited, (out / "reports").string());
    std::cout << "reports written under " << (out / "reports") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"target-apps-selection benchmark toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string method_name;
    std::string manifest_path;

    auto* prepare_cmd = app.add_subcommand("prepare", "ingest/generate the dataset and split it");
    prepare_cmd->add_option("-c,--config", config_path, "experiment config (JSON)")->required();

    auto* train_cmd = app.add_subcommand("train", "fit one method's model");
    train_cmd->add_option("-c,--config", config_path)->required();
    train_cmd->add_option("-m,--method", method_name)->required();

    auto* rank_cmd = app.add_subcommand("rank", "rank the test queries with one method");
    rank_cmd->add_option("-c,--config", config_path)->required();
    rank_cmd->add_option("-m,--method", method_name)->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate persisted run files");
    eval_cmd->add_option("-c,--config", config_path)->required();
    eval_cmd->add_option("-m,--method", method_name);

    auto* report_cmd = app.add_subcommand("report", "emit metric/confusion tables and plot data");
    report_cmd->add_option("-c,--config", config_path)->required();

    auto* run_cmd = app.add_subcommand("run", "full pipeline: prepare, fit, rank, evaluate, report");
    run_cmd->add_option("-c,--config", config_path)->required();

    auto* repro_cmd = app.add_subcommand("reproduce", "replay a persisted manifest");
    repro_cmd->add_option("manifest", manifest_path, "manifest.json from a previous run")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare_cmd->parsed()) return do_prepare(runner::load_config(config_path));
        if (train_cmd->parsed()) return do_train(runner::load_config(config_path), method_name);
        if (rank_cmd->parsed()) return do_rank(runner::load_config(config_path), method_name);
        if (eval_cmd->parsed()) {
            return do_evaluate(runner::load_config(config_path), method_name);
        }
        if (report_cmd->parsed()) return do_report(runner::load_config(config_path));
        if (run_cmd->parsed()) {
            runner::run_experiment(runner::load_config(config_path));
            std::cout << "experiment complete\n";
            return 0;
        }
        if (repro_cmd->parsed()) {
            runner::reproduce(manifest_path);
            std::cout << "reproduction complete\n";
            return 0;
        }
    } catch (const runner::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const corpus::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const runner::MethodFailure& e) {
        std::cerr << "method failure: " << e.what() << "\n";
        return kExitMethodFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
