#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "appsel/appdocs.hpp"
#include "appsel/corpus.hpp"
#include "appsel/crossencoder.hpp"
#include "appsel/evalstats.hpp"
#include "appsel/lexical.hpp"
#include "appsel/ltr.hpp"
#include "appsel/run_io.hpp"
#include "appsel/vector.hpp"

namespace appsel::runner {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct MethodFailure : std::runtime_error {
    MethodFailure(const std::string& method, const std::string& stage,
                  const std::string& what)
        : std::runtime_error("method '" + method + "' failed at stage '" + stage +
                             "': " + what),
          method_tag(method) {}
    std::string method_tag;
};

struct MethodConfig {
    std::string name;  // static, querylm, bm25, bm25_qe, knn, knn_awe, lambdamart, crossencoder
    double mu = 2000.0;
    lexical::Bm25Params bm25;
    lexical::QeParams qe;
    int k = 10;
    std::string embeddings_path;       // knn_awe; empty -> deterministic hashed table
    int hashed_embedding_dim = 32;
    ltr::GbdtParams gbdt;
    ce::FinetuneParams finetune;
    ce::TinyEncoder::Config encoder;
    std::string candidate_policy = "all_apps";
};

struct ExperimentConfig {
    // exactly one of dataset_path / synthetic is active
    std::string queries_path;
    std::string registry_path;
    std::optional<corpus::SyntheticConfig> synthetic;
    std::uint64_t dataset_seed = 1;

    corpus::SplitMode split_mode = corpus::SplitMode::by_query;
    corpus::SplitRatios ratios;
    std::uint64_t split_seed = 7;
    std::uint64_t appdoc_seed = 11;

    std::vector<MethodConfig> methods;
    std::vector<int> cutoffs = {1, 3, 5};
    std::string dominant_app;  // empty -> registry's
    std::string output_dir = "out";
    std::string primary_method;  // significance stars compare this one to the rest
    std::string confusion_candidate;
    std::string confusion_reference;
    int bonferroni_comparisons = 0;  // 0 -> number of non-primary methods
};

/// Reads a JSON config file; APPSEL_OUTPUT_ROOT, when set, prefixes a
/// relative output_dir.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

struct PreparedExperiment {
    corpus::Dataset dataset;
    corpus::Split split;
    appdocs::AppDocumentMap app_docs;  // built from the training split only
    std::vector<corpus::Query> train_queries, validation_queries, test_queries;
};

PreparedExperiment prepare(const ExperimentConfig& config);

/// Fails if any validation/test query text appears as a substring of an
/// app document.
void leakage_check(const PreparedExperiment& prep);

struct ExperimentResult {
    std::map<std::string, RunResult> runs;
    std::map<std::string, eval::MetricReport> reports;
    std::string manifest_path;
};

/// Full deterministic pipeline: prepare -> fit -> rank -> evaluate ->
/// persist runs, reports, manifest under config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Ranks the test queries with one method (fitting whatever it needs).
RunResult run_method(const ExperimentConfig& config, const PreparedExperiment& prep,
                     const MethodConfig& method);

/// Fitting entry points for the trainable methods; run_method uses these
/// and the CLI's train verb persists their outputs.
ltr::LambdaMartModel fit_lambdamart(const ExperimentConfig& config,
                                    const PreparedExperiment& prep,
                                    const MethodConfig& method);
std::unique_ptr<ce::TinyEncoder> fit_crossencoder(const ExperimentConfig& config,
                                                  const PreparedExperiment& prep,
                                                  const MethodConfig& method,
                                                  ce::FinetuneResult* stats = nullptr);

enum class ReportFormat { markdown, delimited };

/// Table-1-style matrix (methods x metrics, significance stars), plus a
/// confusion table and per-app MRR data when configured.
void emit_report(const ExperimentConfig& config,
                 const std::map<std::string, eval::MetricReport>& reports,
                 const std::map<std::string, RunResult>& runs,
                 const std::map<std::string, corpus::Judgment>& judgments,
                 ReportFormat format, const std::string& out_dir);

/// Renders the metric matrix alone; exposed for fixture tests.
std::string render_metric_table(const std::vector<std::string>& method_order,
                                const std::map<std::string, eval::MetricReport>& reports,
                                const std::vector<int>& cutoffs,
                                const std::map<std::string, bool>& stars,
                                ReportFormat format);

std::string render_confusion_table(const eval::ConfusionTable& table, ReportFormat format);

/// Re-runs the pipeline recorded in a manifest file.
ExperimentResult reproduce(const std::string& manifest_path);

}  // namespace appsel::runner
