#include "appsel/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace appsel::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

corpus::SyntheticConfig synthetic_from_json(const json& j) {
    corpus::SyntheticConfig sc;
    sc.app_count = j.value("app_count", sc.app_count);
    sc.tasks_per_app = j.value("tasks_per_app", sc.tasks_per_app);
    sc.queries_per_task = j.value("queries_per_task", sc.queries_per_task);
    sc.total_queries = j.value("total_queries", sc.total_queries);
    sc.dominant_fraction = j.value("dominant_fraction", sc.dominant_fraction);
    sc.secondary_dominant_prob = j.value("secondary_dominant_prob", sc.secondary_dominant_prob);
    return sc;
}

json synthetic_to_json(const corpus::SyntheticConfig& sc) {
    json j;
    j["app_count"] = sc.app_count;
    j["tasks_per_app"] = sc.tasks_per_app;
    j["queries_per_task"] = sc.queries_per_task;
    j["total_queries"] = sc.total_queries;
    j["dominant_fraction"] = sc.dominant_fraction;
    j["secondary_dominant_prob"] = sc.secondary_dominant_prob;
    return j;
}

MethodConfig method_from_json(const json& j) {
    if (!j.contains("name")) throw ConfigError("method block without a name");
    MethodConfig mc;
    mc.name = j["name"].get<std::string>();
    static const std::vector<std::string> known = {
        "static", "querylm", "bm25", "bm25_qe", "knn", "knn_awe", "lambdamart",
        "crossencoder"};
    if (std::find(known.begin(), known.end(), mc.name) == known.end()) {
        throw ConfigError("unknown method '" + mc.name + "'");
    }
    mc.mu = j.value("mu", mc.mu);
    mc.bm25.k1 = j.value("k1", mc.bm25.k1);
    mc.bm25.b = j.value("b", mc.bm25.b);
    if (mc.bm25.k1 < 0 || mc.bm25.b < 0 || mc.bm25.b > 1) {
        throw ConfigError("method '" + mc.name + "': k1 must be >= 0 and b in [0,1]");
    }
    mc.qe.fb_docs = j.value("fb_docs", mc.qe.fb_docs);
    mc.qe.fb_terms = j.value("fb_terms", mc.qe.fb_terms);
    mc.qe.interpolation = j.value("interpolation", mc.qe.interpolation);
    if (mc.qe.fb_docs < 1 || mc.qe.fb_terms < 1 || mc.qe.interpolation < 0 ||
        mc.qe.interpolation > 1) {
        throw ConfigError("method '" + mc.name + "': invalid expansion parameters");
    }
    mc.k = j.value("k", mc.k);
    if (mc.k < 1) throw ConfigError("method '" + mc.name + "': k must be >= 1");
    mc.embeddings_path = j.value("embeddings", mc.embeddings_path);
    mc.hashed_embedding_dim = j.value("hashed_embedding_dim", mc.hashed_embedding_dim);

    mc.gbdt.n_trees = j.value("n_trees", mc.gbdt.n_trees);
    mc.gbdt.max_leaves = j.value("max_leaves", mc.gbdt.max_leaves);
    mc.gbdt.learning_rate = j.value("gbdt_learning_rate", mc.gbdt.learning_rate);
    mc.gbdt.metric_cutoff = j.value("metric_cutoff", mc.gbdt.metric_cutoff);
    mc.gbdt.early_stop_rounds = j.value("early_stop_rounds", mc.gbdt.early_stop_rounds);
    mc.gbdt.seed = j.value("model_seed", mc.gbdt.seed);
    if (mc.gbdt.n_trees < 0 || mc.gbdt.max_leaves < 2 || mc.gbdt.learning_rate <= 0 ||
        mc.gbdt.metric_cutoff < 1 || mc.gbdt.early_stop_rounds < 1) {
        throw ConfigError("method '" + mc.name + "': invalid gbdt parameters");
    }

    mc.finetune.learning_rate = j.value("learning_rate", mc.finetune.learning_rate);
    mc.finetune.warmup_steps = j.value("warmup_steps", mc.finetune.warmup_steps);
    mc.finetune.batch_size = j.value("batch_size", mc.finetune.batch_size);
    mc.finetune.epochs = j.value("epochs", mc.finetune.epochs);
    mc.finetune.token_budget = j.value("token_budget", mc.finetune.token_budget);
    mc.finetune.candidate_depth = j.value("candidate_depth", mc.finetune.candidate_depth);
    mc.finetune.seed = j.value("model_seed", mc.finetune.seed);
    if (mc.finetune.batch_size < 1 || mc.finetune.epochs < 0 ||
        mc.finetune.token_budget < 8 || mc.finetune.candidate_depth < 1) {
        throw ConfigError("method '" + mc.name + "': invalid fine-tuning parameters");
    }
    if (j.contains("encoder")) {
        const json& e = j["encoder"];
        mc.encoder.vocab_buckets = e.value("vocab_buckets", mc.encoder.vocab_buckets);
        mc.encoder.embedding_dim = e.value("embedding_dim", mc.encoder.embedding_dim);
        mc.encoder.hidden_dim = e.value("hidden_dim", mc.encoder.hidden_dim);
    }
    mc.encoder.token_budget = mc.finetune.token_budget;
    mc.encoder.seed = mc.finetune.seed;
    mc.candidate_policy = j.value("candidate_policy", mc.candidate_policy);
    if (mc.candidate_policy != "all_apps" && mc.candidate_policy != "bm25_topk") {
        throw ConfigError("method '" + mc.name + "': candidate_policy must be all_apps or bm25_topk");
    }
    return mc;
}

json method_to_json(const MethodConfig& mc) {
    json j;
    j["name"] = mc.name;
    if (mc.name == "querylm") j["mu"] = mc.mu;
    if (mc.name == "bm25" || mc.name == "bm25_qe" || mc.name == "lambdamart" ||
        mc.name == "crossencoder") {
        j["k1"] = mc.bm25.k1;
        j["b"] = mc.bm25.b;
    }
    if (mc.name == "bm25_qe") {
        j["fb_docs"] = mc.qe.fb_docs;
        j["fb_terms"] = mc.qe.fb_terms;
        j["interpolation"] = mc.qe.interpolation;
    }
    if (mc.name == "knn" || mc.name == "knn_awe" || mc.name == "lambdamart") {
        j["k"] = mc.k;
    }
    if (mc.name == "knn_awe" || mc.name == "lambdamart") {
        if (!mc.embeddings_path.empty()) j["embeddings"] = mc.embeddings_path;
        else j["hashed_embedding_dim"] = mc.hashed_embedding_dim;
    }
    if (mc.name == "lambdamart") {
        j["n_trees"] = mc.gbdt.n_trees;
        j["max_leaves"] = mc.gbdt.max_leaves;
        j["gbdt_learning_rate"] = mc.gbdt.learning_rate;
        j["metric_cutoff"] = mc.gbdt.metric_cutoff;
        j["early_stop_rounds"] = mc.gbdt.early_stop_rounds;
        j["model_seed"] = mc.gbdt.seed;
    }
    if (mc.name == "crossencoder") {
        j["learning_rate"] = mc.finetune.learning_rate;
        j["warmup_steps"] = mc.finetune.warmup_steps;
        j["batch_size"] = mc.finetune.batch_size;
        j["epochs"] = mc.finetune.epochs;
        j["token_budget"] = mc.finetune.token_budget;
        j["candidate_depth"] = mc.finetune.candidate_depth;
        j["model_seed"] = mc.finetune.seed;
        j["candidate_policy"] = mc.candidate_policy;
        j["encoder"] = {{"vocab_buckets", mc.encoder.vocab_buckets},
                        {"embedding_dim", mc.encoder.embedding_dim},
                        {"hidden_dim", mc.encoder.hidden_dim}};
    }
    return j;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");

    ExperimentConfig config;
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        if (d.contains("synthetic")) {
            config.synthetic = synthetic_from_json(d["synthetic"]);
        } else {
            if (!d.contains("queries") || !d.contains("registry")) {
                throw ConfigError("dataset block needs queries+registry paths or synthetic");
            }
            config.queries_path = d["queries"].get<std::string>();
            config.registry_path = d["registry"].get<std::string>();
        }
        config.dataset_seed = d.value("seed", config.dataset_seed);
    } else {
        throw ConfigError("config needs a dataset block");
    }

    if (j.contains("split")) {
        const json& s = j["split"];
        const std::string mode = s.value("mode", "by_query");
        if (mode == "by_query") config.split_mode = corpus::SplitMode::by_query;
        else if (mode == "by_task") config.split_mode = corpus::SplitMode::by_task;
        else throw ConfigError("split mode must be by_query or by_task");
        if (s.contains("ratios")) {
            const auto r = s["ratios"].get<std::vector<double>>();
            if (r.size() != 3) throw ConfigError("split ratios must have 3 entries");
            config.ratios = {r[0], r[1], r[2]};
        }
        config.split_seed = s.value("seed", config.split_seed);
    }
    config.appdoc_seed = j.value("appdoc_seed", config.appdoc_seed);

    if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty()) {
        throw ConfigError("config needs a non-empty methods array");
    }
    for (const json& m : j["methods"]) config.methods.push_back(method_from_json(m));

    if (j.contains("cutoffs")) config.cutoffs = j["cutoffs"].get<std::vector<int>>();
    config.dominant_app = j.value("dominant_app", config.dominant_app);
    config.output_dir = j.value("output_dir", config.output_dir);
    config.primary_method = j.value("primary_method", config.primary_method);
    config.confusion_candidate = j.value("confusion_candidate", config.confusion_candidate);
    config.confusion_reference = j.value("confusion_reference", config.confusion_reference);
    config.bonferroni_comparisons =
        j.value("bonferroni_comparisons", config.bonferroni_comparisons);

    if (const char* root = std::getenv("APPSEL_OUTPUT_ROOT");
        root != nullptr && !fs::path(config.output_dir).is_absolute()) {
        config.output_dir = (fs::path(root) / config.output_dir).string();
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

namespace {

json config_to_json(const ExperimentConfig& config) {
    json j;
    if (config.synthetic) {
        j["dataset"] = {{"synthetic", synthetic_to_json(*config.synthetic)},
                        {"seed", config.dataset_seed}};
    } else {
        j["dataset"] = {{"queries", config.queries_path},
                        {"registry", config.registry_path},
                        {"seed", config.dataset_seed}};
    }
    j["split"] = {{"mode", config.split_mode == corpus::SplitMode::by_query ? "by_query"
                                                                            : "by_task"},
                  {"ratios", {config.ratios.train, config.ratios.validation, config.ratios.test}},
                  {"seed", config.split_seed}};
    j["appdoc_seed"] = config.appdoc_seed;
    j["methods"] = json::array();
    for (const auto& m : config.methods) j["methods"].push_back(method_to_json(m));
    j["cutoffs"] = config.cutoffs;
    if (!config.dominant_app.empty()) j["dominant_app"] = config.dominant_app;
    j["output_dir"] = config.output_dir;
    if (!config.primary_method.empty()) j["primary_method"] = config.primary_method;
    if (!config.confusion_candidate.empty()) {
        j["confusion_candidate"] = config.confusion_candidate;
        j["confusion_reference"] = config.confusion_reference;
    }
    j["bonferroni_comparisons"] = config.bonferroni_comparisons;
    return j;
}

std::vector<corpus::Query> select_queries(const corpus::Dataset& ds,
                                          const std::set<std::string>& ids) {
    std::vector<corpus::Query> out;
    for (const auto& q : ds.queries) {
        if (ids.count(q.query_id) != 0) out.push_back(q);
    }
    return out;
}

}  // namespace

PreparedExperiment prepare(const ExperimentConfig& config) {
    PreparedExperiment prep;
    if (config.synthetic) {
        prep.dataset = corpus::generate_synthetic(*config.synthetic, config.dataset_seed);
    } else {
        prep.dataset = corpus::load_dataset(config.queries_path, config.registry_path);
    }
    prep.split = corpus::split_dataset(prep.dataset, config.split_mode, config.ratios,
                                       config.split_seed);
    prep.train_queries = select_queries(prep.dataset, prep.split.train);
    prep.validation_queries = select_queries(prep.dataset, prep.split.validation);
    prep.test_queries = select_queries(prep.dataset, prep.split.test);
    prep.app_docs = appdocs::build_app_documents(prep.train_queries, prep.dataset.judgments,
                                                 prep.dataset.registry, config.appdoc_seed);
    return prep;
}

void leakage_check(const PreparedExperiment& prep) {
    auto scan = [&](const std::vector<corpus::Query>& queries, const char* part) {
        for (const auto& q : queries) {
            if (prep.split.train.count(q.query_id) != 0) continue;
            for (const auto& [app_id, doc] : prep.app_docs) {
                if (!doc.text.empty() && doc.text.find(q.text) != std::string::npos) {
                    // a held-out text may coincide with a training query's text;
                    // only flag it when no training query carries the same text
                    bool same_text_in_train = false;
                    for (const auto& qid : doc.source_query_ids) {
                        const corpus::Query* tq = prep.dataset.find_query(qid);
                        if (tq != nullptr && tq->text.find(q.text) != std::string::npos) {
                            same_text_in_train = true;
                            break;
                        }
                    }
                    if (!same_text_in_train) {
                        throw std::runtime_error(std::string("leakage: ") + part + " query '" +
                                                 q.query_id + "' text found in app document '" +
                                                 app_id + "'");
                    }
                }
            }
        }
    };
    scan(prep.validation_queries, "validation");
    scan(prep.test_queries, "test");
}

namespace {

vec::EmbeddingTable hashed_embeddings(const corpus::Dataset& ds, int dim,
                                      std::uint64_t seed) {
    vec::EmbeddingTable table;
    table.dimension = dim;
    for (const auto& q : ds.queries) {
        for (const auto& token : lexical::tokenize(q.text)) {
            if (table.entries.count(token) != 0) continue;
            std::seed_seq seq{seed, static_cast<std::uint64_t>(std::hash<std::string>{}(token))};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = normal(rng);
            table.entries[token] = std::move(v);
        }
    }
    return table;
}

struct KnnFit {
    vec::TfidfVectorizer tfidf;
    vec::EmbeddingTable awe_table;
    std::unique_ptr<vec::KnnRanker> tfidf_ranker;
    std::unique_ptr<vec::KnnRanker> awe_ranker;
};

KnnFit fit_knn(const ExperimentConfig& config, const PreparedExperiment& prep,
               const MethodConfig& method) {
    KnnFit fit;
    std::vector<std::string> train_ids;
    std::vector<std::string> train_texts;
    for (const auto& q : prep.train_queries) {
        train_ids.push_back(q.query_id);
        train_texts.push_back(q.text);
    }
    fit.tfidf.fit(train_texts);
    std::vector<Eigen::VectorXd> tfidf_vecs;
    for (const auto& text : train_texts) tfidf_vecs.push_back(fit.tfidf.transform(text));
    fit.tfidf_ranker = std::make_unique<vec::KnnRanker>(
        train_ids, std::move(tfidf_vecs), prep.dataset.judgments, prep.dataset.registry);

    fit.awe_table = method.embeddings_path.empty()
                        ? hashed_embeddings(prep.dataset, method.hashed_embedding_dim,
                                            config.dataset_seed)
                        : vec::load_embeddings(method.embeddings_path);
    std::vector<Eigen::VectorXd> awe_vecs;
    for (const auto& text : train_texts) {
        awe_vecs.push_back(vec::awe_vector(text, fit.awe_table));
    }
    fit.awe_ranker = std::make_unique<vec::KnnRanker>(
        train_ids, std::move(awe_vecs), prep.dataset.judgments, prep.dataset.registry);
    return fit;
}

ltr::Group make_group(const ExperimentConfig&, const PreparedExperiment& prep,
                      const MethodConfig& method, const lexical::Index& index,
                      const KnnFit& knn, const corpus::Query& query, bool with_gains) {
    const Ranking bm25 = lexical::rank_bm25(index, query.query_id, query.text, method.bm25);
    const Ranking knn_tfidf = knn.tfidf_ranker->rank(
        query.query_id, knn.tfidf.transform(query.text), method.k);
    const Ranking knn_awe = knn.awe_ranker->rank(
        query.query_id, vec::awe_vector(query.text, knn.awe_table), method.k);
    const corpus::Judgment* judgment =
        with_gains ? &prep.dataset.judgments.at(query.query_id) : nullptr;
    return ltr::extract_features(query.query_id, bm25, knn_tfidf, knn_awe, judgment);
}

}  // namespace

ltr::LambdaMartModel fit_lambdamart(const ExperimentConfig& config,
                                    const PreparedExperiment& prep,
                                    const MethodConfig& method) {
    lexical::Index index(prep.app_docs);
    KnnFit knn = fit_knn(config, prep, method);
    std::vector<ltr::Group> train_groups, val_groups;
    for (const auto& q : prep.train_queries) {
        train_groups.push_back(make_group(config, prep, method, index, knn, q, true));
    }
    for (const auto& q : prep.validation_queries) {
        val_groups.push_back(make_group(config, prep, method, index, knn, q, true));
    }
    return ltr::train_lambdamart(train_groups, val_groups, method.gbdt);
}

std::unique_ptr<ce::TinyEncoder> fit_crossencoder(const ExperimentConfig& config,
                                                  const PreparedExperiment& prep,
                                                  const MethodConfig& method,
                                                  ce::FinetuneResult* stats) {
    (void)config;
    lexical::Index index(prep.app_docs);
    std::map<std::string, Ranking> train_bm25;
    for (const auto& q : prep.train_queries) {
        train_bm25[q.query_id] = lexical::rank_bm25(index, q.query_id, q.text, method.bm25);
    }
    const auto pairs = ce::build_finetune_pairs(prep.train_queries, prep.dataset.judgments,
                                                train_bm25, prep.app_docs, ce::word_tokenizer,
                                                method.finetune, nullptr);
    auto encoder = std::make_unique<ce::TinyEncoder>(method.encoder);
    if (method.finetune.epochs > 0) {
        ce::FinetuneResult r = ce::finetune(pairs, method.finetune, *encoder);
        if (stats != nullptr) *stats = std::move(r);
    }
    return encoder;
}

RunResult run_method(const ExperimentConfig& config, const PreparedExperiment& prep,
                     const MethodConfig& method) {
    RunResult run;
    run.method_tag = method.name;
    run.split_id = config.split_mode == corpus::SplitMode::by_query ? "by_query" : "by_task";
    run.seed = config.split_seed;

    try {
        if (method.name == "static") {
            std::vector<std::string> train_ids(prep.split.train.begin(), prep.split.train.end());
            lexical::StaticRanker ranker(prep.dataset.judgments, train_ids,
                                         prep.dataset.registry);
            for (const auto& q : prep.test_queries) {
                run.rankings[q.query_id] = ranker.rank(q.query_id);
            }
        } else if (method.name == "querylm" || method.name == "bm25" ||
                   method.name == "bm25_qe") {
            lexical::Index index(prep.app_docs);
            for (const auto& q : prep.test_queries) {
                if (method.name == "querylm") {
                    run.rankings[q.query_id] =
                        lexical::rank_querylm(index, q.query_id, q.text, method.mu);
                } else if (method.name == "bm25") {
                    run.rankings[q.query_id] =
                        lexical::rank_bm25(index, q.query_id, q.text, method.bm25);
                } else {
                    run.rankings[q.query_id] = lexical::rank_bm25_qe(
                        index, q.query_id, q.text, method.bm25, method.qe);
                }
            }
        } else if (method.name == "knn" || method.name == "knn_awe") {
            KnnFit fit = fit_knn(config, prep, method);
            const int k =
                std::min<int>(method.k, static_cast<int>(prep.train_queries.size()));
            for (const auto& q : prep.test_queries) {
                if (method.name == "knn") {
                    run.rankings[q.query_id] =
                        fit.tfidf_ranker->rank(q.query_id, fit.tfidf.transform(q.text), k);
                } else {
                    run.rankings[q.query_id] = fit.awe_ranker->rank(
                        q.query_id, vec::awe_vector(q.text, fit.awe_table), k);
                }
            }
        } else if (method.name == "lambdamart") {
            lexical::Index index(prep.app_docs);
            KnnFit knn = fit_knn(config, prep, method);
            ltr::LambdaMartModel model = fit_lambdamart(config, prep, method);
            for (const auto& q : prep.test_queries) {
                run.rankings[q.query_id] = ltr::rank_lambdamart(
                    model, q.query_id, make_group(config, prep, method, index, knn, q, false));
            }
        } else if (method.name == "crossencoder") {
            lexical::Index index(prep.app_docs);
            auto encoder = fit_crossencoder(config, prep, method);
            run.candidate_policy = method.candidate_policy;
            const bool topk = method.candidate_policy == "bm25_topk";
            for (const auto& q : prep.test_queries) {
                Ranking bm25;
                if (topk) bm25 = lexical::rank_bm25(index, q.query_id, q.text, method.bm25);
                run.rankings[q.query_id] = ce::rank_crossencoder(
                    q.query_id, q.text, prep.app_docs, *encoder, ce::word_tokenizer,
                    topk ? ce::CandidatePolicy::bm25_topk : ce::CandidatePolicy::all_apps,
                    topk ? &bm25 : nullptr, method.finetune.candidate_depth);
            }
        } else {
            throw ConfigError("unknown method '" + method.name + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw MethodFailure(method.name, "rank", e.what());
    }
    return run;
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string render_metric_table(const std::vector<std::string>& method_order,
                                const std::map<std::string, eval::MetricReport>& reports,
                                const std::vector<int>& cutoffs,
                                const std::map<std::string, bool>& stars,
                                ReportFormat format) {
    std::vector<std::string> metric_names = {"MRR", "P@1"};
    for (int k : cutoffs) metric_names.push_back("nDCG@" + std::to_string(k));

    std::ostringstream out;
    const char* sep = format == ReportFormat::markdown ? " | " : "\t";
    if (format == ReportFormat::markdown) out << "| ";
    out << "Method";
    for (const auto& m : metric_names) out << sep << m;
    if (format == ReportFormat::markdown) {
        out << " |\n|---";
        for (std::size_t i = 0; i < metric_names.size(); ++i) out << "|---";
        out << "|";
    }
    out << "\n";
    for (const auto& method : method_order) {
        auto it = reports.find(method);
        if (it == reports.end()) continue;
        if (format == ReportFormat::markdown) out << "| ";
        out << method;
        const bool star = stars.count(method) != 0 && stars.at(method);
        for (const auto& metric : metric_names) {
            auto mt = it->second.per_metric.find(metric);
            out << sep
                << (mt == it->second.per_metric.end() ? "-"
                                                      : format_value(mt->second.aggregate));
            if (star) out << "*";
        }
        if (format == ReportFormat::markdown) out << " |";
        out << "\n";
    }
    return out.str();
}

std::string render_confusion_table(const eval::ConfusionTable& table, ReportFormat format) {
    std::ostringstream out;
    const char* sep = format == ReportFormat::markdown ? " | " : "\t";
    if (format == ReportFormat::markdown) {
        out << "| App" << sep << "candidate" << sep << "reference" << sep
            << "delta%" << " |\n|---|---|---|---|\n";
    } else {
        out << "App" << sep << "candidate" << sep << "reference" << sep << "delta%\n";
    }
    auto row = [&](const eval::ConfusionRow& r) {
        if (format == ReportFormat::markdown) out << "| ";
        out << r.app_id << sep << format_value(r.rate_candidate) << sep
            << format_value(r.rate_reference) << sep << r.delta_percent;
        if (format == ReportFormat::markdown) out << " |";
        out << "\n";
    };
    for (const auto& r : table.rows) row(r);
    if (!table.rows.empty()) row(table.average);
    return out.str();
}

void emit_report(const ExperimentConfig& config,
                 const std::map<std::string, eval::MetricReport>& reports,
                 const std::map<std::string, RunResult>& runs,
                 const std::map<std::string, corpus::Judgment>& judgments,
                 ReportFormat format, const std::string& out_dir) {
    if (reports.empty()) throw std::runtime_error("emit_report: no evaluated runs");
    fs::create_directories(out_dir);

    std::vector<std::string> method_order;
    for (const auto& m : config.methods) {
        if (reports.count(m.name) != 0) method_order.push_back(m.name);
    }
    for (const auto& [name, r] : reports) {
        if (std::find(method_order.begin(), method_order.end(), name) == method_order.end()) {
            method_order.push_back(name);
        }
    }

    // significance stars: primary method vs every other, Bonferroni-corrected
    std::map<std::string, bool> stars;
    if (!config.primary_method.empty() && reports.count(config.primary_method) != 0 &&
        reports.size() >= 2) {
        const int n_comparisons = config.bonferroni_comparisons > 0
                                      ? config.bonferroni_comparisons
                                      : static_cast<int>(reports.size()) - 1;
        const auto& primary = reports.at(config.primary_method);
        bool all_significant = true;
        for (const auto& [other_name, other] : reports) {
            if (other_name == config.primary_method) continue;
            std::vector<double> a, b;
            const auto& pm = primary.per_metric.at("MRR").per_query;
            for (const auto& [qid, v] : pm) {
                auto ot = other.per_metric.at("MRR").per_query.find(qid);
                if (ot == other.per_metric.at("MRR").per_query.end()) continue;
                a.push_back(v);
                b.push_back(ot->second);
            }
            if (a.size() < 2 ||
                !eval::paired_significance(a, b, n_comparisons).significant) {
                all_significant = false;
                break;
            }
        }
        stars[config.primary_method] = all_significant;
    }

    const std::string ext = format == ReportFormat::markdown ? ".md" : ".tsv";
    {
        std::ofstream out(fs::path(out_dir) / ("metrics" + ext));
        out << render_metric_table(method_order, reports, config.cutoffs, stars, format);
    }

    if (!config.confusion_candidate.empty() && runs.count(config.confusion_candidate) != 0 &&
        runs.count(config.confusion_reference) != 0) {
        std::string dominant = config.dominant_app;
        const eval::ConfusionTable table =
            eval::confusion_table(runs.at(config.confusion_candidate),
                                  runs.at(config.confusion_reference), judgments, dominant);
        std::ofstream out(fs::path(out_dir) / ("confusion" + ext));
        out << render_confusion_table(table, format);
    }

    // per-app MRR data for bar-chart plots
    {
        std::ofstream out(fs::path(out_dir) / "per_app_mrr.tsv");
        out << "app\tmethod\tmrr\n";
        for (const auto& method : method_order) {
            for (const auto& [app, mrr] : reports.at(method).per_app_mrr) {
                out << app << '\t' << method << '\t' << format_value(mrr) << "\n";
            }
        }
    }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    fs::create_directories(config.output_dir);
    const fs::path out(config.output_dir);

    PreparedExperiment prep = prepare(config);
    corpus::save_dataset(prep.dataset, (out / "dataset.jsonl").string(),
                         (out / "registry.jsonl").string());
    appdocs::save_app_documents(prep.app_docs, (out / "appdocs.jsonl").string());
    {
        json split;
        split["mode"] = config.split_mode == corpus::SplitMode::by_query ? "by_query" : "by_task";
        split["seed"] = config.split_seed;
        split["train"] = prep.split.train;
        split["validation"] = prep.split.validation;
        split["test"] = prep.split.test;
        std::ofstream sf(out / "split.json");
        sf << split.dump(2) << "\n";
    }
    leakage_check(prep);

    std::string dominant = config.dominant_app.empty() ? prep.dataset.registry.dominant_app
                                                       : config.dominant_app;

    fs::create_directories(out / "runs");
    fs::create_directories(out / "reports");
    json manifest = config_to_json(config);
    manifest["dominant_app"] = dominant;
    manifest["n_queries"] = prep.dataset.queries.size();
    manifest["n_train"] = prep.split.train.size();
    manifest["n_validation"] = prep.split.validation.size();
    manifest["n_test"] = prep.split.test.size();
    if (config.split_mode == corpus::SplitMode::by_task) {
        // post-hoc guarantee: no task straddles partitions
        std::map<std::string, std::set<int>> task_parts;
        for (const auto& q : prep.dataset.queries) {
            int part = prep.split.train.count(q.query_id) != 0          ? 0
                       : prep.split.validation.count(q.query_id) != 0   ? 1
                                                                        : 2;
            task_parts[q.task_id].insert(part);
        }
        for (const auto& [task, parts] : task_parts) {
            if (parts.size() > 1) {
                throw std::runtime_error("task '" + task + "' straddles split partitions");
            }
        }
        manifest["task_overlap"] = 0;
    }

    bool failed = false;
    json method_status = json::object();
    for (const auto& method : config.methods) {
        try {
            RunResult run = run_method(config, prep, method);
            save_run(run, (out / "runs" / (method.name + ".run")).string());
            eval::MetricReport report =
                eval::evaluate_run(run, prep.dataset.judgments, config.cutoffs);
            json rj;
            for (const auto& [metric, values] : report.per_metric) {
                rj["metrics"][metric] = values.aggregate;
            }
            rj["macro_mrr"] = report.macro_mrr;
            rj["per_app_mrr"] = report.per_app_mrr;
            std::ofstream rf(out / "reports" / (method.name + ".json"));
            rf << rj.dump(2) << "\n";
            result.runs.emplace(method.name, std::move(run));
            result.reports.emplace(method.name, std::move(report));
            method_status[method.name] = "ok";
        } catch (const MethodFailure& e) {
            failed = true;
            method_status[method.name] = std::string("failed: ") + e.what();
        }
    }
    manifest["method_status"] = method_status;
    manifest["status"] = failed ? "partial" : "ok";
    result.manifest_path = (out / "manifest.json").string();
    {
        std::ofstream mf(result.manifest_path);
        mf << manifest.dump(2) << "\n";
    }

    if (!result.reports.empty()) {
        ExperimentConfig report_config = config;
        report_config.dominant_app = dominant;
        emit_report(report_config, result.reports, result.runs, prep.dataset.judgments,
                    ReportFormat::markdown, (out / "reports").string());
        emit_report(report_config, result.reports, result.runs, prep.dataset.judgments,
                    ReportFormat::delimited, (out / "reports").string());
    }
    if (failed) {
        throw MethodFailure("experiment", "run", "one or more methods failed; see manifest");
    }
    return result;
}

ExperimentResult reproduce(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot open manifest: " + manifest_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return run_experiment(config_from_json_text(buf.str()));
}

}  // namespace appsel::runner
