#include "appsel/crossencoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace appsel::ce {

using nlohmann::json;

std::vector<std::string> word_tokenizer(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// run-collapsed character-class shape: "John" -> "Xx", "2021" -> "d"
std::string word_shape(const std::string& token) {
    std::string shape;
    char prev = 0;
    for (unsigned char c : token) {
        char cls = 'o';
        if (std::isupper(c)) cls = 'X';
        else if (std::islower(c)) cls = 'x';
        else if (std::isdigit(c)) cls = 'd';
        if (cls != prev) shape.push_back(cls);
        prev = cls;
    }
    return shape;
}

std::string lowercase(const std::string& token) {
    std::string out = token;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

TinyEncoder::TinyEncoder(const Config& config) : config_(config) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 0.1);
    auto init = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
        }
        return m;
    };
    const int d = config.embedding_dim;
    const int h = config.hidden_dim;
    embeddings_ = init(d, config.vocab_buckets);
    hidden_w_ = init(h, 2 * d);
    hidden_b_ = Eigen::VectorXd::Zero(h);
    head_w_ = init(2, h);
    head_b_ = Eigen::Vector2d::Zero();

    moments_.resize(5);
    auto zero_like = [](const Eigen::MatrixXd& m) {
        return Moments{Eigen::MatrixXd::Zero(m.rows(), m.cols()),
                       Eigen::MatrixXd::Zero(m.rows(), m.cols())};
    };
    moments_[0] = zero_like(embeddings_);
    moments_[1] = zero_like(hidden_w_);
    moments_[2] = zero_like(hidden_b_);
    moments_[3] = zero_like(head_w_);
    moments_[4] = zero_like(head_b_);
}

TinyEncoder::Features TinyEncoder::featurize(const appdocs::PairInput& pair) const {
    Features f;
    auto add = [&](const std::string& token, std::vector<int>* out) {
        out->push_back(static_cast<int>(fnv1a("w:" + lowercase(token)) %
                                        static_cast<std::uint64_t>(config_.vocab_buckets)));
        out->push_back(static_cast<int>(fnv1a("s:" + word_shape(token)) %
                                        static_cast<std::uint64_t>(config_.vocab_buckets)));
    };
    for (const auto& t : pair.query_tokens) add(t, &f.query_ids);
    for (const auto& t : pair.document_tokens) add(t, &f.doc_ids);
    return f;
}

Eigen::Vector2d TinyEncoder::forward(const Features& f, Eigen::VectorXd* pooled_out,
                                     Eigen::VectorXd* vq_out, Eigen::VectorXd* vd_out) const {
    const int d = config_.embedding_dim;
    Eigen::VectorXd vq = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd vd = Eigen::VectorXd::Zero(d);
    for (int id : f.query_ids) vq += embeddings_.col(id);
    for (int id : f.doc_ids) vd += embeddings_.col(id);
    if (!f.query_ids.empty()) vq /= static_cast<double>(f.query_ids.size());
    if (!f.doc_ids.empty()) vd /= static_cast<double>(f.doc_ids.size());

    Eigen::VectorXd concat(2 * d);
    concat << vq, vd;
    Eigen::VectorXd pooled = (hidden_w_ * concat + hidden_b_).array().tanh();
    Eigen::Vector2d logits = head_w_ * pooled + head_b_;

    if (pooled_out != nullptr) *pooled_out = pooled;
    if (vq_out != nullptr) *vq_out = vq;
    if (vd_out != nullptr) *vd_out = vd;

    const double m = logits.maxCoeff();
    Eigen::Vector2d p = (logits.array() - m).exp();
    p /= p.sum();
    return p;
}

std::vector<double> TinyEncoder::predict(
    const std::vector<const appdocs::PairInput*>& batch) const {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto* pair : batch) {
        out.push_back(forward(featurize(*pair), nullptr, nullptr, nullptr)[1]);
    }
    return out;
}

double TinyEncoder::update(const std::vector<const appdocs::PairInput*>& batch,
                           const std::vector<int>& labels, double learning_rate) {
    if (batch.size() != labels.size() || batch.empty()) {
        throw std::invalid_argument("update: batch and labels must align and be non-empty");
    }
    const int d = config_.embedding_dim;

    Eigen::MatrixXd g_emb = Eigen::MatrixXd::Zero(embeddings_.rows(), embeddings_.cols());
    Eigen::MatrixXd g_hw = Eigen::MatrixXd::Zero(hidden_w_.rows(), hidden_w_.cols());
    Eigen::VectorXd g_hb = Eigen::VectorXd::Zero(hidden_b_.size());
    Eigen::MatrixXd g_uw = Eigen::MatrixXd::Zero(head_w_.rows(), head_w_.cols());
    Eigen::Vector2d g_ub = Eigen::Vector2d::Zero();

    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Features f = featurize(*batch[i]);
        Eigen::VectorXd pooled, vq, vd;
        const Eigen::Vector2d p = forward(f, &pooled, &vq, &vd);
        const int label = labels[i] != 0 ? 1 : 0;
        loss += -std::log(std::max(p[label], 1e-12)) * inv_n;

        Eigen::Vector2d dlogits = p;
        dlogits[label] -= 1.0;
        dlogits *= inv_n;

        g_uw += dlogits * pooled.transpose();
        g_ub += dlogits;
        Eigen::VectorXd dpooled = head_w_.transpose() * dlogits;
        Eigen::VectorXd dz = dpooled.array() * (1.0 - pooled.array().square());
        Eigen::VectorXd concat(2 * d);
        concat << vq, vd;
        g_hw += dz * concat.transpose();
        g_hb += dz;
        Eigen::VectorXd dconcat = hidden_w_.transpose() * dz;
        if (!f.query_ids.empty()) {
            const Eigen::VectorXd dvq =
                dconcat.head(d) / static_cast<double>(f.query_ids.size());
            for (int id : f.query_ids) g_emb.col(id) += dvq;
        }
        if (!f.doc_ids.empty()) {
            const Eigen::VectorXd dvd =
                dconcat.tail(d) / static_cast<double>(f.doc_ids.size());
            for (int id : f.doc_ids) g_emb.col(id) += dvd;
        }
    }

    ++step_;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    auto adam = [&](Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
                    Moments& mom) {
        mom.m = beta1 * mom.m + (1.0 - beta1) * grad;
        mom.v = beta2 * mom.v + (1.0 - beta2) * grad.array().square().matrix();
        const Eigen::ArrayXXd m_hat = mom.m.array() / bias1;
        const Eigen::ArrayXXd v_hat = mom.v.array() / bias2;
        param.array() -= learning_rate * m_hat / (v_hat.sqrt() + eps);
    };
    adam(embeddings_, g_emb, moments_[0]);
    adam(hidden_w_, g_hw, moments_[1]);
    adam(hidden_b_, g_hb, moments_[2]);
    adam(head_w_, g_uw, moments_[3]);
    adam(head_b_, g_ub, moments_[4]);
    return loss;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << m(i, j) << (j + 1 == m.cols() ? '\n' : ' ');
        }
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expected_name) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || name != expected_name) {
        throw std::runtime_error("checkpoint: expected matrix '" + expected_name + "'");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> m(i, j))) throw std::runtime_error("checkpoint: truncated matrix");
        }
    }
    return m;
}

}  // namespace

void TinyEncoder::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "encoder.txt");
        if (!out) throw std::runtime_error("cannot write encoder weights in " + dir);
        write_matrix(out, "embeddings", embeddings_);
        write_matrix(out, "hidden_w", hidden_w_);
        write_matrix(out, "hidden_b", hidden_b_);
    }
    {
        std::ofstream out(fs::path(dir) / "head.txt");
        if (!out) throw std::runtime_error("cannot write head weights in " + dir);
        write_matrix(out, "head_w", head_w_);
        write_matrix(out, "head_b", head_b_);
    }
    json manifest;
    manifest["encoder"] = identifier();
    manifest["vocab_buckets"] = config_.vocab_buckets;
    manifest["embedding_dim"] = config_.embedding_dim;
    manifest["hidden_dim"] = config_.hidden_dim;
    manifest["token_budget"] = config_.token_budget;
    manifest["seed"] = config_.seed;
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

std::unique_ptr<TinyEncoder> TinyEncoder::load(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("cannot open checkpoint manifest in " + dir);
    json manifest = json::parse(mf);
    Config config;
    config.vocab_buckets = manifest.at("vocab_buckets").get<int>();
    config.embedding_dim = manifest.at("embedding_dim").get<int>();
    config.hidden_dim = manifest.at("hidden_dim").get<int>();
    config.token_budget = manifest.at("token_budget").get<int>();
    config.seed = manifest.at("seed").get<std::uint64_t>();

    auto encoder = std::make_unique<TinyEncoder>(config);
    std::ifstream enc(fs::path(dir) / "encoder.txt");
    if (!enc) throw std::runtime_error("cannot open encoder weights in " + dir);
    encoder->embeddings_ = read_matrix(enc, "embeddings");
    encoder->hidden_w_ = read_matrix(enc, "hidden_w");
    encoder->hidden_b_ = read_matrix(enc, "hidden_b");
    std::ifstream head(fs::path(dir) / "head.txt");
    if (!head) throw std::runtime_error("cannot open head weights in " + dir);
    encoder->head_w_ = read_matrix(head, "head_w");
    encoder->head_b_ = read_matrix(head, "head_b");
    return encoder;
}

std::vector<TrainingPair> build_finetune_pairs(
    const std::vector<corpus::Query>& train_queries,
    const std::map<std::string, corpus::Judgment>& judgments,
    const std::map<std::string, Ranking>& bm25_rankings,
    const appdocs::AppDocumentMap& app_docs, const appdocs::Tokenizer& tokenizer,
    const FinetuneParams& params, PairBuildStats* stats) {
    std::vector<TrainingPair> pairs;
    for (const auto& query : train_queries) {
        auto rt = bm25_rankings.find(query.query_id);
        if (rt == bm25_rankings.end()) {
            throw std::invalid_argument("no BM25 ranking for training query '" +
                                        query.query_id + "'");
        }
        auto jt = judgments.find(query.query_id);
        const corpus::Judgment* judgment = jt == judgments.end() ? nullptr : &jt->second;

        std::size_t positives_here = 0;
        const std::size_t depth = std::min<std::size_t>(
            rt->second.items.size(), static_cast<std::size_t>(params.candidate_depth));
        for (std::size_t i = 0; i < depth; ++i) {
            const std::string& app_id = rt->second.items[i].first;
            TrainingPair pair;
            pair.query_id = query.query_id;
            pair.app_id = app_id;
            pair.pair = appdocs::make_pair_input(query.text, app_docs.at(app_id), tokenizer,
                                                 params.token_budget);
            pair.relevant = judgment != nullptr && judgment->gain(app_id) >= 1;
            if (stats != nullptr) {
                if (pair.relevant) ++stats->positives;
                else ++stats->negatives;
            }
            if (pair.relevant) ++positives_here;
            pairs.push_back(std::move(pair));
        }
        if (stats != nullptr && positives_here == 0) ++stats->queries_without_positive;
    }
    return pairs;
}

FinetuneResult finetune(const std::vector<TrainingPair>& pairs, const FinetuneParams& params,
                        Encoder& encoder) {
    if (pairs.empty()) throw std::invalid_argument("finetune: no training pairs");
    bool any_pos = false, any_neg = false;
    for (const auto& p : pairs) (p.relevant ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) {
        throw std::invalid_argument("finetune: training pairs carry only one label");
    }
    if (encoder.token_budget() != params.token_budget) {
        throw std::invalid_argument("finetune: encoder token budget " +
                                    std::to_string(encoder.token_budget()) +
                                    " != params token budget " +
                                    std::to_string(params.token_budget));
    }

    FinetuneResult result;
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    long step = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(epoch) * 0x9e3779b97f4a7c15ULL);
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(params.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(params.batch_size));
            std::vector<const appdocs::PairInput*> batch;
            std::vector<int> labels;
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(&pairs[order[i]].pair);
                labels.push_back(pairs[order[i]].relevant ? 1 : 0);
            }
            double lr = params.learning_rate;
            if (params.warmup_steps > 0) {
                lr *= std::min(1.0, static_cast<double>(step + 1) /
                                        static_cast<double>(params.warmup_steps));
            }
            epoch_loss += encoder.update(batch, labels, lr);
            ++n_batches;
            ++step;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
    }
    result.final_loss = result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back();
    return result;
}

Ranking rank_crossencoder(const std::string& query_id, const std::string& query_text,
                          const appdocs::AppDocumentMap& app_docs, const Encoder& encoder,
                          const appdocs::Tokenizer& tokenizer, CandidatePolicy policy,
                          const Ranking* bm25_ranking, int candidate_depth) {
    std::vector<std::string> candidates;
    std::vector<std::string> rest;
    if (policy == CandidatePolicy::all_apps) {
        for (const auto& [app_id, doc] : app_docs) candidates.push_back(app_id);
    } else {
        if (bm25_ranking == nullptr) {
            throw std::invalid_argument("bm25_topk policy needs a first-pass BM25 ranking");
        }
        for (const auto& [app_id, score] : bm25_ranking->items) {
            if (static_cast<int>(candidates.size()) < candidate_depth) {
                candidates.push_back(app_id);
            } else {
                rest.push_back(app_id);
            }
        }
    }

    std::vector<appdocs::PairInput> inputs;
    inputs.reserve(candidates.size());
    for (const auto& app_id : candidates) {
        inputs.push_back(appdocs::make_pair_input(query_text, app_docs.at(app_id), tokenizer,
                                                  encoder.token_budget()));
    }
    std::vector<const appdocs::PairInput*> batch;
    for (const auto& in : inputs) batch.push_back(&in);
    const std::vector<double> probs = encoder.predict(batch);

    Ranking r;
    r.query_id = query_id;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        r.items.emplace_back(candidates[i], probs[i]);
    }
    // unscored apps follow the scored block in BM25 order
    for (std::size_t i = 0; i < rest.size(); ++i) {
        r.items.emplace_back(rest[i], -1.0 - static_cast<double>(i));
    }
    r.finalize();
    return r;
}

}  // namespace appsel::ce
