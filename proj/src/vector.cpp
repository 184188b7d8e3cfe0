#include "appsel/vector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "appsel/lexical.hpp"

namespace appsel::vec {

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": embedding line without values");
        }
        if (table.dimension == 0) {
            table.dimension = static_cast<int>(values.size());
        } else if (static_cast<int>(values.size()) != table.dimension) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": dimension mismatch (expected " +
                                     std::to_string(table.dimension) + ", got " +
                                     std::to_string(values.size()) + ")");
        }
        table.entries[token] =
            Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    return table;
}

void TfidfVectorizer::fit(const std::vector<std::string>& texts) {
    vocab_.clear();
    std::map<std::string, std::size_t> df;
    for (const auto& text : texts) {
        std::map<std::string, bool> seen;
        for (const auto& term : lexical::tokenize(text)) {
            if (vocab_.find(term) == vocab_.end()) {
                const std::size_t id = vocab_.size();
                vocab_[term] = id;
            }
            if (!seen[term]) {
                seen[term] = true;
                ++df[term];
            }
        }
    }
    idf_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_.size()));
    const double n = static_cast<double>(texts.size());
    for (const auto& [term, id] : vocab_) {
        idf_[static_cast<Eigen::Index>(id)] =
            std::log((n + 1.0) / (static_cast<double>(df[term]) + 1.0)) + 1.0;
    }
}

Eigen::VectorXd TfidfVectorizer::transform(const std::string& text) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_.size()));
    for (const auto& term : lexical::tokenize(text)) {
        auto it = vocab_.find(term);
        if (it != vocab_.end()) v[static_cast<Eigen::Index>(it->second)] += 1.0;
    }
    return v.cwiseProduct(idf_);
}

Eigen::VectorXd awe_vector(const std::string& text, const EmbeddingTable& table) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dimension);
    int hits = 0;
    for (const auto& term : lexical::tokenize(text)) {
        auto it = table.entries.find(term);
        if (it != table.entries.end()) {
            sum += it->second;
            ++hits;
        }
    }
    if (hits > 0) sum /= static_cast<double>(hits);
    return sum;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

KnnRanker::KnnRanker(std::vector<std::string> train_query_ids,
                     std::vector<Eigen::VectorXd> train_vectors,
                     const std::map<std::string, corpus::Judgment>& judgments,
                     const corpus::AppRegistry& registry)
    : train_query_ids_(std::move(train_query_ids)),
      train_vectors_(std::move(train_vectors)),
      judgments_(&judgments),
      app_ids_(registry.app_ids()) {
    if (train_query_ids_.size() != train_vectors_.size()) {
        throw std::invalid_argument("knn: ids and vectors differ in length");
    }
}

std::vector<std::pair<std::string, double>> KnnRanker::neighbors(
    const Eigen::VectorXd& query_vec, int k) const {
    std::vector<std::pair<std::string, double>> sims;
    sims.reserve(train_query_ids_.size());
    for (std::size_t i = 0; i < train_query_ids_.size(); ++i) {
        sims.emplace_back(train_query_ids_[i], cosine(query_vec, train_vectors_[i]));
    }
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(sims.size()) > k) sims.resize(static_cast<std::size_t>(k));
    return sims;
}

Ranking KnnRanker::rank(const std::string& query_id, const Eigen::VectorXd& query_vec,
                        int k) const {
    std::map<std::string, double> scores;
    for (const auto& app_id : app_ids_) scores[app_id] = 0.0;
    for (const auto& [neighbor_id, sim] : neighbors(query_vec, k)) {
        auto it = judgments_->find(neighbor_id);
        if (it == judgments_->end()) continue;
        for (const auto& app_id : it->second.relevant_apps) {
            scores[app_id] += std::max(sim, 0.0);
        }
    }
    Ranking r;
    r.query_id = query_id;
    for (const auto& [app_id, score] : scores) r.items.emplace_back(app_id, score);
    r.finalize();
    return r;
}

}  // namespace appsel::vec
