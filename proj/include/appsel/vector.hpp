#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "appsel/corpus.hpp"
#include "appsel/ranking.hpp"

namespace appsel::vec {

struct EmbeddingTable {
    int dimension = 0;
    std::map<std::string, Eigen::VectorXd> entries;
};

/// Text format: one token per line, "token v1 v2 ... vd"; dimension fixed
/// by the first line.
EmbeddingTable load_embeddings(const std::string& path);

enum class Space { tfidf, awe };

struct KnnParams {
    int k = 10;
    Space space = Space::tfidf;
};

/// TF-IDF over the training-query vocabulary. Dense vectors: the registry
/// vocabulary is small at this corpus scale.
class TfidfVectorizer {
  public:
    void fit(const std::vector<std::string>& texts);
    Eigen::VectorXd transform(const std::string& text) const;
    std::size_t vocabulary_size() const { return vocab_.size(); }

  private:
    std::map<std::string, std::size_t> vocab_;
    Eigen::VectorXd idf_;
};

/// Unweighted mean of in-vocabulary token vectors; zero vector when every
/// token is out of vocabulary.
Eigen::VectorXd awe_vector(const std::string& text, const EmbeddingTable& table);

/// Cosine similarity; 0 when either vector is zero.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Exhaustive k-NN over the training queries. score(app) = sum of
/// max(similarity, 0) over the k nearest neighbors for which the app is
/// relevant.
class KnnRanker {
  public:
    KnnRanker(std::vector<std::string> train_query_ids,
              std::vector<Eigen::VectorXd> train_vectors,
              const std::map<std::string, corpus::Judgment>& judgments,
              const corpus::AppRegistry& registry);

    Ranking rank(const std::string& query_id, const Eigen::VectorXd& query_vec,
                 int k) const;

    /// (query_id, similarity) of the k nearest training queries.
    std::vector<std::pair<std::string, double>> neighbors(const Eigen::VectorXd& query_vec,
                                                          int k) const;

  private:
    std::vector<std::string> train_query_ids_;
    std::vector<Eigen::VectorXd> train_vectors_;
    const std::map<std::string, corpus::Judgment>* judgments_;
    std::vector<std::string> app_ids_;
};

}  // namespace appsel::vec
