#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "appsel/appdocs.hpp"
#include "appsel/corpus.hpp"
#include "appsel/ranking.hpp"

namespace appsel::ce {

struct FinetuneParams {
    double learning_rate = 2e-5;
    int warmup_steps = 0;
    int batch_size = 16;
    int epochs = 2;
    int token_budget = 256;
    int candidate_depth = 10;
    std::uint64_t seed = 0;
};

struct TrainingPair {
    std::string query_id;
    std::string app_id;
    appdocs::PairInput pair;
    bool relevant = false;
};

/// Case-preserving word tokenizer for encoder input (word shape carries
/// signal, so no lowercasing here).
std::vector<std::string> word_tokenizer(const std::string& text);

/// Contract for a pluggable pair encoder with a 2-way classification head.
/// Implementations must be seed-deterministic in both directions.
class Encoder {
  public:
    virtual ~Encoder() = default;

    /// Probability of relevance in [0,1] for each pair.
    virtual std::vector<double> predict(
        const std::vector<const appdocs::PairInput*>& batch) const = 0;

    /// One optimization step; returns the batch mean cross-entropy loss.
    virtual double update(const std::vector<const appdocs::PairInput*>& batch,
                          const std::vector<int>& labels, double learning_rate) = 0;

    virtual int token_budget() const = 0;
    virtual std::string identifier() const = 0;

    virtual void save(const std::string& dir) const = 0;
};

/// Small randomly initialized encoder for desk-scale runs: hashed token +
/// word-shape embeddings, segment-wise mean pooling, one tanh layer, and a
/// linear head, trained with Adam.
class TinyEncoder : public Encoder {
  public:
    struct Config {
        int vocab_buckets = 2048;
        int embedding_dim = 24;
        int hidden_dim = 24;
        int token_budget = 256;
        std::uint64_t seed = 0;
    };

    explicit TinyEncoder(const Config& config);

    std::vector<double> predict(
        const std::vector<const appdocs::PairInput*>& batch) const override;
    double update(const std::vector<const appdocs::PairInput*>& batch,
                  const std::vector<int>& labels, double learning_rate) override;
    int token_budget() const override { return config_.token_budget; }
    std::string identifier() const override { return "tiny-random"; }

    void save(const std::string& dir) const override;
    static std::unique_ptr<TinyEncoder> load(const std::string& dir);

  private:
    struct Features {
        std::vector<int> query_ids;
        std::vector<int> doc_ids;
    };
    Features featurize(const appdocs::PairInput& pair) const;
    Eigen::Vector2d forward(const Features& f, Eigen::VectorXd* pooled_out,
                            Eigen::VectorXd* vq_out, Eigen::VectorXd* vd_out) const;

    Config config_;
    Eigen::MatrixXd embeddings_;  // dim x buckets
    Eigen::MatrixXd hidden_w_;    // hidden x 2*dim
    Eigen::VectorXd hidden_b_;
    Eigen::MatrixXd head_w_;      // 2 x hidden
    Eigen::Vector2d head_b_;

    // Adam state
    struct Moments {
        Eigen::MatrixXd m, v;
    };
    std::vector<Moments> moments_;
    long step_ = 0;
};

/// One training pair per app in the query's BM25 top-candidate_depth.
struct PairBuildStats {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t queries_without_positive = 0;  // gold app missing from the candidates
};

std::vector<TrainingPair> build_finetune_pairs(
    const std::vector<corpus::Query>& train_queries,
    const std::map<std::string, corpus::Judgment>& judgments,
    const std::map<std::string, Ranking>& bm25_rankings,
    const appdocs::AppDocumentMap& app_docs, const appdocs::Tokenizer& tokenizer,
    const FinetuneParams& params, PairBuildStats* stats = nullptr);

struct FinetuneResult {
    std::vector<double> epoch_losses;  // mean loss per epoch
    double final_loss = 0.0;
};

FinetuneResult finetune(const std::vector<TrainingPair>& pairs, const FinetuneParams& params,
                        Encoder& encoder);

enum class CandidatePolicy { all_apps, bm25_topk };

/// Scores every candidate's (query, app document) pair. Under bm25_topk,
/// apps outside the candidate set are appended after the scored apps in
/// BM25 order (negative placeholder scores keep the global sort honest).
Ranking rank_crossencoder(const std::string& query_id, const std::string& query_text,
                          const appdocs::AppDocumentMap& app_docs, const Encoder& encoder,
                          const appdocs::Tokenizer& tokenizer, CandidatePolicy policy,
                          const Ranking* bm25_ranking = nullptr, int candidate_depth = 10);

}  // namespace appsel::ce
