#pragma once

#include <map>
#include <string>
#include <vector>

#include "appsel/appdocs.hpp"
#include "appsel/corpus.hpp"
#include "appsel/ranking.hpp"

namespace appsel::lexical {

/// Lowercase, split on anything that is not a letter or digit.
std::vector<std::string> tokenize(const std::string& text);

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.0;
};

struct QeParams {
    int fb_docs = 10;
    int fb_terms = 10;
    double interpolation = 0.5;
};

/// Inverted index over the app documents. Immutable after construction.
class Index {
  public:
    explicit Index(const appdocs::AppDocumentMap& docs);

    std::size_t num_docs() const { return doc_ids_.size(); }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::size_t doc_length(std::size_t doc) const { return doc_lengths_[doc]; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t total_terms() const { return total_terms_; }

    /// Postings for a term: (doc index, term frequency) pairs; empty if unseen.
    const std::vector<std::pair<std::size_t, std::size_t>>& postings(
        const std::string& term) const;
    std::size_t doc_freq(const std::string& term) const;
    std::size_t collection_freq(const std::string& term) const;

    /// Term-frequency map of one document.
    const std::map<std::string, std::size_t>& doc_terms(std::size_t doc) const {
        return doc_terms_[doc];
    }

  private:
    std::vector<std::string> doc_ids_;
    std::vector<std::size_t> doc_lengths_;
    double avg_doc_length_ = 0;
    std::size_t total_terms_ = 0;
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> postings_;
    std::map<std::string, std::size_t> collection_freq_;
    std::vector<std::map<std::string, std::size_t>> doc_terms_;
};

/// Query-independent popularity ranking over the training judgments.
class StaticRanker {
  public:
    StaticRanker(const std::map<std::string, corpus::Judgment>& train_judgments,
                 const std::vector<std::string>& train_query_ids,
                 const corpus::AppRegistry& registry);

    Ranking rank(const std::string& query_id) const;

  private:
    Ranking prototype_;
};

/// Query likelihood with Dirichlet smoothing against the collection model.
Ranking rank_querylm(const Index& index, const std::string& query_id,
                     const std::string& query_text, double mu = 2000.0);

Ranking rank_bm25(const Index& index, const std::string& query_id,
                  const std::string& query_text, const Bm25Params& params = {});

/// BM25 with RM3 pseudo-relevance feedback expansion.
Ranking rank_bm25_qe(const Index& index, const std::string& query_id,
                     const std::string& query_text, const Bm25Params& bm25 = {},
                     const QeParams& qe = {});

/// Weighted-term BM25, the second-pass scorer behind rank_bm25_qe.
Ranking rank_bm25_weighted(const Index& index, const std::string& query_id,
                           const std::map<std::string, double>& term_weights,
                           const Bm25Params& params);

}  // namespace appsel::lexical
