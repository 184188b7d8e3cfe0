#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "appsel/corpus.hpp"

namespace appsel::appdocs {

/// Pseudo-document for one app: its training queries, shuffled once per
/// seed and joined with ", ".
struct AppDocument {
    std::string app_id;
    std::string text;
    std::vector<std::string> source_query_ids;
    std::uint64_t seed = 0;
};

using AppDocumentMap = std::map<std::string, AppDocument>;

/// Every registered app gets a document; apps with no training queries get
/// an empty one. A multi-label query is added to each of its relevant
/// apps' documents.
AppDocumentMap build_app_documents(const std::vector<corpus::Query>& train_queries,
                                   const std::map<std::string, corpus::Judgment>& judgments,
                                   const corpus::AppRegistry& registry,
                                   std::uint64_t seed);

void save_app_documents(const AppDocumentMap& docs, const std::string& path);
AppDocumentMap load_app_documents(const std::string& path);

using Tokenizer = std::function<std::vector<std::string>(const std::string&)>;

/// Encoder input for one query-document pair. Token budget covers the
/// query, the document, and the 3 special positions ([CLS], 2x[SEP]).
struct PairInput {
    std::vector<std::string> query_tokens;
    std::vector<std::string> document_tokens;
    int token_budget = 256;
};

/// Tail-truncates the document so the pair fits the budget; the query is
/// never touched. Throws std::invalid_argument if the query alone does
/// not fit.
PairInput make_pair_input(const std::string& query_text, const AppDocument& doc,
                          const Tokenizer& tokenizer, int token_budget = 256);

}  // namespace appsel::appdocs
