#include "appsel/appdocs.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace appsel::appdocs {

using nlohmann::json;

AppDocumentMap build_app_documents(const std::vector<corpus::Query>& train_queries,
                                   const std::map<std::string, corpus::Judgment>& judgments,
                                   const corpus::AppRegistry& registry,
                                   std::uint64_t seed) {
    if (train_queries.empty()) {
        throw std::invalid_argument("build_app_documents: empty training set");
    }

    std::map<std::string, std::vector<const corpus::Query*>> per_app;
    for (const auto& app : registry.apps) per_app[app.app_id];
    for (const auto& q : train_queries) {
        auto it = judgments.find(q.query_id);
        if (it == judgments.end()) continue;
        for (const auto& app_id : it->second.relevant_apps) {
            per_app[app_id].push_back(&q);
        }
    }

    AppDocumentMap docs;
    for (auto& [app_id, queries] : per_app) {
        // sub-seed per app so adding an app does not reshuffle the others
        std::seed_seq seq{seed, static_cast<std::uint64_t>(std::hash<std::string>{}(app_id))};
        std::mt19937_64 rng(seq);
        std::shuffle(queries.begin(), queries.end(), rng);

        AppDocument doc;
        doc.app_id = app_id;
        doc.seed = seed;
        for (const auto* q : queries) {
            if (!doc.text.empty()) doc.text += ", ";
            doc.text += q->text;
            doc.source_query_ids.push_back(q->query_id);
        }
        docs.emplace(app_id, std::move(doc));
    }
    return docs;
}

void save_app_documents(const AppDocumentMap& docs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write app documents: " + path);
    for (const auto& [app_id, doc] : docs) {
        json rec;
        rec["app_id"] = doc.app_id;
        rec["seed"] = doc.seed;
        rec["text"] = doc.text;
        rec["source_query_ids"] = doc.source_query_ids;
        out << rec.dump() << "\n";
    }
}

AppDocumentMap load_app_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open app documents: " + path);
    AppDocumentMap docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        AppDocument doc;
        doc.app_id = rec.at("app_id").get<std::string>();
        doc.seed = rec.at("seed").get<std::uint64_t>();
        doc.text = rec.at("text").get<std::string>();
        if (rec.contains("source_query_ids")) {
            doc.source_query_ids = rec["source_query_ids"].get<std::vector<std::string>>();
        }
        docs.emplace(doc.app_id, std::move(doc));
    }
    return docs;
}

PairInput make_pair_input(const std::string& query_text, const AppDocument& doc,
                          const Tokenizer& tokenizer, int token_budget) {
    PairInput pair;
    pair.token_budget = token_budget;
    pair.query_tokens = tokenizer(query_text);
    const int query_len = static_cast<int>(pair.query_tokens.size());
    if (query_len + 3 > token_budget) {
        throw std::invalid_argument("query alone exceeds the token budget (" +
                                    std::to_string(query_len) + " + 3 > " +
                                    std::to_string(token_budget) + ")");
    }
    pair.document_tokens = tokenizer(doc.text);
    const std::size_t doc_room = static_cast<std::size_t>(token_budget - query_len - 3);
    if (pair.document_tokens.size() > doc_room) {
        pair.document_tokens.resize(doc_room);  // head kept, tail dropped
    }
    return pair;
}

}  // namespace appsel::appdocs
