#include "appsel/lexical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace appsel::lexical {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Index::Index(const appdocs::AppDocumentMap& docs) {
    for (const auto& [app_id, doc] : docs) {
        const std::size_t d = doc_ids_.size();
        doc_ids_.push_back(app_id);
        std::map<std::string, std::size_t> tf;
        for (const auto& term : tokenize(doc.text)) ++tf[term];
        std::size_t len = 0;
        for (const auto& [term, freq] : tf) {
            postings_[term].emplace_back(d, freq);
            collection_freq_[term] += freq;
            len += freq;
        }
        doc_lengths_.push_back(len);
        total_terms_ += len;
        doc_terms_.push_back(std::move(tf));
    }
    avg_doc_length_ =
        doc_ids_.empty() ? 0.0
                         : static_cast<double>(total_terms_) / static_cast<double>(doc_ids_.size());
}

const std::vector<std::pair<std::size_t, std::size_t>>& Index::postings(
    const std::string& term) const {
    static const std::vector<std::pair<std::size_t, std::size_t>> empty;
    auto it = postings_.find(term);
    return it == postings_.end() ? empty : it->second;
}

std::size_t Index::doc_freq(const std::string& term) const {
    return postings(term).size();
}

std::size_t Index::collection_freq(const std::string& term) const {
    auto it = collection_freq_.find(term);
    return it == collection_freq_.end() ? 0 : it->second;
}

StaticRanker::StaticRanker(const std::map<std::string, corpus::Judgment>& train_judgments,
                           const std::vector<std::string>& train_query_ids,
                           const corpus::AppRegistry& registry) {
    std::map<std::string, double> counts;
    for (const auto& app_id : registry.app_ids()) counts[app_id] = 0;
    for (const auto& qid : train_query_ids) {
        auto it = train_judgments.find(qid);
        if (it == train_judgments.end()) continue;
        for (const auto& app_id : it->second.relevant_apps) counts[app_id] += 1;
    }
    for (const auto& [app_id, count] : counts) prototype_.items.emplace_back(app_id, count);
    prototype_.finalize();
}

Ranking StaticRanker::rank(const std::string& query_id) const {
    Ranking r = prototype_;
    r.query_id = query_id;
    return r;
}

Ranking rank_querylm(const Index& index, const std::string& query_id,
                     const std::string& query_text, double mu) {
    std::map<std::string, std::size_t> query_tf;
    for (const auto& term : tokenize(query_text)) {
        if (index.collection_freq(term) > 0) ++query_tf[term];  // OOV terms carry no signal
    }

    std::vector<double> scores(index.num_docs(), 0.0);
    const double collection_size = static_cast<double>(index.total_terms());
    for (const auto& [term, qtf] : query_tf) {
        const double p_collection =
            static_cast<double>(index.collection_freq(term)) / collection_size;
        std::vector<double> tf_in_doc(index.num_docs(), 0.0);
        for (const auto& [d, tf] : index.postings(term)) {
            tf_in_doc[d] = static_cast<double>(tf);
        }
        for (std::size_t d = 0; d < index.num_docs(); ++d) {
            const double len = static_cast<double>(index.doc_length(d));
            scores[d] += static_cast<double>(qtf) *
                         std::log((tf_in_doc[d] + mu * p_collection) / (len + mu));
        }
    }

    Ranking r;
    r.query_id = query_id;
    for (std::size_t d = 0; d < index.num_docs(); ++d) {
        r.items.emplace_back(index.doc_ids()[d], scores[d]);
    }
    r.finalize();
    return r;
}

Ranking rank_bm25_weighted(const Index& index, const std::string& query_id,
                           const std::map<std::string, double>& term_weights,
                           const Bm25Params& params) {
    std::vector<double> scores(index.num_docs(), 0.0);
    const double n = static_cast<double>(index.num_docs());
    for (const auto& [term, weight] : term_weights) {
        if (weight == 0.0) continue;
        const auto& postings = index.postings(term);
        if (postings.empty()) continue;
        const double df = static_cast<double>(postings.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& [d, tf_raw] : postings) {
            const double tf = static_cast<double>(tf_raw);
            const double norm_len =
                index.avg_doc_length() > 0
                    ? static_cast<double>(index.doc_length(d)) / index.avg_doc_length()
                    : 1.0;
            const double denom = tf + params.k1 * (1.0 - params.b + params.b * norm_len);
            scores[d] += weight * idf * tf * (params.k1 + 1.0) / denom;
        }
    }

    Ranking r;
    r.query_id = query_id;
    for (std::size_t d = 0; d < index.num_docs(); ++d) {
        r.items.emplace_back(index.doc_ids()[d], scores[d]);
    }
    r.finalize();
    return r;
}

Ranking rank_bm25(const Index& index, const std::string& query_id,
                  const std::string& query_text, const Bm25Params& params) {
    std::map<std::string, double> weights;
    for (const auto& term : tokenize(query_text)) weights[term] += 1.0;
    return rank_bm25_weighted(index, query_id, weights, params);
}

Ranking rank_bm25_qe(const Index& index, const std::string& query_id,
                     const std::string& query_text, const Bm25Params& bm25,
                     const QeParams& qe) {
    const Ranking first_pass = rank_bm25(index, query_id, query_text, bm25);

    // feedback set: top fb_docs with positive first-pass score
    std::vector<std::pair<std::size_t, double>> feedback;
    for (const auto& [app_id, score] : first_pass.items) {
        if (score <= 0.0) break;
        if (static_cast<int>(feedback.size()) >= qe.fb_docs) break;
        const auto& ids = index.doc_ids();
        const std::size_t d = static_cast<std::size_t>(
            std::find(ids.begin(), ids.end(), app_id) - ids.begin());
        feedback.emplace_back(d, score);
    }
    if (feedback.empty()) return first_pass;  // no feedback signal

    double score_mass = 0.0;
    for (const auto& [d, s] : feedback) score_mass += s;

    // RM1: P(t|R) = sum_d P(d|R) * tf(t,d)/len(d), P(d|R) from the
    // normalized first-pass scores
    std::map<std::string, double> relevance_model;
    for (const auto& [d, s] : feedback) {
        const double doc_weight = s / score_mass;
        const double len = static_cast<double>(index.doc_length(d));
        if (len == 0) continue;
        for (const auto& [term, tf] : index.doc_terms(d)) {
            relevance_model[term] += doc_weight * static_cast<double>(tf) / len;
        }
    }

    // keep the fb_terms strongest expansion terms, renormalized
    std::vector<std::pair<std::string, double>> expansion(relevance_model.begin(),
                                                          relevance_model.end());
    std::sort(expansion.begin(), expansion.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(expansion.size()) > qe.fb_terms) {
        expansion.resize(static_cast<std::size_t>(qe.fb_terms));
    }
    double expansion_mass = 0.0;
    for (const auto& [term, w] : expansion) expansion_mass += w;

    std::map<std::string, double> query_model;
    double query_len = 0.0;
    for (const auto& term : tokenize(query_text)) {
        query_model[term] += 1.0;
        query_len += 1.0;
    }
    std::map<std::string, double> expanded;
    for (const auto& [term, w] : query_model) {
        expanded[term] += qe.interpolation * w / query_len;
    }
    if (expansion_mass > 0.0) {
        for (const auto& [term, w] : expansion) {
            expanded[term] += (1.0 - qe.interpolation) * w / expansion_mass;
        }
    }
    return rank_bm25_weighted(index, query_id, expanded, bm25);
}

}  // namespace appsel::lexical
