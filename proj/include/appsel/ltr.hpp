#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "appsel/corpus.hpp"
#include "appsel/ranking.hpp"

namespace appsel::ltr {

/// Per-pair features, min-max normalized within each query's candidate set.
struct FeatureVector {
    double bm25 = 0.0;
    double knn_tfidf = 0.0;
    double knn_awe = 0.0;

    static constexpr int kCount = 3;
    double operator[](int i) const {
        return i == 0 ? bm25 : (i == 1 ? knn_tfidf : knn_awe);
    }
};

struct LtrExample {
    std::string query_id;
    std::string app_id;
    FeatureVector features;
    int gain = 0;  // 0 irrelevant, 1 relevant, 2 primary
};

using Group = std::vector<LtrExample>;  // all candidates of one query

struct GbdtParams {
    int n_trees = 300;
    int max_leaves = 10;
    double learning_rate = 0.1;
    int metric_cutoff = 5;       // nDCG cutoff weighting the lambda gradients
    int early_stop_rounds = 30;  // rounds without validation nDCG@5 gain
    std::uint64_t seed = 0;      // provenance; training itself is deterministic
};

/// One example per (query, app) pair over the full registry, gains from the
/// judgment (nullptr at inference time -> all gains 0). The three rankings
/// must be total over the registry.
std::vector<LtrExample> extract_features(const std::string& query_id,
                                         const Ranking& bm25_scores,
                                         const Ranking& knn_tfidf_scores,
                                         const Ranking& knn_awe_scores,
                                         const corpus::Judgment* judgment);

struct TreeNode {
    int feature = -1;     // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;   // leaf value
    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(const FeatureVector& f) const;
};

class LambdaMartModel {
  public:
    double score(const FeatureVector& f) const;

    void save(const std::string& path) const;
    static LambdaMartModel load(const std::string& path);

    std::vector<Tree> trees;
    double learning_rate = 0.1;
};

/// LambdaRank gradients for one group at the current scores: pairwise
/// lambdas weighted by |delta nDCG@cutoff| of swapping the pair, plus the
/// matching second-order weights for Newton leaf values.
void lambda_gradients(const Group& group, const std::vector<double>& scores, int cutoff,
                      std::vector<double>* lambdas, std::vector<double>* weights);

/// |nDCG@cutoff change| from swapping ranks i and j (1-based positions in
/// the current ordering). Exposed so tests can cross-check against the
/// evaluation module.
double swap_delta_ndcg(const std::vector<int>& gains_by_rank, std::size_t rank_i,
                       std::size_t rank_j, int cutoff);

LambdaMartModel train_lambdamart(const std::vector<Group>& train_groups,
                                 const std::vector<Group>& validation_groups,
                                 const GbdtParams& params);

/// Mean nDCG@cutoff of scoring the groups with the model.
double mean_ndcg(const LambdaMartModel& model, const std::vector<Group>& groups, int cutoff);

Ranking rank_lambdamart(const LambdaMartModel& model, const std::string& query_id,
                        const Group& candidates);

}  // namespace appsel::ltr
