#include "appsel/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace appsel::ltr {

namespace {

double normalize_or_zero(double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

}  // namespace

std::vector<LtrExample> extract_features(const std::string& query_id,
                                         const Ranking& bm25_scores,
                                         const Ranking& knn_tfidf_scores,
                                         const Ranking& knn_awe_scores,
                                         const corpus::Judgment* judgment) {
    std::map<std::string, FeatureVector> raw;
    for (const auto& [app, score] : bm25_scores.items) raw[app].bm25 = score;
    for (const auto& [app, score] : knn_tfidf_scores.items) raw[app].knn_tfidf = score;
    for (const auto& [app, score] : knn_awe_scores.items) raw[app].knn_awe = score;

    double lo[FeatureVector::kCount];
    double hi[FeatureVector::kCount];
    std::fill(std::begin(lo), std::end(lo), std::numeric_limits<double>::infinity());
    std::fill(std::begin(hi), std::end(hi), -std::numeric_limits<double>::infinity());
    for (const auto& [app, f] : raw) {
        for (int i = 0; i < FeatureVector::kCount; ++i) {
            lo[i] = std::min(lo[i], f[i]);
            hi[i] = std::max(hi[i], f[i]);
        }
    }

    std::vector<LtrExample> examples;
    examples.reserve(raw.size());
    for (const auto& [app, f] : raw) {
        LtrExample ex;
        ex.query_id = query_id;
        ex.app_id = app;
        ex.features.bm25 = normalize_or_zero(f.bm25, lo[0], hi[0]);
        ex.features.knn_tfidf = normalize_or_zero(f.knn_tfidf, lo[1], hi[1]);
        ex.features.knn_awe = normalize_or_zero(f.knn_awe, lo[2], hi[2]);
        ex.gain = judgment != nullptr ? judgment->gain(app) : 0;
        examples.push_back(std::move(ex));
    }
    return examples;
}

double Tree::predict(const FeatureVector& f) const {
    int node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = f[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

double LambdaMartModel::score(const FeatureVector& f) const {
    double s = 0.0;
    for (const auto& tree : trees) s += learning_rate * tree.predict(f);
    return s;
}

double swap_delta_ndcg(const std::vector<int>& gains_by_rank, std::size_t rank_i,
                       std::size_t rank_j, int cutoff) {
    auto discount = [cutoff](std::size_t rank) {
        return static_cast<int>(rank) <= cutoff
                   ? 1.0 / std::log2(static_cast<double>(rank) + 1.0)
                   : 0.0;
    };
    std::vector<int> sorted_gains = gains_by_rank;
    std::sort(sorted_gains.begin(), sorted_gains.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 1; r <= sorted_gains.size(); ++r) {
        idcg += static_cast<double>(sorted_gains[r - 1]) * discount(r);
    }
    if (idcg == 0.0) return 0.0;
    const double gi = static_cast<double>(gains_by_rank[rank_i - 1]);
    const double gj = static_cast<double>(gains_by_rank[rank_j - 1]);
    return std::abs((gi - gj) * (discount(rank_i) - discount(rank_j))) / idcg;
}

void lambda_gradients(const Group& group, const std::vector<double>& scores, int cutoff,
                      std::vector<double>* lambdas, std::vector<double>* weights) {
    const std::size_t n = group.size();
    lambdas->assign(n, 0.0);
    weights->assign(n, 0.0);

    // current ordering under (score desc, app_id asc)
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return group[a].app_id < group[b].app_id;
    });
    std::vector<std::size_t> rank_of(n);  // 1-based
    std::vector<int> gains_by_rank(n);
    for (std::size_t r = 0; r < n; ++r) {
        rank_of[order[r]] = r + 1;
        gains_by_rank[r] = group[order[r]].gain;
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (group[i].gain <= group[j].gain) continue;  // i strictly better than j
            const double delta =
                swap_delta_ndcg(gains_by_rank, rank_of[i], rank_of[j], cutoff);
            if (delta == 0.0) continue;
            const double rho = 1.0 / (1.0 + std::exp(scores[i] - scores[j]));
            (*lambdas)[i] += delta * rho;
            (*lambdas)[j] -= delta * rho;
            const double w = delta * rho * (1.0 - rho);
            (*weights)[i] += w;
            (*weights)[j] += w;
        }
    }
}

namespace {

struct FitContext {
    const std::vector<const LtrExample*>* examples;
    const std::vector<double>* gradients;
    const std::vector<double>* hessians;
};

struct LeafCandidate {
    int node = -1;
    std::vector<std::size_t> members;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::vector<std::size_t> left_members, right_members;
};

double leaf_value(const FitContext& ctx, const std::vector<std::size_t>& members) {
    double g = 0.0, h = 0.0;
    for (std::size_t idx : members) {
        g += (*ctx.gradients)[idx];
        h += (*ctx.hessians)[idx];
    }
    return g / (h + 1e-9);
}

void find_best_split(const FitContext& ctx, LeafCandidate* leaf) {
    leaf->best_feature = -1;
    leaf->best_gain = 0.0;
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t idx : leaf->members) {
        g_total += (*ctx.gradients)[idx];
        h_total += (*ctx.hessians)[idx];
    }
    const double base = g_total * g_total / (h_total + 1e-9);

    for (int f = 0; f < FeatureVector::kCount; ++f) {
        std::vector<std::size_t> sorted = leaf->members;
        std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return (*ctx.examples)[a]->features[f] < (*ctx.examples)[b]->features[f];
        });
        double g_left = 0.0, h_left = 0.0;
        for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
            g_left += (*ctx.gradients)[sorted[pos]];
            h_left += (*ctx.hessians)[sorted[pos]];
            const double v = (*ctx.examples)[sorted[pos]]->features[f];
            const double v_next = (*ctx.examples)[sorted[pos + 1]]->features[f];
            if (v == v_next) continue;
            const double g_right = g_total - g_left;
            const double h_right = h_total - h_left;
            const double gain = g_left * g_left / (h_left + 1e-9) +
                                g_right * g_right / (h_right + 1e-9) - base;
            if (gain > leaf->best_gain + 1e-12) {
                leaf->best_gain = gain;
                leaf->best_feature = f;
                leaf->best_threshold = 0.5 * (v + v_next);
                leaf->left_members.assign(sorted.begin(),
                                          sorted.begin() + static_cast<long>(pos) + 1);
                leaf->right_members.assign(sorted.begin() + static_cast<long>(pos) + 1,
                                           sorted.end());
            }
        }
    }
}

Tree fit_tree(const FitContext& ctx, int max_leaves) {
    Tree tree;
    std::vector<std::size_t> all(ctx.examples->size());
    std::iota(all.begin(), all.end(), 0);

    tree.nodes.push_back(TreeNode{});
    tree.nodes[0].value = leaf_value(ctx, all);

    std::vector<LeafCandidate> frontier;
    LeafCandidate root;
    root.node = 0;
    root.members = std::move(all);
    find_best_split(ctx, &root);
    frontier.push_back(std::move(root));

    int leaves = 1;
    while (leaves < max_leaves) {
        int best = -1;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (frontier[i].best_feature < 0) continue;
            if (best < 0 || frontier[i].best_gain > frontier[static_cast<std::size_t>(best)].best_gain) {
                best = static_cast<int>(i);
            }
        }
        if (best < 0) break;

        LeafCandidate chosen = std::move(frontier[static_cast<std::size_t>(best)]);
        frontier.erase(frontier.begin() + best);

        TreeNode& node = tree.nodes[static_cast<std::size_t>(chosen.node)];
        node.feature = chosen.best_feature;
        node.threshold = chosen.best_threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;

        LeafCandidate left, right;
        left.node = node.left;
        right.node = node.right;
        left.members = std::move(chosen.left_members);
        right.members = std::move(chosen.right_members);

        tree.nodes.push_back(TreeNode{});
        tree.nodes.back().value = leaf_value(ctx, left.members);
        tree.nodes.push_back(TreeNode{});
        tree.nodes.back().value = leaf_value(ctx, right.members);

        find_best_split(ctx, &left);
        find_best_split(ctx, &right);
        frontier.push_back(std::move(left));
        frontier.push_back(std::move(right));
        ++leaves;
    }
    return tree;
}

double group_ndcg(const Group& group, const std::vector<double>& scores, int cutoff) {
    std::vector<std::size_t> order(group.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return group[a].app_id < group[b].app_id;
    });
    auto discount = [](std::size_t rank) {
        return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    };
    double dcg = 0.0;
    for (std::size_t r = 1; r <= order.size() && static_cast<int>(r) <= cutoff; ++r) {
        dcg += static_cast<double>(group[order[r - 1]].gain) * discount(r);
    }
    std::vector<int> gains;
    gains.reserve(group.size());
    for (const auto& ex : group) gains.push_back(ex.gain);
    std::sort(gains.begin(), gains.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 1; r <= gains.size() && static_cast<int>(r) <= cutoff; ++r) {
        idcg += static_cast<double>(gains[r - 1]) * discount(r);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

}  // namespace

LambdaMartModel train_lambdamart(const std::vector<Group>& train_groups,
                                 const std::vector<Group>& validation_groups,
                                 const GbdtParams& params) {
    bool has_signal = false;
    for (const auto& group : train_groups) {
        for (std::size_t i = 1; i < group.size(); ++i) {
            if (group[i].gain != group[0].gain) {
                has_signal = true;
                break;
            }
        }
        if (has_signal) break;
    }
    if (!has_signal) {
        throw std::invalid_argument("train_lambdamart: all groups have uniform gains");
    }

    // flatten for tree fitting; group boundaries kept for gradient passes
    std::vector<const LtrExample*> flat;
    std::vector<std::pair<std::size_t, std::size_t>> bounds;  // [begin, end) into flat
    for (const auto& group : train_groups) {
        const std::size_t begin = flat.size();
        for (const auto& ex : group) flat.push_back(&ex);
        bounds.emplace_back(begin, flat.size());
    }

    LambdaMartModel model;
    model.learning_rate = params.learning_rate;
    std::vector<double> scores(flat.size(), 0.0);
    std::vector<double> gradients(flat.size(), 0.0);
    std::vector<double> hessians(flat.size(), 0.0);

    LambdaMartModel best_model = model;
    double best_validation = -1.0;
    int rounds_since_best = 0;

    for (int round = 0; round < params.n_trees; ++round) {
        for (std::size_t g = 0; g < train_groups.size(); ++g) {
            const auto& group = train_groups[g];
            std::vector<double> group_scores(
                scores.begin() + static_cast<long>(bounds[g].first),
                scores.begin() + static_cast<long>(bounds[g].second));
            std::vector<double> lambdas, weights;
            lambda_gradients(group, group_scores, params.metric_cutoff, &lambdas, &weights);
            for (std::size_t i = 0; i < group.size(); ++i) {
                gradients[bounds[g].first + i] = lambdas[i];
                hessians[bounds[g].first + i] = weights[i];
            }
        }

        FitContext ctx{&flat, &gradients, &hessians};
        Tree tree = fit_tree(ctx, params.max_leaves);
        model.trees.push_back(tree);
        for (std::size_t i = 0; i < flat.size(); ++i) {
            scores[i] += params.learning_rate * tree.predict(flat[i]->features);
        }

        if (!validation_groups.empty()) {
            const double v = mean_ndcg(model, validation_groups, params.metric_cutoff);
            if (v > best_validation + 1e-12) {
                best_validation = v;
                best_model = model;
                rounds_since_best = 0;
            } else if (++rounds_since_best >= params.early_stop_rounds) {
                return best_model;
            }
        }
    }
    return validation_groups.empty() ? model : best_model;
}

double mean_ndcg(const LambdaMartModel& model, const std::vector<Group>& groups, int cutoff) {
    if (groups.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& group : groups) {
        std::vector<double> scores;
        scores.reserve(group.size());
        for (const auto& ex : group) scores.push_back(model.score(ex.features));
        sum += group_ndcg(group, scores, cutoff);
    }
    return sum / static_cast<double>(groups.size());
}

Ranking rank_lambdamart(const LambdaMartModel& model, const std::string& query_id,
                        const Group& candidates) {
    Ranking r;
    r.query_id = query_id;
    for (const auto& ex : candidates) {
        for (int f = 0; f < FeatureVector::kCount; ++f) {
            if (!std::isfinite(ex.features[f])) {
                throw std::invalid_argument("rank_lambdamart: non-finite feature for app '" +
                                            ex.app_id + "'");
            }
        }
        r.items.emplace_back(ex.app_id, model.score(ex.features));
    }
    r.finalize();
    return r;
}

void LambdaMartModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out.precision(17);
    out << "lambdamart learning_rate=" << learning_rate << " trees=" << trees.size() << "\n";
    for (const auto& tree : trees) {
        out << "tree " << tree.nodes.size() << "\n";
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const TreeNode& n = tree.nodes[i];
            out << i << ' ' << n.feature << ' ' << n.threshold << ' ' << n.left << ' '
                << n.right << ' ' << n.value << "\n";
        }
    }
}

LambdaMartModel LambdaMartModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty model file: " + path);
    LambdaMartModel model;
    std::size_t n_trees = 0;
    {
        std::istringstream hdr(line);
        std::string magic, kv;
        hdr >> magic;
        if (magic != "lambdamart") throw std::runtime_error("not a model file: " + path);
        while (hdr >> kv) {
            auto eq = kv.find('=');
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            if (key == "learning_rate") model.learning_rate = std::stod(val);
            else if (key == "trees") n_trees = std::stoul(val);
        }
    }
    for (std::size_t t = 0; t < n_trees; ++t) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated model file: " + path);
        std::istringstream th(line);
        std::string word;
        std::size_t n_nodes = 0;
        th >> word >> n_nodes;
        if (word != "tree") throw std::runtime_error("malformed model file: " + path);
        Tree tree;
        tree.nodes.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            if (!std::getline(in, line)) {
                throw std::runtime_error("truncated model file: " + path);
            }
            std::istringstream ns(line);
            std::size_t id = 0;
            TreeNode n;
            if (!(ns >> id >> n.feature >> n.threshold >> n.left >> n.right >> n.value) ||
                id != i) {
                throw std::runtime_error("malformed node line in model file: " + path);
            }
            tree.nodes[i] = n;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace appsel::ltr
