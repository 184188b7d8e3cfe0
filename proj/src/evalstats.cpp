#include "appsel/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace appsel::eval {

double reciprocal_rank(const Ranking& ranking, const corpus::Judgment& judgment) {
    for (std::size_t i = 0; i < ranking.items.size(); ++i) {
        if (judgment.gain(ranking.items[i].first) >= 1) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double precision_at_1(const Ranking& ranking, const corpus::Judgment& judgment) {
    if (ranking.items.empty()) return 0.0;
    return judgment.gain(ranking.items[0].first) >= 1 ? 1.0 : 0.0;
}

double ndcg_at_k(const Ranking& ranking, const corpus::Judgment& judgment, int k) {
    double dcg = 0.0;
    const std::size_t depth = std::min<std::size_t>(ranking.items.size(),
                                                    static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        const int gain = judgment.gain(ranking.items[i].first);
        if (gain > 0) dcg += static_cast<double>(gain) / std::log2(static_cast<double>(i + 2));
    }
    // ideal: gains sorted descending — one 2, then 1s
    std::vector<int> ideal_gains;
    ideal_gains.push_back(2);
    for (std::size_t i = 1; i < judgment.relevant_apps.size(); ++i) ideal_gains.push_back(1);
    double idcg = 0.0;
    const std::size_t ideal_depth =
        std::min<std::size_t>(ideal_gains.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        idcg += static_cast<double>(ideal_gains[i]) / std::log2(static_cast<double>(i + 2));
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

MetricReport evaluate_run(const RunResult& run,
                          const std::map<std::string, corpus::Judgment>& judgments,
                          const std::vector<int>& cutoffs) {
    MetricReport report;
    std::vector<std::string> metric_names = {"MRR", "P@1"};
    for (int k : cutoffs) metric_names.push_back("nDCG@" + std::to_string(k));

    for (const auto& [qid, ranking] : run.rankings) {
        auto jt = judgments.find(qid);
        if (jt == judgments.end()) {
            throw std::runtime_error("no judgment for ranked query '" + qid + "'");
        }
        const corpus::Judgment& j = jt->second;
        report.per_metric["MRR"].per_query[qid] = reciprocal_rank(ranking, j);
        report.per_metric["P@1"].per_query[qid] = precision_at_1(ranking, j);
        for (int k : cutoffs) {
            report.per_metric["nDCG@" + std::to_string(k)].per_query[qid] =
                ndcg_at_k(ranking, j, k);
        }
    }
    for (auto& [name, values] : report.per_metric) {
        double sum = 0.0;
        for (const auto& [qid, v] : values.per_query) sum += v;
        values.aggregate =
            values.per_query.empty() ? 0.0 : sum / static_cast<double>(values.per_query.size());
    }
    auto [per_app, macro] = macro_mrr_by_app(run, judgments);
    report.per_app_mrr = std::move(per_app);
    report.macro_mrr = macro;
    return report;
}

std::pair<std::map<std::string, double>, double> macro_mrr_by_app(
    const RunResult& run, const std::map<std::string, corpus::Judgment>& judgments) {
    std::map<std::string, std::pair<double, std::size_t>> sums;  // app -> (sum, count)
    for (const auto& [qid, ranking] : run.rankings) {
        auto jt = judgments.find(qid);
        if (jt == judgments.end()) {
            throw std::runtime_error("no judgment for ranked query '" + qid + "'");
        }
        auto& [sum, count] = sums[jt->second.primary_app()];
        sum += reciprocal_rank(ranking, jt->second);
        ++count;
    }
    std::map<std::string, double> per_app;
    double macro_sum = 0.0;
    for (const auto& [app, sc] : sums) {
        per_app[app] = sc.first / static_cast<double>(sc.second);
        macro_sum += per_app[app];
    }
    const double macro = sums.empty() ? 0.0 : macro_sum / static_cast<double>(sums.size());
    return {per_app, macro};
}

long delta_percent(double rate_candidate, double rate_reference) {
    if (rate_candidate == 0.0) {
        return rate_reference == 0.0 ? 0 : std::numeric_limits<long>::max();
    }
    return std::lround(std::abs(rate_reference - rate_candidate) / rate_candidate * 100.0);
}

namespace {

double confusion_rate(const RunResult& run,
                      const std::map<std::string, corpus::Judgment>& judgments,
                      const std::string& app, const std::string& dominant_app,
                      std::size_t* n_queries) {
    std::size_t total = 0;
    std::size_t confused = 0;
    for (const auto& [qid, ranking] : run.rankings) {
        auto jt = judgments.find(qid);
        if (jt == judgments.end() || jt->second.primary_app() != app) continue;
        ++total;
        if (!ranking.items.empty() && ranking.items[0].first == dominant_app) ++confused;
    }
    if (n_queries != nullptr) *n_queries = total;
    return total == 0 ? 0.0 : static_cast<double>(confused) / static_cast<double>(total);
}

}  // namespace

ConfusionTable confusion_table(const RunResult& candidate, const RunResult& reference,
                               const std::map<std::string, corpus::Judgment>& judgments,
                               const std::string& dominant_app) {
    std::set<std::string> apps;
    for (const auto& [qid, ranking] : candidate.rankings) {
        for (const auto& [app, score] : ranking.items) apps.insert(app);
    }
    for (const auto& [qid, j] : judgments) apps.insert(j.primary_app());

    ConfusionTable table;
    double cand_sum = 0.0;
    double ref_sum = 0.0;
    for (const auto& app : apps) {
        if (app == dominant_app) continue;
        std::size_t n = 0;
        ConfusionRow row;
        row.app_id = app;
        row.rate_candidate = confusion_rate(candidate, judgments, app, dominant_app, &n);
        if (n == 0) {
            table.skipped.push_back(app);
            continue;
        }
        row.rate_reference = confusion_rate(reference, judgments, app, dominant_app, nullptr);
        row.delta_percent = delta_percent(row.rate_candidate, row.rate_reference);
        cand_sum += row.rate_candidate;
        ref_sum += row.rate_reference;
        table.rows.push_back(std::move(row));
    }
    if (!table.rows.empty()) {
        const double n = static_cast<double>(table.rows.size());
        table.average.app_id = "average";
        table.average.rate_candidate = cand_sum / n;
        table.average.rate_reference = ref_sum / n;
        table.average.delta_percent =
            delta_percent(table.average.rate_candidate, table.average.rate_reference);
    }
    return table;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    // continued fraction (Lentz), with the symmetry transform for convergence
    const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(ln_beta + a * std::log(x) + b * std::log1p(-x));

    auto cont_fraction = [](double a_, double b_, double x_) {
        const double tiny = 1e-300;
        double c = 1.0;
        double d = 1.0 - (a_ + b_) * x_ / (a_ + 1.0);
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double result = d;
        for (int m = 1; m <= 300; ++m) {
            const double dm = static_cast<double>(m);
            double numerator = dm * (b_ - dm) * x_ / ((a_ + 2.0 * dm - 1.0) * (a_ + 2.0 * dm));
            d = 1.0 + numerator * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + numerator / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            result *= d * c;
            numerator = -(a_ + dm) * (a_ + b_ + dm) * x_ /
                        ((a_ + 2.0 * dm) * (a_ + 2.0 * dm + 1.0));
            d = 1.0 + numerator * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + numerator / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double delta = d * c;
            result *= delta;
            if (std::abs(delta - 1.0) < 1e-14) break;
        }
        return result;
    };

    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * cont_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                          b * std::log1p(-x) + a * std::log(x)) *
                     cont_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, int df) {
    const double x = static_cast<double>(df) / (static_cast<double>(df) + t * t);
    return regularized_incomplete_beta(static_cast<double>(df) / 2.0, 0.5, x);
}

TTestResult paired_significance(const std::vector<double>& per_query_a,
                                const std::vector<double>& per_query_b,
                                int n_comparisons) {
    if (per_query_a.size() != per_query_b.size()) {
        throw std::invalid_argument("paired_significance: unaligned inputs");
    }
    const std::size_t n = per_query_a.size();
    if (n < 2) throw std::invalid_argument("paired_significance: need n >= 2");
    if (n_comparisons < 1) throw std::invalid_argument("paired_significance: n_comparisons >= 1");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += per_query_a[i] - per_query_b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = per_query_a[i] - per_query_b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult result;
    if (sd == 0.0) {
        // all differences identical; zero spread means no test statistic
        result.t = 0.0;
        result.p = 1.0;
        result.significant = false;
        return result;
    }
    result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    result.p = student_t_two_tailed_p(result.t, static_cast<int>(n - 1));
    result.significant = result.p < 0.05 / static_cast<double>(n_comparisons);
    return result;
}

}  // namespace appsel::eval
