#pragma once

#include <map>
#include <string>
#include <vector>

#include "appsel/corpus.hpp"
#include "appsel/run_io.hpp"

namespace appsel::eval {

/// 1/rank of the first app with gain >= 1; 0 if no relevant app is ranked.
double reciprocal_rank(const Ranking& ranking, const corpus::Judgment& judgment);

/// 1 if the top-ranked app has gain >= 1, else 0.
double precision_at_1(const Ranking& ranking, const corpus::Judgment& judgment);

/// Graded nDCG with linear gains {2, 1, 0}: DCG@k = sum_{i<=k} gain_i / log2(i+1).
double ndcg_at_k(const Ranking& ranking, const corpus::Judgment& judgment, int k);

struct MetricValues {
    double aggregate = 0.0;
    std::map<std::string, double> per_query;
};

struct MetricReport {
    std::map<std::string, MetricValues> per_metric;  // "MRR", "P@1", "nDCG@k"
    std::map<std::string, double> per_app_mrr;       // grouped by primary gold app
    double macro_mrr = 0.0;
};

MetricReport evaluate_run(const RunResult& run,
                          const std::map<std::string, corpus::Judgment>& judgments,
                          const std::vector<int>& cutoffs = {1, 3, 5});

/// Per-app mean reciprocal rank, grouped by the primary gold app, plus the
/// unweighted macro average over apps with >= 1 test query.
std::pair<std::map<std::string, double>, double> macro_mrr_by_app(
    const RunResult& run, const std::map<std::string, corpus::Judgment>& judgments);

struct ConfusionRow {
    std::string app_id;
    double rate_candidate = 0.0;
    double rate_reference = 0.0;
    long delta_percent = 0;  // round(|reference - candidate| / candidate * 100)
};

struct ConfusionTable {
    std::vector<ConfusionRow> rows;   // apps with >= 1 test query, dominant excluded
    ConfusionRow average;             // unweighted mean of the listed rates
    std::vector<std::string> skipped; // apps with zero test queries
};

/// Rate of queries whose primary gold app is `app` but whose top-1
/// prediction is the dominant app, for a candidate and a reference run.
ConfusionTable confusion_table(const RunResult& candidate, const RunResult& reference,
                               const std::map<std::string, corpus::Judgment>& judgments,
                               const std::string& dominant_app);

long delta_percent(double rate_candidate, double rate_reference);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

/// Two-tailed paired t-test with Bonferroni correction: significant iff
/// p < 0.05 / n_comparisons.
TTestResult paired_significance(const std::vector<double>& per_query_a,
                                const std::vector<double>& per_query_b,
                                int n_comparisons);

/// Survival function machinery for the t distribution.
double student_t_two_tailed_p(double t, int df);
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace appsel::eval
