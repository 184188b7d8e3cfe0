#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace appsel::corpus {

/// One user query with its task grouping.
struct Query {
    std::string query_id;
    std::string text;
    std::string task_id;
};

/// Graded relevance for one query. Position 0 of relevant_apps is the
/// primary app (gain 2); every other listed app has gain 1.
struct Judgment {
    std::string query_id;
    std::vector<std::string> relevant_apps;

    const std::string& primary_app() const { return relevant_apps.front(); }
    int gain(const std::string& app_id) const;
};

struct AppInfo {
    std::string app_id;
    std::string name;
};

struct AppRegistry {
    std::vector<AppInfo> apps;  // sorted by app_id
    std::string dominant_app;

    bool contains(const std::string& app_id) const;
    std::vector<std::string> app_ids() const;
};

enum class SplitMode { by_query, by_task };

struct Split {
    SplitMode mode = SplitMode::by_query;
    std::set<std::string> train;
    std::set<std::string> validation;
    std::set<std::string> test;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<Query> queries;
    std::map<std::string, Judgment> judgments;
    AppRegistry registry;

    const Query* find_query(const std::string& query_id) const;
    std::vector<std::string> task_ids() const;
};

/// Thrown on malformed or inconsistent dataset input. Carries the
/// offending line number when the failure is tied to one record.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Line-delimited JSON, one query record per line; see docs/schema.md.
Dataset load_dataset(const std::string& queries_path, const std::string& registry_path);
void save_dataset(const Dataset& ds, const std::string& queries_path,
                  const std::string& registry_path);

AppRegistry load_registry(const std::string& path);

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

Split split_dataset(const Dataset& ds, SplitMode mode, SplitRatios ratios,
                    std::uint64_t seed);

struct SyntheticConfig {
    int app_count = 5;          // >= 3: dominant, contacts-like, files-like, then extras
    int tasks_per_app = 10;     // used when total_queries == 0
    int queries_per_task = 5;
    int total_queries = 0;      // 0 = app_count * tasks_per_app * queries_per_task
    double dominant_fraction = 0.45;  // fraction of queries whose primary app is the dominant one
    double secondary_dominant_prob = 0.30;  // chance the dominant app is added as a secondary relevant app
};

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace appsel::corpus
