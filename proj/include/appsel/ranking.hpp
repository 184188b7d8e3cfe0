#pragma once

#include <string>
#include <utility>
#include <vector>

namespace appsel {

/// Universal ranker output: every registered app with a score, ordered by
/// (score desc, app_id asc). The tie-break is part of the contract; all
/// rankers and the evaluator rely on it for reproducibility.
struct Ranking {
    std::string query_id;
    std::vector<std::pair<std::string, double>> items;

    /// Sorts items under the global tie-break rule.
    void finalize();

    /// Position of app_id, 1-based; 0 if absent.
    std::size_t rank_of(const std::string& app_id) const;
};

}  // namespace appsel
