#pragma once

#include <map>
#include <string>

#include "appsel/ranking.hpp"

namespace appsel {

/// A named method's rankings over a query set, the interchange between
/// rankers and evaluation.
struct RunResult {
    std::string method_tag;
    std::map<std::string, Ranking> rankings;  // query_id -> ranking
    std::string split_id;
    std::uint64_t seed = 0;
    std::string candidate_policy = "all_apps";
};

/// Run-file format: one tab-separated line per ranked item,
///   query_id \t rank \t app_id \t score \t method_tag
/// preceded by '#' header lines carrying provenance.
void save_run(const RunResult& run, const std::string& path);
RunResult load_run(const std::string& path);

}  // namespace appsel
