#include "appsel/run_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace appsel {

void Ranking::finalize() {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
}

std::size_t Ranking::rank_of(const std::string& app_id) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].first == app_id) return i + 1;
    }
    return 0;
}

void save_run(const RunResult& run, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    out << "# method=" << run.method_tag << " split=" << run.split_id
        << " seed=" << run.seed << " candidate_policy=" << run.candidate_policy << "\n";
    char buf[64];
    for (const auto& [qid, ranking] : run.rankings) {
        for (std::size_t i = 0; i < ranking.items.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12g", ranking.items[i].second);
            out << qid << '\t' << (i + 1) << '\t' << ranking.items[i].first << '\t'
                << buf << '\t' << run.method_tag << '\n';
        }
    }
}

RunResult load_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run file: " + path);
    RunResult run;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string kv;
            while (hdr >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = kv.substr(0, eq);
                const std::string val = kv.substr(eq + 1);
                if (key == "method") run.method_tag = val;
                else if (key == "split") run.split_id = val;
                else if (key == "seed") run.seed = std::strtoull(val.c_str(), nullptr, 10);
                else if (key == "candidate_policy") run.candidate_policy = val;
            }
            continue;
        }
        std::istringstream ls(line);
        std::string qid, app_id, tag;
        std::size_t rank = 0;
        double score = 0;
        if (!(std::getline(ls, qid, '\t') && (ls >> rank) && ls.get() == '\t' &&
              std::getline(ls, app_id, '\t') && (ls >> score) && ls.get() == '\t' &&
              std::getline(ls, tag))) {
            throw std::runtime_error("malformed run line in " + path + ": " + line);
        }
        Ranking& r = run.rankings[qid];
        r.query_id = qid;
        if (r.items.size() + 1 != rank) {
            throw std::runtime_error("non-contiguous ranks in " + path + " for " + qid);
        }
        r.items.emplace_back(app_id, score);
        if (run.method_tag.empty()) run.method_tag = tag;
    }
    return run;
}

}  // namespace appsel
