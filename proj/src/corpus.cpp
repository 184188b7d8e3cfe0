#include "appsel/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace appsel::corpus {

using nlohmann::json;

int Judgment::gain(const std::string& app_id) const {
    for (std::size_t i = 0; i < relevant_apps.size(); ++i) {
        if (relevant_apps[i] == app_id) return i == 0 ? 2 : 1;
    }
    return 0;
}

bool AppRegistry::contains(const std::string& app_id) const {
    return std::any_of(apps.begin(), apps.end(),
                       [&](const AppInfo& a) { return a.app_id == app_id; });
}

std::vector<std::string> AppRegistry::app_ids() const {
    std::vector<std::string> ids;
    ids.reserve(apps.size());
    for (const auto& a : apps) ids.push_back(a.app_id);
    return ids;
}

const Query* Dataset::find_query(const std::string& query_id) const {
    for (const auto& q : queries) {
        if (q.query_id == query_id) return &q;
    }
    return nullptr;
}

std::vector<std::string> Dataset::task_ids() const {
    std::set<std::string> tasks;
    for (const auto& q : queries) tasks.insert(q.task_id);
    return {tasks.begin(), tasks.end()};
}

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": malformed record");
    }
    return rec;
}

}  // namespace

AppRegistry load_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open registry file: " + path);

    AppRegistry reg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json rec = parse_line(line, path, lineno);
        if (!rec.contains("app_id") || !rec.contains("name")) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": registry record needs app_id and name");
        }
        AppInfo info{rec["app_id"].get<std::string>(), rec["name"].get<std::string>()};
        if (reg.contains(info.app_id)) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": duplicate app_id '" + info.app_id + "'");
        }
        if (rec.value("is_dominant", false)) {
            if (!reg.dominant_app.empty()) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": more than one dominant app");
            }
            reg.dominant_app = info.app_id;
        }
        reg.apps.push_back(std::move(info));
    }
    if (reg.apps.empty()) throw DataError("registry file is empty: " + path);
    if (reg.dominant_app.empty()) {
        throw DataError("registry declares no dominant app: " + path);
    }
    std::sort(reg.apps.begin(), reg.apps.end(),
              [](const AppInfo& a, const AppInfo& b) { return a.app_id < b.app_id; });
    return reg;
}

Dataset load_dataset(const std::string& queries_path, const std::string& registry_path) {
    Dataset ds;
    ds.registry = load_registry(registry_path);

    std::ifstream in(queries_path);
    if (!in) throw DataError("cannot open dataset file: " + queries_path);

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json rec = parse_line(line, queries_path, lineno);
        for (const char* field : {"query_id", "text", "task_id", "relevant_apps"}) {
            if (!rec.contains(field)) {
                throw DataError(queries_path + ":" + std::to_string(lineno) +
                                ": missing field '" + field + "'");
            }
        }
        Query q{rec["query_id"].get<std::string>(), rec["text"].get<std::string>(),
                rec["task_id"].get<std::string>()};
        if (trim(q.text).empty()) {
            throw DataError(queries_path + ":" + std::to_string(lineno) +
                            ": empty query text for '" + q.query_id + "'");
        }
        if (ds.judgments.count(q.query_id) != 0) {
            throw DataError(queries_path + ":" + std::to_string(lineno) +
                            ": duplicate query_id '" + q.query_id + "'");
        }
        Judgment j;
        j.query_id = q.query_id;
        for (const auto& app : rec["relevant_apps"]) {
            std::string app_id = app.get<std::string>();
            if (std::find(j.relevant_apps.begin(), j.relevant_apps.end(), app_id) !=
                j.relevant_apps.end()) {
                throw DataError(queries_path + ":" + std::to_string(lineno) +
                                ": duplicate relevant app '" + app_id + "'");
            }
            if (!ds.registry.contains(app_id)) {
                throw DataError(queries_path + ":" + std::to_string(lineno) +
                                ": app '" + app_id + "' not in registry");
            }
            j.relevant_apps.push_back(std::move(app_id));
        }
        if (j.relevant_apps.empty()) {
            throw DataError(queries_path + ":" + std::to_string(lineno) +
                            ": query '" + q.query_id + "' has no relevant apps");
        }
        ds.judgments.emplace(q.query_id, std::move(j));
        ds.queries.push_back(std::move(q));
    }
    if (ds.queries.empty()) throw DataError("dataset file is empty: " + queries_path);
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& queries_path,
                  const std::string& registry_path) {
    {
        std::ofstream out(registry_path);
        if (!out) throw DataError("cannot write registry file: " + registry_path);
        for (const auto& app : ds.registry.apps) {
            json rec;
            rec["app_id"] = app.app_id;
            rec["name"] = app.name;
            rec["is_dominant"] = (app.app_id == ds.registry.dominant_app);
            out << rec.dump() << "\n";
        }
    }
    std::ofstream out(queries_path);
    if (!out) throw DataError("cannot write dataset file: " + queries_path);
    for (const auto& q : ds.queries) {
        const Judgment& j = ds.judgments.at(q.query_id);
        json rec;
        rec["query_id"] = q.query_id;
        rec["text"] = q.text;
        rec["task_id"] = q.task_id;
        rec["relevant_apps"] = j.relevant_apps;
        out << rec.dump() << "\n";
    }
}

namespace {

// Deterministic bounded draw. Modulo bias is irrelevant at these pool sizes
// and keeps the sequence stable across standard libraries.
std::size_t draw(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Split split_dataset(const Dataset& ds, SplitMode mode, SplitRatios ratios,
                    std::uint64_t seed) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0 ||
        std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must be positive and sum to 1");
    }
    if (ds.queries.empty()) throw std::invalid_argument("cannot split an empty dataset");

    Split split;
    split.mode = mode;
    split.seed = seed;
    std::mt19937_64 rng(seed);

    if (mode == SplitMode::by_query) {
        std::vector<std::string> ids;
        ids.reserve(ds.queries.size());
        for (const auto& q : ds.queries) ids.push_back(q.query_id);
        std::sort(ids.begin(), ids.end());
        std::shuffle(ids.begin(), ids.end(), rng);

        const std::size_t n = ids.size();
        std::size_t n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
        std::size_t n_val = static_cast<std::size_t>(std::llround(ratios.validation * n));
        n_train = std::min(n_train, n - 2);
        if (n_val == 0) n_val = 1;
        if (n_train + n_val >= n) n_val = n - n_train - 1;
        split.train.insert(ids.begin(), ids.begin() + n_train);
        split.validation.insert(ids.begin() + n_train, ids.begin() + n_train + n_val);
        split.test.insert(ids.begin() + n_train + n_val, ids.end());
        return split;
    }

    // by_task: shuffle task ids, then hand whole tasks to whichever partition
    // is furthest below its target query count.
    std::map<std::string, std::vector<std::string>> by_task;
    for (const auto& q : ds.queries) by_task[q.task_id].push_back(q.query_id);
    if (by_task.size() < 3) {
        throw std::invalid_argument("by_task split needs at least 3 tasks");
    }
    std::vector<std::string> tasks;
    for (const auto& [task, _] : by_task) tasks.push_back(task);
    std::shuffle(tasks.begin(), tasks.end(), rng);

    const double n = static_cast<double>(ds.queries.size());
    const double targets[3] = {ratios.train * n, ratios.validation * n, ratios.test * n};
    double filled[3] = {0, 0, 0};
    std::set<std::string>* parts[3] = {&split.train, &split.validation, &split.test};
    for (const auto& task : tasks) {
        int best = 0;
        double best_deficit = -1e300;
        for (int p = 0; p < 3; ++p) {
            double deficit = (targets[p] - filled[p]) / targets[p];
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = p;
            }
        }
        const auto& qs = by_task[task];
        parts[best]->insert(qs.begin(), qs.end());
        filled[best] += static_cast<double>(qs.size());
    }
    // every partition must be non-empty; steal the smallest task if one is dry
    for (int p = 0; p < 3; ++p) {
        if (!parts[p]->empty()) continue;
        for (int q = 0; q < 3; ++q) {
            if (q == p) continue;
            // move one whole task out of the fullest partition
            std::string donor_task;
            std::size_t donor_size = SIZE_MAX;
            for (const auto& [task, qs] : by_task) {
                if (parts[q]->count(qs.front()) != 0 && qs.size() < donor_size &&
                    parts[q]->size() > qs.size()) {
                    donor_task = task;
                    donor_size = qs.size();
                }
            }
            if (donor_task.empty()) continue;
            for (const auto& qid : by_task[donor_task]) {
                parts[q]->erase(qid);
                parts[p]->insert(qid);
            }
            break;
        }
    }
    return split;
}

namespace {

const std::vector<std::string> kFirstNames = {
    "James", "Mary",  "Robert", "Linda",  "Amir",  "Sara",   "David", "Emma",
    "Lucas", "Nora",  "Oscar",  "Priya",  "Tomas", "Greta",  "Hugo",  "Ines",
    "Kenji", "Leila", "Marco",  "Nadia",  "Pavel", "Rosa",   "Samir", "Tanya",
    "Viktor", "Wendy", "Yusuf", "Zelda",  "Bruno", "Clara",  "Dario", "Elif"};

const std::vector<std::string> kLastNames = {
    "Smith",  "Jones",   "Garcia",  "Miller", "Khan",    "Silva",  "Novak",
    "Rossi",  "Tanaka",  "Muller",  "Olsen",  "Petrov",  "Quinn",  "Reyes",
    "Santos", "Takacs",  "Ueda",    "Varga",  "Weber",   "Young",  "Zhang",
    "Abbas",  "Bauer",   "Costa",   "Duran",  "Egede",   "Farkas", "Gruber",
    "Haas",   "Ivanov",  "Jensen",  "Kovacs"};

const std::vector<std::string> kTopics = {
    "pasta",    "garden",  "bicycle", "camera",  "guitar", "budget",  "yoga",
    "coffee",   "travel",  "fitness", "painting", "chess", "baking",  "hiking",
    "astronomy", "coding", "fishing", "pottery", "sewing", "surfing", "skiing",
    "origami",  "juggling", "archery", "bonsai", "kayak",  "drone",   "robot",
    "violin",   "piano",   "tango",   "sushi"};

const std::vector<std::string> kNouns = {
    "recipe", "tutorial", "review",  "guide",   "price",  "history", "tips",
    "ideas",  "course",   "lesson",  "store",   "club",   "event",   "map",
    "news",   "photo",    "video",   "song",    "album",  "podcast", "book"};

const std::vector<std::string> kVerbs = {
    "learn", "fix",  "clean", "build", "paint", "cook", "plan",
    "start", "grow", "make",  "repair", "train", "book", "find"};

const std::vector<std::string> kFileExts = {"pdf", "docx", "xlsx", "txt", "pptx", "csv"};

const std::vector<std::string> kExtraApps = {
    "video",  "social", "maps",  "music", "calendar",
    "mail",   "shop",   "notes", "photos", "weather"};

std::string synth_query_text(const std::string& app_kind, const std::string& topic,
                             const std::string& first, const std::string& last,
                             std::mt19937_64& rng) {
    if (app_kind == "contacts") {
        if (draw_unit(rng) < 0.10) return "call " + first + " " + last;
        return first + " " + last;
    }
    if (app_kind == "search") {
        switch (draw(rng, 5)) {
            case 0: return "how to " + kVerbs[draw(rng, kVerbs.size())] + " " + topic +
                           " " + kNouns[draw(rng, kNouns.size())];
            case 1: return "what is the best " + topic + " " + kNouns[draw(rng, kNouns.size())];
            case 2: return "who is " + kFirstNames[draw(rng, kFirstNames.size())] + " " +
                           kLastNames[draw(rng, kLastNames.size())];
            case 3: return topic + " " + kNouns[draw(rng, kNouns.size())] + " near me";
            default: return "why is " + topic + " " + kNouns[draw(rng, kNouns.size())] +
                            " so popular";
        }
    }
    if (app_kind == "files") {
        switch (draw(rng, 3)) {
            case 0: return topic + "_" + std::to_string(2018 + draw(rng, 6)) + "." +
                           kFileExts[draw(rng, kFileExts.size())];
            case 1: return topic + "_notes." + kFileExts[draw(rng, kFileExts.size())];
            default: return "open " + topic + "." + kFileExts[draw(rng, kFileExts.size())];
        }
    }
    // generic app family: topic plus app-flavored noun
    return topic + " " + app_kind + " " + kNouns[draw(rng, kNouns.size())];
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    if (config.app_count < 3) throw std::invalid_argument("synthetic: app_count must be >= 3");
    if (config.tasks_per_app < 1 || config.queries_per_task < 1) {
        throw std::invalid_argument("synthetic: tasks_per_app and queries_per_task must be >= 1");
    }
    if (config.dominant_fraction < 0.0 || config.dominant_fraction >= 1.0) {
        throw std::invalid_argument("synthetic: dominant_fraction must be in [0, 1)");
    }
    if (config.secondary_dominant_prob < 0.0 || config.secondary_dominant_prob > 1.0) {
        throw std::invalid_argument("synthetic: secondary_dominant_prob must be in [0, 1]");
    }

    std::mt19937_64 rng(seed);

    std::vector<std::string> app_kinds = {"search", "contacts", "files"};
    for (int i = 3; i < config.app_count; ++i) {
        if (i - 3 < static_cast<int>(kExtraApps.size())) {
            app_kinds.push_back(kExtraApps[i - 3]);
        } else {
            app_kinds.push_back("app" + std::to_string(i));
        }
    }

    Dataset ds;
    for (const auto& kind : app_kinds) {
        std::string name = kind;
        name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        ds.registry.apps.push_back({kind, name});
    }
    std::sort(ds.registry.apps.begin(), ds.registry.apps.end(),
              [](const AppInfo& a, const AppInfo& b) { return a.app_id < b.app_id; });
    ds.registry.dominant_app = "search";

    const int total = config.total_queries > 0
                          ? config.total_queries
                          : config.app_count * config.tasks_per_app * config.queries_per_task;
    const int n_tasks = (total + config.queries_per_task - 1) / config.queries_per_task;

    // exact dominant quota at task granularity, remainder spread uniformly
    const int n_dominant_tasks =
        static_cast<int>(std::llround(config.dominant_fraction * n_tasks));
    std::vector<int> task_owner(static_cast<std::size_t>(n_tasks));
    for (int t = 0; t < n_tasks; ++t) {
        task_owner[static_cast<std::size_t>(t)] =
            t < n_dominant_tasks ? 0 : 1 + static_cast<int>(draw(rng, app_kinds.size() - 1));
    }
    std::shuffle(task_owner.begin(), task_owner.end(), rng);

    int emitted = 0;
    for (int t = 0; t < n_tasks && emitted < total; ++t) {
        const std::string& kind = app_kinds[static_cast<std::size_t>(task_owner[static_cast<std::size_t>(t)])];
        const std::string task_id = "task" + std::to_string(t);
        // per-task topic / person, shared by the task's queries
        const std::string topic = kTopics[draw(rng, kTopics.size())];
        const std::string first = kFirstNames[draw(rng, kFirstNames.size())];
        const std::string last = kLastNames[draw(rng, kLastNames.size())];

        for (int k = 0; k < config.queries_per_task && emitted < total; ++k, ++emitted) {
            Query q;
            q.query_id = "q" + std::to_string(emitted);
            q.task_id = task_id;
            q.text = synth_query_text(kind, topic, first, last, rng);

            Judgment j;
            j.query_id = q.query_id;
            j.relevant_apps.push_back(kind);
            if (kind != "search" && draw_unit(rng) < config.secondary_dominant_prob) {
                j.relevant_apps.push_back("search");
            }
            ds.judgments.emplace(q.query_id, std::move(j));
            ds.queries.push_back(std::move(q));
        }
    }
    return ds;
}

}  // namespace appsel::corpus
