#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "appsel/crossencoder.hpp"
#include "appsel/lexical.hpp"

using namespace appsel;

namespace {

appdocs::PairInput pair_of(const std::string& query, const std::string& doc) {
    appdocs::AppDocument d;
    d.app_id = "x";
    d.text = doc;
    return appdocs::make_pair_input(query, d, ce::word_tokenizer, 256);
}

ce::TinyEncoder::Config small_config(std::uint64_t seed) {
    ce::TinyEncoder::Config c;
    c.vocab_buckets = 512;
    c.embedding_dim = 12;
    c.hidden_dim = 12;
    c.seed = seed;
    return c;
}

appdocs::AppDocumentMap three_docs() {
    appdocs::AppDocumentMap docs;
    docs["contacts"] = {"contacts", "John Smith, Mary Jones, Bob Brown", {}, 0};
    docs["files"] = {"files", "report_2021.pdf, notes_2020.txt", {}, 0};
    docs["search"] = {"search", "how to cook pasta, weather tomorrow", {}, 0};
    return docs;
}

}  // namespace

TEST_CASE("word tokenizer preserves case and splits punctuation") {
    CHECK(ce::word_tokenizer("John Smith!") == std::vector<std::string>{"John", "Smith"});
    CHECK(ce::word_tokenizer("report_2021.pdf") ==
          std::vector<std::string>{"report", "2021", "pdf"});
    CHECK(ce::word_tokenizer("").empty());
}

TEST_CASE("encoder is seed-deterministic and emits probabilities") {
    ce::TinyEncoder a(small_config(4));
    ce::TinyEncoder b(small_config(4));
    ce::TinyEncoder c(small_config(5));

    const auto p1 = pair_of("John Smith", "Mary Jones, Bob Brown");
    const auto p2 = pair_of("pasta recipe", "how to cook pasta");
    const std::vector<const appdocs::PairInput*> batch = {&p1, &p2};

    const auto pa = a.predict(batch);
    const auto pb = b.predict(batch);
    const auto pc = c.predict(batch);
    REQUIRE(pa.size() == 2);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i] == pb[i]);
        CHECK(pa[i] >= 0.0);
        CHECK(pa[i] <= 1.0);
    }
    CHECK(pa != pc);
}

TEST_CASE("update drives the loss down on a separable batch") {
    ce::TinyEncoder enc(small_config(1));
    const auto pos = pair_of("John Smith", "Mary Jones, Bob Brown, Alice Green");
    const auto neg = pair_of("John Smith", "how to cook pasta, weather tomorrow");
    const std::vector<const appdocs::PairInput*> batch = {&pos, &neg};
    const std::vector<int> labels = {1, 0};

    const double first = enc.update(batch, labels, 0.05);
    double last = first;
    for (int i = 0; i < 60; ++i) last = enc.update(batch, labels, 0.05);
    CHECK(last < first);
    CHECK(last < 0.1);

    const auto probs = enc.predict(batch);
    CHECK(probs[0] > 0.9);
    CHECK(probs[1] < 0.1);
}

TEST_CASE("update validates its arguments") {
    ce::TinyEncoder enc(small_config(1));
    const auto p = pair_of("a", "b");
    CHECK_THROWS(enc.update({}, {}, 0.05));
    CHECK_THROWS(enc.update({&p}, {1, 0}, 0.05));
}

TEST_CASE("checkpoint round trip preserves predictions") {
    ce::TinyEncoder enc(small_config(9));
    const auto pos = pair_of("John Smith", "Mary Jones");
    const auto neg = pair_of("John Smith", "cook pasta");
    for (int i = 0; i < 10; ++i) enc.update({&pos, &neg}, {1, 0}, 0.05);

    const auto dir =
        (std::filesystem::temp_directory_path() / "appsel_ce_ckpt").string();
    enc.save(dir);
    const auto again = ce::TinyEncoder::load(dir);
    REQUIRE(again != nullptr);
    CHECK(again->token_budget() == enc.token_budget());

    const std::vector<const appdocs::PairInput*> batch = {&pos, &neg};
    const auto pa = enc.predict(batch);
    const auto pb = again->predict(batch);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("build_finetune_pairs labels the BM25 candidates") {
    std::vector<corpus::Query> qs = {{"q1", "John Smith", "t1"}, {"q2", "cook pasta", "t2"}};
    std::map<std::string, corpus::Judgment> js;
    js["q1"] = {"q1", {"contacts"}};
    js["q2"] = {"q2", {"search"}};

    const auto docs = three_docs();
    lexical::Index index(docs);
    std::map<std::string, Ranking> bm25;
    for (const auto& q : qs) bm25[q.query_id] = lexical::rank_bm25(index, q.query_id, q.text);

    ce::FinetuneParams params;
    params.candidate_depth = 2;
    ce::PairBuildStats stats;
    const auto pairs = ce::build_finetune_pairs(qs, js, bm25, docs, ce::word_tokenizer,
                                                params, &stats);
    CHECK(pairs.size() == 4);  // 2 queries x depth 2
    CHECK(stats.positives + stats.negatives == pairs.size());
    CHECK(stats.positives >= 1);
    for (const auto& p : pairs) {
        const bool expected = js.at(p.query_id).gain(p.app_id) >= 1;
        CHECK(p.relevant == expected);
        CHECK(!p.pair.query_tokens.empty());
    }

    // a query whose gold app never makes the candidate list is counted
    std::map<std::string, Ranking> shallow = bm25;
    ce::FinetuneParams deep1 = params;
    deep1.candidate_depth = 1;
    js["q2"] = {"q2", {"files"}};  // bm25 top-1 for "cook pasta" is search
    ce::PairBuildStats stats2;
    ce::build_finetune_pairs(qs, js, shallow, docs, ce::word_tokenizer, deep1, &stats2);
    CHECK(stats2.queries_without_positive >= 1);
}

TEST_CASE("finetune rejects degenerate inputs") {
    const auto docs = three_docs();
    ce::TinyEncoder enc(small_config(1));
    ce::FinetuneParams params;
    params.learning_rate = 0.05;

    CHECK_THROWS(ce::finetune({}, params, enc));

    ce::TrainingPair only_pos;
    only_pos.pair = pair_of("John Smith", "Mary Jones");
    only_pos.relevant = true;
    CHECK_THROWS(ce::finetune({only_pos}, params, enc));

    ce::TrainingPair neg = only_pos;
    neg.relevant = false;
    ce::FinetuneParams mismatched = params;
    mismatched.token_budget = 128;
    CHECK_THROWS(ce::finetune({only_pos, neg}, mismatched, enc));
}

TEST_CASE("finetune is deterministic and reduces the loss") {
    std::vector<ce::TrainingPair> pairs;
    const std::vector<std::pair<std::string, std::string>> names = {
        {"Alice Green", "Mary Jones"}, {"Bob Brown", "Carol White"}};
    for (const auto& [q, d] : names) {
        ce::TrainingPair pos;
        pos.pair = pair_of(q, d + ", Dave Black");
        pos.relevant = true;
        pairs.push_back(pos);
        ce::TrainingPair neg;
        neg.pair = pair_of(q, "how to cook pasta quickly");
        neg.relevant = false;
        pairs.push_back(neg);
    }

    ce::FinetuneParams params;
    params.learning_rate = 0.05;
    params.epochs = 8;
    params.batch_size = 2;
    params.seed = 2;

    ce::TinyEncoder a(small_config(2));
    const auto ra = ce::finetune(pairs, params, a);
    ce::TinyEncoder b(small_config(2));
    const auto rb = ce::finetune(pairs, params, b);
    CHECK(ra.final_loss == rb.final_loss);
    REQUIRE(ra.epoch_losses.size() == 8);
    CHECK(ra.epoch_losses.back() < ra.epoch_losses.front());
}

TEST_CASE("rank_crossencoder covers all apps and respects bm25_topk") {
    const auto docs = three_docs();
    ce::TinyEncoder enc(small_config(3));

    const Ranking all = ce::rank_crossencoder("q", "John Smith", docs, enc,
                                              ce::word_tokenizer,
                                              ce::CandidatePolicy::all_apps);
    CHECK(all.items.size() == 3);

    lexical::Index index(docs);
    const Ranking bm25 = lexical::rank_bm25(index, "q", "John Smith");
    const Ranking topk = ce::rank_crossencoder("q", "John Smith", docs, enc,
                                               ce::word_tokenizer,
                                               ce::CandidatePolicy::bm25_topk, &bm25, 1);
    REQUIRE(topk.items.size() == 3);
    // the single scored app leads; the rest keep BM25 order with sentinel scores
    CHECK(topk.items[0].first == bm25.items[0].first);
    CHECK(topk.items[1].second < 0.0);
    CHECK(topk.items[1].first == bm25.items[1].first);
    CHECK(topk.items[2].first == bm25.items[2].first);

    CHECK_THROWS(ce::rank_crossencoder("q", "John Smith", docs, enc, ce::word_tokenizer,
                                       ce::CandidatePolicy::bm25_topk, nullptr, 1));
}
