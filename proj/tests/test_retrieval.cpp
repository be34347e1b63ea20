#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "psysym/retrieval.hpp"

using namespace psysym;

TEST_CASE("queue keeps the best scores and breaks ties by arrival") {
    CandidateQueue q("s", 2);
    CHECK(q.offer("a", 0.5, 0));
    CHECK(q.offer("b", 0.5, 1));
    CHECK_FALSE(q.offer("c", 0.5, 2));  // equal to the minimum: rejected
    CHECK(q.offer("d", 0.9, 3));
    const auto e = q.entries();
    REQUIRE(e.size() == 2);
    CHECK(e[0].sentence_id == "d");
    CHECK(e[1].sentence_id == "a");
    CHECK_THROWS(CandidateQueue("s", 0));
}

TEST_CASE("queue matches sort-and-take on random streams") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = 1 + rng.index(10);
        const std::size_t n = rng.index(60);
        CandidateQueue q("s", cap);
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = static_cast<double>(rng.index(8)) / 8.0;  // coarse grid: many ties
            q.offer("x" + std::to_string(i), s, i);
            all.emplace_back(s, i);
        }
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        const auto e = q.entries();
        REQUIRE(e.size() == std::min(cap, n));
        for (std::size_t i = 0; i < e.size(); ++i) {
            REQUIRE(e[i].order == all[i].second);
        }
    }
}

TEST_CASE("select_candidates equals the brute-force union") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto f = testing::random_candidate_fixture(seed, 300);
        for (std::size_t cap : {1, 5, 300}) {
            const auto sel = select_candidates(f.sentences, f.kg, f.disease, f.store, cap);
            REQUIRE(sel.sentence_ids == testing::brute_force_candidates(f.sentences, f.kg, f.disease, f.store, cap));
            REQUIRE(sel.queues.size() == f.kg.typical_symptoms(f.disease).size());
        }
    }
}

TEST_CASE("candidate TSV round trip") {
    std::vector<CandidateRow> rows{{"p1:0", "insomnia", 0.25}, {"p2:3", "anxious_mood", -0.125}};
    const auto back = parse_candidates(serialize_candidates(rows));
    REQUIRE(back.size() == 2);
    CHECK(back[1].sentence_id == "p2:3");
    CHECK(back[1].score == -0.125);
    CHECK_THROWS_AS(parse_candidates("a\tb\n"), ParseError);
}

TEST_CASE("shingles and exact Jaccard") {
    CHECK(shingles("abcd", 3) == std::set<std::string>{"abc", "bcd"});
    CHECK(exact_jaccard("abcd", "abcd") == 1.0);
    CHECK(exact_jaccard("abcd", "bcde") == Catch::Approx(1.0 / 3.0));
    CHECK(exact_jaccard("aaaa", "zzzz") == 0.0);
}

TEST_CASE("MinHash estimates Jaccard") {
    Rng rng(3);
    const std::vector<std::string> vocab{"sleep", "tired", "night", "worry", "panic", "food", "work",
                                         "mood",  "sad",   "lost",  "cry",   "fear",  "calm", "day"};
    std::size_t good = 0;
    const std::size_t pairs = 100;
    for (std::size_t i = 0; i < pairs; ++i) {
        std::string a, b;
        for (int k = 0; k < 12; ++k) a += rng.pick(vocab) + " ";
        b = a;
        for (int k = 0; k < static_cast<int>(rng.index(12)); ++k) b += rng.pick(vocab) + " ";
        const double est = signature_match(minhash_signature(a), minhash_signature(b));
        good += std::abs(est - exact_jaccard(a, b)) <= 0.1;
    }
    CHECK(static_cast<double>(good) >= 0.95 * pairs);
    CHECK(signature_match(minhash_signature("same text"), minhash_signature("same text")) == 1.0);
    CHECK_THROWS(minhash_signature("x", 8));
}

TEST_CASE("LSH dedup collapses duplicates and keeps distinct texts") {
    std::vector<TextItem> items{{"b", "I have not slept properly in weeks and I am exhausted"},
                                {"a", "I have not slept properly in weeks and I am exhausted"},
                                {"c", "I have not slept properly in weeks and I am exhausted!"},
                                {"d", "my cat knocked over the plant again this morning"}};
    const auto keep = lsh_dedup(items);
    CHECK(keep == std::vector<std::string>{"a", "d"});
    CHECK_THROWS(lsh_dedup(items, DedupConfig{10, 4, 128}));
}

TEST_CASE("keyword lexicon matches whole token sequences") {
    KeywordLexicon lex({"insomnia", "can't sleep"});
    CHECK(lex.matches("Insomnia again."));
    CHECK(lex.matches("I can't sleep at all"));
    CHECK_FALSE(lex.matches("insomniac"));
    CHECK_FALSE(lex.matches("can sleep"));
}

TEST_CASE("retrieval evaluation counts per symptom") {
    std::map<PairKey, bool> gold{{{"1", "a"}, true}, {{"2", "a"}, false}, {{"3", "a"}, true}, {{"1", "b"}, false}};
    std::map<PairKey, double> scores{{{"1", "a"}, 0.9}, {{"2", "a"}, 0.7}, {{"3", "a"}, 0.1}, {{"1", "b"}, 0.8}};
    const auto ev = evaluate_retrieval(scores, gold, 0.5);
    CHECK(ev.per_symptom.at("a").tp == 1);
    CHECK(ev.per_symptom.at("a").fp == 1);
    CHECK(ev.per_symptom.at("a").fn == 1);
    CHECK(ev.macro_precision == 0.5);  // "b" has no positives and is left out
    CHECK(ev.macro_recall == 0.5);
}
