#include <catch_amalgamated.hpp>

#include "psysym/synth.hpp"

using namespace psysym;

TEST_CASE("synthetic world shape") {
    const auto& w = synth_world();
    CHECK(w.kg.diseases().size() >= 4);
    CHECK(w.kg.symptoms().size() >= 10);
    std::size_t shared = 0;
    for (const auto& s : w.kg.symptoms()) shared += w.kg.diseases_of(s.id).size() > 1;
    CHECK(static_cast<double>(shared) >= 0.3 * static_cast<double>(w.kg.symptoms().size()));
    for (const auto& b : w.banks) {
        KeywordLexicon lex(b.lexicon);
        for (const auto& p : b.paraphrase) REQUIRE_FALSE(lex.matches(p));
    }
}

TEST_CASE("relevance benchmark hides off-queue labels") {
    SentenceKnobs k;
    k.sentences = 400;
    const auto b = make_relevance_benchmark(k, 3);
    CHECK(b.sentences.size() == 400);
    CHECK(b.train.size() + b.validation.size() + b.test.size() == 400);
    std::size_t missing = 0, hidden_pos = 0;
    for (std::size_t r = 0; r < b.sentences.size(); ++r) {
        for (std::size_t c = 0; c < b.symptom_ids.size(); ++c) {
            const bool in_queue = synth_world().kg.typical_symptoms(b.sentences[r].disease).count(b.symptom_ids[c]) > 0;
            REQUIRE((b.observed.at(r, c) != LabelState::missing) == in_queue);
            missing += b.observed.at(r, c) == LabelState::missing;
            hidden_pos += b.observed.at(r, c) == LabelState::missing && b.truth.at(r, c) == LabelState::positive;
        }
    }
    CHECK(missing > 0);
    CHECK(hidden_pos > 0);  // missing is not the same as negative
    const auto again = make_relevance_benchmark(k, 3);
    CHECK(again.observed == b.observed);
    CHECK(make_relevance_benchmark(k, 4).observed != b.observed);
}

TEST_CASE("label noise is injected at the configured rate") {
    SentenceKnobs k;
    k.sentences = 600;
    k.label_noise = 0.0;
    const auto clean = make_relevance_benchmark(k, 1);
    for (const auto& a : clean.annotations) {
        const auto& s = clean.sentences[static_cast<std::size_t>(std::stoul(a.sentence_id.substr(1)))];
        for (const auto& [sid, rel] : a.relevance) REQUIRE(rel == (s.truth.count(sid) > 0));
    }
    k.label_noise = 0.2;
    const auto noisy = make_relevance_benchmark(k, 1);
    std::size_t flips = 0, total = 0;
    for (const auto& a : noisy.annotations) {
        const auto& s = noisy.sentences[static_cast<std::size_t>(std::stoul(a.sentence_id.substr(1)))];
        for (const auto& [sid, rel] : a.relevance) {
            ++total;
            flips += rel != (s.truth.count(sid) > 0);
        }
    }
    const double rate = static_cast<double>(flips) / static_cast<double>(total);
    CHECK(rate > 0.15);
    CHECK(rate < 0.25);
}

TEST_CASE("retrieval corpus composition") {
    RetrievalKnobs k;
    k.planted = 200;
    k.distractors = 300;
    const auto c = make_retrieval_corpus(k, 2);
    CHECK(c.sentences.size() == 500);
    CHECK(c.paraphrase_only * 2 >= k.planted);
    std::size_t positives = 0;
    for (const auto& [key, g] : c.gold) positives += g;
    CHECK(positives == k.planted);
}

TEST_CASE("synthetic users and the diagnosis rule") {
    UserKnobs k;
    k.positives_per_disease = 4;
    k.controls = 6;
    k.diagnosis_posts = true;
    const auto users = make_users(k, 5);
    const auto& w = synth_world();
    CHECK(users.size() == 4 * w.kg.diseases().size() + 6);
    const auto rule = synth_diagnosis_rule();
    for (const auto& u : users) {
        std::set<std::string> found;
        for (const auto& p : u.posts) {
            const auto d = match_diagnoses(p.text, rule);
            found.insert(d.begin(), d.end());
        }
        std::set<std::string> labeled;
        for (const auto& [d, l] : u.labels) {
            if (l) labeled.insert(d);
        }
        REQUIRE(found == labeled);
    }
}
