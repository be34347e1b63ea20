#include <catch_amalgamated.hpp>

#include "psysym/embed.hpp"

using namespace psysym;

TEST_CASE("cosine of unit vectors") {
    const Vector a{1, 0, 0}, b{0, 1, 0}, c{-1, 0, 0};
    CHECK(cosine(a, a) == Catch::Approx(1.0));
    CHECK(cosine(a, b) == Catch::Approx(0.0));
    CHECK(cosine(a, c) == Catch::Approx(-1.0));
}

TEST_CASE("store renormalizes and validates") {
    EmbeddingStore store;
    store.add("a", {3.0, 4.0});
    CHECK(store.dim() == 2);
    CHECK(store.at("a")[0] == Catch::Approx(0.6));
    CHECK(l2_norm(store.at("a")) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(store.add("b", {1.0, 0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(store.add("c", {0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(store.add("a", {1.0, 0.0}), ValidationError);
}

TEST_CASE("embedding TSV round trip is exact") {
    EmbeddingStore store;
    Rng rng(1);
    for (int i = 0; i < 5; ++i) {
        Vector v(16);
        for (auto& x : v) x = rng.normal();
        store.add("s#" + std::to_string(i), v);
    }
    const auto text = serialize_embeddings(store);
    const auto back = parse_embeddings(text);
    CHECK(back.entries() == store.entries());
    CHECK(serialize_embeddings(back) == text);
    CHECK_THROWS_AS(parse_embeddings("#dim=3\na\t1\t0\n"), ValidationError);
    CHECK_THROWS_AS(parse_embeddings("a\tone\n"), ParseError);
}

TEST_CASE("hash_embed is deterministic and unit length") {
    const auto a = hash_embed("I cannot sleep at night", 64, 3);
    CHECK(a == hash_embed("I cannot sleep at night", 64, 3));
    CHECK(a != hash_embed("I cannot sleep at night", 64, 4));
    CHECK(l2_norm(a) == Catch::Approx(1.0));
    CHECK(cosine(a, hash_embed("i cannot sleep at night!", 64, 3)) > cosine(a, hash_embed("the weather is nice", 64, 3)));
}

TEST_CASE("concept embedder puts synonyms together") {
    const ConceptEmbedder emb({{"insomnia", "sleep"}, {"sleepless", "sleep"}, {"sad", "mood"}}, 64, 11);
    const auto a = emb.embed("insomnia");
    const auto b = emb.embed("sleepless");
    const auto c = emb.embed("sad");
    CHECK(cosine(a, b) > 0.85);
    CHECK(cosine(a, c) < 0.5);
    CHECK(emb.embed("the a of") == emb.embed(""));
}

TEST_CASE("symptom relevance is the max over sub-symptoms") {
    Symptom s{"sleep", "Sleep", {{"a", DescriptionSource::manual}, {"b", DescriptionSource::post}}};
    EmbeddingStore store;
    store.add(sub_symptom_key("sleep", 0), {1.0, 0.0});
    store.add(sub_symptom_key("sleep", 1), {0.0, 1.0});
    const Vector q{0.6, 0.8};
    CHECK(symptom_relevance(q, s, store).score == Catch::Approx(0.8));
    EmbeddingStore partial;
    partial.add(sub_symptom_key("sleep", 0), {1.0, 0.0});
    CHECK_THROWS(symptom_relevance(q, s, partial));
}
