#include <catch_amalgamated.hpp>

#include "psysym/common.hpp"

using namespace psysym;

TEST_CASE("derive_seed is a pure function of seed and tag") {
    CHECK(derive_seed(7, "split") == derive_seed(7, "split"));
    CHECK(derive_seed(7, "split") != derive_seed(8, "split"));
    CHECK(derive_seed(7, "split") != derive_seed(7, "shuffle"));
}

TEST_CASE("Rng streams repeat for equal seeds") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
    Rng c(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(c.index(7) < 7);
    }
    CHECK_THROWS(c.index(0));
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("string helpers") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(split("a\tb\t", '\t') == std::vector<std::string>{"a", "b", ""});
    CHECK(word_tokens("I can't SLEEP, ok?") == std::vector<std::string>{"i", "can", "t", "sleep", "ok"});
    CHECK(slugify("Anxious Mood") == "anxious_mood");
    CHECK(slugify("  Sleep -- problems! ") == "sleep_problems");
    CHECK(to_lower("AbC") == "abc");
}

TEST_CASE("format_double round-trips exactly") {
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.normal() * std::pow(10.0, static_cast<double>(rng.index(20)) - 10.0);
        REQUIRE(parse_double(format_double(x), "x") == x);
    }
    CHECK_THROWS_AS(parse_double("1.5x", "x"), ParseError);
    CHECK_THROWS_AS(parse_double("", "x"), ParseError);
}

TEST_CASE("sigmoid is stable at extremes") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(std::abs(sigmoid(2.0) + sigmoid(-2.0) - 1.0) < 1e-15);
}
