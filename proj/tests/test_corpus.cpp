#include <catch_amalgamated.hpp>

#include "psysym/corpus.hpp"

using namespace psysym;

TEST_CASE("cleaning flattens markdown links") {
    RawPost p{"p1", "u1", "depression", 0, "see [this post](http://x.y/z) and [[nested] link](u)"};
    const auto c = clean_post(p);
    CHECK(c.text.find("http") == std::string::npos);
    CHECK(c.text.find("this post") != std::string::npos);
}

TEST_CASE("sentence splitting") {
    CHECK(split_text("I can't sleep. I worry!! Is it bad?") ==
          std::vector<std::string>{"I can't sleep.", "I worry!!", "Is it bad?"});
    CHECK(split_text("Dr. Smith said e.g. rest helps. Ok") ==
          std::vector<std::string>{"Dr. Smith said e.g. rest helps.", "Ok"});
    CHECK(split_text("line one\nline two") == std::vector<std::string>{"line one", "line two"});
    CHECK(split_text("[removed]").empty());
    CHECK(split_text("3.5 hours of sleep.") == std::vector<std::string>{"3.5 hours of sleep."});
    const auto s = split_sentences({"p9", "u", "r", 0, "One. Two."});
    REQUIRE(s.size() == 2);
    CHECK(s[1].post_id == "p9");
    CHECK(s[1].index == 1);
}

TEST_CASE("diagnosis window is measured between nearest edges") {
    DiagnosisRule rule{{"diagnosed with"}, {{"ocd", {"ocd"}}}, 40};
    // Exactly 40 characters between the pattern and the keyword: inside.
    CHECK(match_diagnoses("diagnosed with " + std::string(38, 'x') + " ocd", rule) == std::set<std::string>{"ocd"});
    // 41 characters: outside.
    CHECK(match_diagnoses("diagnosed with " + std::string(39, 'x') + " ocd", rule).empty());
    // Keyword before the pattern counts too.
    CHECK(match_diagnoses("ocd " + std::string(39, 'y') + "diagnosed with", rule) == std::set<std::string>{"ocd"});
    CHECK(match_diagnoses("ocd " + std::string(40, 'y') + "diagnosed with", rule).empty());
    // Whole-word keyword.
    CHECK(match_diagnoses("diagnosed with ocdx", rule).empty());
    CHECK(span_gap({0, 14}, {54, 57}) == 40);
    CHECK(span_gap({0, 10}, {5, 8}) == 0);
}

TEST_CASE("diagnosed users, diagnostic posts and controls") {
    DiagnosisRule rule{{"diagnosed with"}, {{"depression", {"depression", "mdd"}}, {"ocd", {"ocd"}}}, 40};
    std::vector<RawPost> posts{
        {"p1", "alice", "depression", 1, "I was diagnosed with MDD last year"},
        {"p2", "alice", "depression", 2, "still tired"},
        {"p3", "bob", "cooking", 3, "pasta tonight"},
        {"p4", "carol", "gaming", 4, "my anxiety is bad"},
        {"p5", "dave", "cooking", 5, "bread recipe"},
    };
    const auto r = label_diagnosed_users(posts, rule);
    CHECK(r.user_diseases.at("alice") == std::set<std::string>{"depression"});
    CHECK(r.diagnostic_posts == std::set<std::string>{"p1"});
    const auto kept = filter_diagnostic_posts(posts, r.diagnostic_posts);
    CHECK(kept.size() == 4);
    const auto eligible = eligible_control_users(posts, {"depression"}, {"anxiety"});
    CHECK(eligible == std::vector<std::string>{"bob", "dave"});
    CHECK(sample_control_users(posts, {"depression"}, {"anxiety"}, 2, 1).size() == 2);
    CHECK_THROWS_AS(sample_control_users(posts, {"depression"}, {"anxiety"}, 3, 1), ValidationError);
}

TEST_CASE("5:1:4 split counts are exact") {
    std::vector<std::string> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back("id" + std::to_string(i));
    const auto s = split_dataset(ids, kDefaultRatios, 3);
    std::map<Split, int> n;
    for (const auto& [id, sp] : s) ++n[sp];
    CHECK(n[Split::train] == 500);
    CHECK(n[Split::validation] == 100);
    CHECK(n[Split::test] == 400);
    CHECK(split_dataset(ids, kDefaultRatios, 3) == s);
    CHECK(split_dataset(ids, kDefaultRatios, 4) != s);
}

TEST_CASE("stratified split cuts each class in proportion") {
    std::vector<std::string> ids;
    std::map<std::string, std::string> strata;
    for (int i = 0; i < 30; ++i) {
        ids.push_back("a" + std::to_string(i));
        strata[ids.back()] = "a";
    }
    for (int i = 0; i < 20; ++i) {
        ids.push_back("b" + std::to_string(i));
        strata[ids.back()] = "b";
    }
    const auto s = split_dataset(ids, kDefaultRatios, 1, &strata);
    std::map<std::pair<std::string, Split>, int> n;
    for (const auto& [id, sp] : s) ++n[{strata[id], sp}];
    CHECK(n[{"a", Split::train}] == 15);
    CHECK(n[{"a", Split::validation}] == 3);
    CHECK(n[{"a", Split::test}] == 12);
    CHECK(n[{"b", Split::train}] == 10);
    CHECK(n[{"b", Split::validation}] == 2);
    CHECK(n[{"b", Split::test}] == 8);
}

TEST_CASE("posts JSONL round trip and split file IO") {
    std::vector<RawPost> posts{{"p1", "u1", "r", 10, "hello \"world\""}, {"p2", "u2", "r", 11, "line\nbreak"}};
    const auto back = parse_posts(serialize_posts(posts));
    REQUIRE(back.size() == 2);
    CHECK(back[1].text == "line\nbreak");
    CHECK_THROWS_AS(parse_posts("{\"id\": 3}\n"), ParseError);
    CHECK_THROWS_AS(parse_split("dev"), ParseError);
}
