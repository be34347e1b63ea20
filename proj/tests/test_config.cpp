#include <catch_amalgamated.hpp>

#include "psysym/config.hpp"

using namespace psysym;

TEST_CASE("parses sections, scalars and arrays") {
    const auto c = Config::parse(R"(
# run settings
[seeds]
seed = 7

[relevance]
mode = "label_enhance"   # trailing comment
lr = 2.0
balanced = true
kernels = [3, 5, 7]
names = ["a#b", 'c']
)");
    CHECK(c.get_u64("seeds.seed", 0) == 7);
    CHECK(c.get_string("relevance.mode") == "label_enhance");
    CHECK(c.get_double("relevance.lr", 0) == 2.0);
    CHECK(c.get_bool("relevance.balanced", false));
    CHECK(c.get_doubles("relevance.kernels", {}) == std::vector<double>{3, 5, 7});
    CHECK(c.get_strings("relevance.names", {}) == std::vector<std::string>{"a#b", "c"});
    CHECK(c.get_size("missing.key", 4) == 4);
}

TEST_CASE("rejects malformed input") {
    CHECK_THROWS_AS(Config::parse("key = 1"), ParseError);
    CHECK_THROWS_AS(Config::parse("[a]\nkey"), ParseError);
    CHECK_THROWS_AS(Config::parse("[a]\nk = \"open"), ParseError);
    CHECK_THROWS_AS(Config::parse("[a]\nk = 1\nk = 2"), ParseError);
    CHECK_THROWS_AS(Config::parse("[a b]\n"), ParseError);
    const auto c = Config::parse("[a]\ns = \"x\"\nn = 1.5");
    CHECK_THROWS_AS(c.get_double("a.s", 0), ParseError);
    CHECK_THROWS_AS(c.get_size("a.n", 0), ValidationError);
    CHECK_THROWS_AS(c.get_bool("a.n", false), ValidationError);
}

TEST_CASE("environment overrides") {
    auto c = Config::parse("[relevance]\nl2 = 0.0001\n");
    const char* env[] = {"PSYSYM_RELEVANCE_L2=1e-6", "PSYSYM_LABEL_MH_TERMS=[\"a\", \"b\"]", "OTHER=1",
                         "PSYSYM_NOSECTION=3", nullptr};
    c.apply_env(env);
    CHECK(c.get_double("relevance.l2", 0) == 1e-6);
    CHECK(c.get_strings("label.mh_terms", {}) == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(c.has("nosection."));
}

TEST_CASE("paths resolve against the config directory") {
    auto c = Config::parse("[inputs]\nkg = \"kg.json\"\nabs = \"/tmp/x\"\n");
    c.set_base_dir("/data/run");
    CHECK(c.get_path("inputs.kg") == "/data/run/kg.json");
    CHECK(c.get_path("inputs.abs") == "/tmp/x");
    CHECK(c.to_json().at("inputs.kg") == "kg.json");
}
