#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "psysym/psysym.hpp"

namespace fs = std::filesystem;
using namespace psysym;

namespace {

const fs::path kRoot = fs::absolute("cli_test_work");

int run(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" PSYSYM_CLI_PATH "' " + args + " >" +
                            (kRoot / "stdout.txt").string() + " 2>" + (kRoot / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config() { return "--config " + (kRoot / "fx" / "config.toml").string(); }

struct Fixtures {
    Fixtures() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
        REQUIRE(run("synth-fixtures --out " + (kRoot / "fx").string() + " --seed 3") == 0);
    }
};

const Fixtures& fixtures() {
    static Fixtures f;
    return f;
}

}  // namespace

TEST_CASE("fixtures are a loadable world") {
    fixtures();
    const auto kg = load_kg((kRoot / "fx" / "kg.json").string());
    CHECK(kg.diseases().size() >= 4);
    CHECK(!load_posts((kRoot / "fx" / "posts.jsonl").string()).empty());
    CHECK(!load_annotations((kRoot / "fx" / "annotations.tsv").string()).empty());
    CHECK_NOTHROW(Config::load((kRoot / "fx" / "config.toml").string()));
}

TEST_CASE("validate-kg writes a report and a manifest") {
    fixtures();
    const auto out = kRoot / "o1";
    REQUIRE(run("validate-kg " + config() + " --out " + out.string()) == 0);
    const auto m = nlohmann::json::parse(read_file((out / "validate-kg.manifest.json").string()));
    CHECK(m.at("stage") == "validate-kg");
    CHECK(m.at("seed") == 1);
    CHECK(m.at("inputs").at("kg").at("file") == "kg.json");
    CHECK(m.at("summary").at("valid") == true);
    CHECK(fs::exists(out / "kg_report.json"));
}

TEST_CASE("seed precedence: flag over environment over config") {
    fixtures();
    const auto out = kRoot / "o2";
    REQUIRE(run("validate-kg " + config() + " --out " + out.string(), "PSYSYM_SEEDS_SEED=9") == 0);
    CHECK(nlohmann::json::parse(read_file((out / "validate-kg.manifest.json").string())).at("seed") == 9);
    REQUIRE(run("validate-kg " + config() + " --out " + out.string() + " --seed 4", "PSYSYM_SEEDS_SEED=9") == 0);
    CHECK(nlohmann::json::parse(read_file((out / "validate-kg.manifest.json").string())).at("seed") == 4);
}

TEST_CASE("errors are structured JSON with exit status 2") {
    fixtures();
    write_file((kRoot / "bad_kg.json").string(), R"({"diseases": []})");
    CHECK(run("validate-kg " + config() + " --out " + (kRoot / "o3").string() + " --kg " + (kRoot / "bad_kg.json").string()) == 2);
    const auto err = nlohmann::json::parse(read_file((kRoot / "stderr.txt").string()));
    CHECK(err.at("error").at("stage") == "validate-kg");
    CHECK(err.at("error").at("message").get<std::string>().find("symptoms") != std::string::npos);

    CHECK(run("retrieve " + config() + " --out " + (kRoot / "o3").string() + " --disease nope") == 2);
    CHECK(run("train-relevance " + config() + " --out " + (kRoot / "o3").string() + " --mode sideways") != 0);
    CHECK(run("no-such-command") != 0);
}

TEST_CASE("a later stage picks up earlier outputs from the output directory") {
    fixtures();
    const auto out = (kRoot / "o4").string();
    REQUIRE(run("embed " + config() + " --out " + out) == 0);
    REQUIRE(run("retrieve " + config() + " --out " + out + " --disease depression") == 0);
    const auto rows = parse_candidates(read_file((kRoot / "o4" / "candidates_depression.tsv").string()));
    CHECK(!rows.empty());
    const auto kg = load_kg((kRoot / "fx" / "kg.json").string());
    for (const auto& r : rows) REQUIRE(kg.typical_symptoms("depression").count(r.symptom_id) == 1);
    REQUIRE(run("dedup " + config() + " --out " + out + " --disease depression") == 0);
    CHECK(parse_candidates(read_file((kRoot / "o4" / "candidates_depression.dedup.tsv").string())).size() <= rows.size());
}
