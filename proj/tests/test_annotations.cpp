#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "psysym/annotations.hpp"

using namespace psysym;

namespace {

AnnotationRecord rec(const std::string& a, std::map<std::string, bool> rel, std::optional<Status> st) {
    return {"s1", a, std::move(rel), st};
}

}  // namespace

TEST_CASE("relevance merge is a union over annotators") {
    const auto g = merge_gold({rec("a", {{"x", true}, {"y", false}}, Status::True),
                               rec("b", {{"x", false}, {"y", true}}, Status::Uncertain),
                               rec("c", {{"x", false}, {"y", false}}, std::nullopt)});
    CHECK(g.relevant == std::set<std::string>{"x", "y"});
    CHECK(g.observed == std::set<std::string>{"x", "y"});
    CHECK(g.status_q == 0.5);
    CHECK_FALSE(g.status_applicable);  // annotator c gave no status vote
    CHECK(g.n_annotators == 3);
}

TEST_CASE("annotators must agree on the observed symptom set") {
    CHECK_THROWS_AS(merge_relevance({rec("a", {{"x", true}}, Status::True), rec("b", {{"y", true}}, Status::True)}),
                    ValidationError);
}

TEST_CASE("status fractions come in thirds") {
    for (int u = 0; u <= 3; ++u) {
        std::vector<AnnotationRecord> rs;
        for (int i = 0; i < 3; ++i) rs.push_back(rec("a" + std::to_string(i), {{"x", true}}, i < u ? Status::Uncertain : Status::True));
        CHECK(merge_status(rs).q == static_cast<double>(u) / 3.0);
    }
    CHECK_FALSE(merge_gold({rec("a", {{"x", false}}, std::nullopt)}).status_applicable);
}

TEST_CASE("applicable status fractions are multiples of 1/n") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.index(5);
        std::vector<AnnotationRecord> rs;
        for (std::size_t i = 0; i < n; ++i) {
            const bool rel = rng.bernoulli(0.8);
            std::optional<Status> st;
            if (rel) st = rng.bernoulli(0.4) ? Status::Uncertain : Status::True;
            rs.push_back(rec("a" + std::to_string(i), {{"x", rel}}, st));
        }
        rng.shuffle(rs);
        const auto g = merge_gold(rs);
        if (!g.status_applicable) continue;
        const double k = g.status_q * static_cast<double>(g.n_annotators);
        CHECK(std::abs(k - std::round(k)) < 1e-12);
    }
}

TEST_CASE("sentence status is Uncertain when any symptom is") {
    CHECK(sentence_status_from_symptom_status({{"x", Status::True}, {"y", Status::Uncertain}}) == Status::Uncertain);
    CHECK(sentence_status_from_symptom_status({{"x", Status::True}}) == Status::True);
}

TEST_CASE("Fleiss kappa: perfect agreement is exactly 1") {
    const CountMatrix m{{3, 0}, {0, 3}, {3, 0}, {0, 3}};
    CHECK(fleiss_kappa(m, 3).value() == 1.0);
    // Everyone always picks one category: expected agreement 1, kappa undefined.
    CHECK_FALSE(fleiss_kappa({{3, 0}, {3, 0}}, 3).has_value());
}

TEST_CASE("Fleiss kappa matches the pairwise-agreement oracle") {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 2 + rng.index(4);
        const std::size_t n = 2 + rng.index(5);
        const std::size_t items = 2 + rng.index(40);
        std::vector<std::vector<std::size_t>> ratings(items);
        for (auto& item : ratings) {
            for (std::size_t r = 0; r < n; ++r) item.push_back(rng.index(k));
        }
        const auto got = fleiss_kappa(testing::count_matrix(ratings, k), n);
        if (!got) continue;
        REQUIRE(std::abs(*got - testing::fleiss_kappa_oracle(ratings, k)) <= 1e-9);
    }
}

TEST_CASE("Fleiss kappa: textbook example") {
    // Ten items, 14 raters, 5 categories; published value 0.210.
    const CountMatrix m{{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
                        {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
    CHECK(fleiss_kappa(m, 14).value() == Catch::Approx(0.20993).margin(5e-5));
    CHECK_THROWS_AS(fleiss_kappa({{1, 1}, {2, 1}}, 2), ValidationError);
}

TEST_CASE("F2 quality score") {
    const std::set<Mark> ref{{"s1", "a"}, {"s2", "a"}, {"s3", "b"}, {"s4", "c"}};
    // Precision 1, recall 1/2: F2 = 5 * 0.5 / (4 + 0.5) = 55.555...
    const auto q = quality_score({{"s1", "a"}, {"s2", "a"}}, ref);
    CHECK(std::abs(q.f_beta - 500.0 / 9.0) <= 1e-9);
    CHECK(std::round(q.f_beta * 100.0) / 100.0 == 55.56);
    CHECK_FALSE(passes_screening(q));
    CHECK(rejects_batch(q));
    CHECK(quality_score(ref, ref).f_beta == 100.0);
    CHECK(passes_screening(quality_score(ref, ref)));
    CHECK(quality_score({}, ref).f_beta == 0.0);
    const auto at_60 = QualityScore{60.0};
    CHECK_FALSE(rejects_batch(at_60));
}

TEST_CASE("annotation TSV collapses per-symptom status") {
    const auto recs = parse_annotations(
        "sentence_id\tannotator_id\tsymptom_id\trelevant\tstatus\n"
        "s1\ta\tx\t1\tT\n"
        "s1\ta\ty\t1\tU\n"
        "s1\tb\tx\t0\t\n"
        "s1\tb\ty\t0\n");
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].status == Status::Uncertain);
    CHECK_FALSE(recs[1].status.has_value());
    CHECK_THROWS_AS(parse_annotations("s1\ta\tx\t2\tT\n"), ParseError);
    CHECK_THROWS_AS(parse_annotations("s1\ta\tx\t1\tmaybe\n"), ParseError);
}

TEST_CASE("gold JSON round trip") {
    GoldLabel g{"s1", {"x"}, {"x", "y"}, 1.0 / 3.0, true, 3};
    nlohmann::json j;
    j["s1"] = to_json(g);
    const auto back = gold_from_json(j).at("s1");
    CHECK(back.relevant == g.relevant);
    CHECK(back.observed == g.observed);
    CHECK(back.status_q == g.status_q);
    j["s1"]["relevant"] = {"z"};
    CHECK_THROWS_AS(gold_from_json(j), ValidationError);
}
