#include <catch_amalgamated.hpp>

#include "psysym/explain.hpp"

using namespace psysym;

namespace {

KnowledgeGraph ocd_kg() {
    auto sym = [](const std::string& name) {
        return Symptom{slugify(name), name, {{name, DescriptionSource::manual}}};
    };
    return KnowledgeGraph::build({{"ocd", "OCD"}, {"depression", "Depression"}},
                                 {sym("Obsession"), sym("Compulsion"), sym("Anxious Mood"), sym("Depressed Mood")},
                                 {{"ocd", "obsession"}, {"ocd", "compulsion"}, {"ocd", "anxious_mood"},
                                  {"depression", "anxious_mood"}, {"depression", "depressed_mood"}});
}

PostFeatures post(const std::string& id, std::vector<double> p) {
    PostFeatures pf;
    pf.post_id = id;
    pf.p_rel = std::move(p);
    pf.w_status = 1.0;
    pf.w_subj = kFirstPersonWeight;
    pf.f_symp = reweight(pf.p_rel, pf.w_status, pf.w_subj);
    return pf;
}

}  // namespace

TEST_CASE("binarize marks symptoms crossing the threshold") {
    const auto b = binarize({{0.1, 0.5}, {0.7, 0.2}}, 2);
    CHECK(b.present == std::vector<bool>{true, true});
    CHECK(b.support[0] == std::vector<std::size_t>{1});
    CHECK(b.support[1] == std::vector<std::size_t>{0});
}

TEST_CASE("explanation cites only posts over the threshold") {
    const auto kg = ocd_kg();
    const std::vector<std::string> cols = kg.symptom_ids();  // obsession, compulsion, anxious_mood, depressed_mood
    const auto user = make_history("u7",
                                   {{"a", 1, "I keep checking the stove, I cannot stop"},
                                    {"b", 2, "The thoughts will not leave me alone"},
                                    {"c", 3, "lunch was fine"}},
                                   {{"ocd", true}});
    FeatureSequence seq{post("a", {0.2, 0.95, 0.6, 0.0}), post("b", {0.9, 0.1, 0.7, 0.0}), post("c", {0.1, 0.1, 0.1, 0.1})};
    const auto ex = explain_user(user, seq, kg, "ocd", cols);
    REQUIRE(ex.typical.size() == 3);
    CHECK(ex.typical[0].symptom_id == "obsession");
    CHECK(ex.typical[0].evidence.size() == 1);
    CHECK(ex.typical[0].evidence[0].post_id == "b");
    CHECK(ex.typical[2].symptom_id == "anxious_mood");
    REQUIRE(ex.typical[2].evidence.size() == 2);
    CHECK(ex.typical[2].evidence[0].post_id == "b");  // highest value first
    CHECK(ex.coverage == 1.0);
    CHECK(verify_explanation(ex, user, seq, cols));

    auto tampered = ex;
    tampered.typical[0].evidence[0].post_id = "c";
    CHECK_FALSE(verify_explanation(tampered, user, seq, cols));
}

TEST_CASE("rendered report layout") {
    const auto kg = ocd_kg();
    const auto cols = kg.symptom_ids();
    const auto user = make_history("u7", {{"a", 1, "I keep checking the stove"}, {"b", 2, "lunch was fine"}}, {});
    FeatureSequence seq{post("a", {0.9, 0.9, 0.0, 0.0}), post("b", {0.0, 0.0, 0.0, 0.0})};
    const auto text = render_explanation(explain_user(user, seq, kg, "ocd", cols), kg);
    CHECK(text.rfind("User: u7\n", 0) == 0);
    CHECK(text.find("I keep checking the stove | Obsession\n") != std::string::npos);
    CHECK(text.find("Typical OCD symptoms: Obsession ✓ Compulsion ✓ Anxious Mood ✗\n") != std::string::npos);
    CHECK(text.find("Coverage: 0.6666666666666666\n") != std::string::npos);
}

TEST_CASE("excerpts are redacted then truncated on code points") {
    CHECK(truncate_utf8("héllo wörld", 5) == "héllo...");
    CHECK(truncate_utf8("short", 80) == "short");
    CHECK(display_width("✓✗ab") == 4);
    const auto kg = ocd_kg();
    const auto user = make_history("u", {{"a", 1, "ask u/someone about the stove checking ritual"}}, {});
    FeatureSequence seq{post("a", {0.9, 0.0, 0.0, 0.0})};
    ExplainConfig cfg;
    cfg.excerpt_chars = 11;
    cfg.redact = [](const std::string& s) {
        auto out = s;
        const auto p = out.find("u/someone");
        if (p != std::string::npos) out.replace(p, 9, "[user]");
        return out;
    };
    const auto ex = explain_user(user, seq, kg, "ocd", kg.symptom_ids(), cfg);
    CHECK(ex.typical[0].evidence[0].excerpt == "ask [user]...");
}

TEST_CASE("label audit flags") {
    const auto kg = ocd_kg();
    const auto cols = kg.symptom_ids();
    // Labeled with depression, but only OCD symptoms appear.
    const auto user = make_history("u", {{"a", 1, "checking again"}}, {{"depression", true}, {"ocd", false}});
    FeatureSequence seq{post("a", {0.9, 0.9, 0.0, 0.0})};
    MddModel always(MddVariant::meanpool, 4, {}, 0);
    always.theta() = {0.0, 0.0, 0.0, 0.0, 5.0};
    const auto flags = audit_labels(user, seq, kg, cols, {{"ocd", always}});
    REQUIRE(flags.size() == 2);
    CHECK(flags[0].disease_id == "ocd");
    CHECK(flags[0].kind == AuditKind::suspect_false_negative);
    CHECK(flags[1].disease_id == "depression");
    CHECK(flags[1].kind == AuditKind::suspect_false_positive);
    CHECK_FALSE(flags[1].model_probability.has_value());
}
