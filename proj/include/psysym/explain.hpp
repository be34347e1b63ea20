#pragma once

// KG-grounded symptom explanations for a user's diagnosis, and label audits.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/kg.hpp"
#include "psysym/mdd.hpp"

namespace psysym {

inline constexpr double kPresenceThreshold = 0.5;

struct Binarized {
    std::vector<bool> present;                     // per symptom
    std::vector<std::vector<std::size_t>> support; // per symptom: post indices crossing the threshold
};

inline Binarized binarize(const Matrix& f_symp, std::size_t symptoms, double threshold = kPresenceThreshold) {
    Binarized b{std::vector<bool>(symptoms, false), std::vector<std::vector<std::size_t>>(symptoms)};
    for (std::size_t t = 0; t < f_symp.size(); ++t) {
        if (f_symp[t].size() != symptoms) throw Error("binarize: row width mismatch");
        for (std::size_t s = 0; s < symptoms; ++s) {
            if (f_symp[t][s] >= threshold) {
                b.present[s] = true;
                b.support[s].push_back(t);
            }
        }
    }
    return b;
}

struct EvidencePost {
    std::string post_id;
    double value = 0.0;
    std::string excerpt;
};

struct SymptomEvidence {
    std::string symptom_id;
    bool present = false;
    std::vector<EvidencePost> evidence;  // sorted by value, highest first
};

struct Explanation {
    std::string user_id;
    std::string disease_id;
    std::vector<SymptomEvidence> typical;
    double coverage = 0.0;
};

struct ExplainConfig {
    double threshold = kPresenceThreshold;
    std::size_t excerpt_chars = 80;
    std::function<std::string(const std::string&)> redact;  // applied before truncation
};

// Truncates to at most max_chars code points, appending "..." when cut.
inline std::string truncate_utf8(const std::string& s, std::size_t max_chars) {
    std::size_t chars = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
        if (chars == max_chars) return trim(s.substr(0, i)) + "...";
        ++chars;
    }
    return s;
}

inline std::size_t display_width(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

// `seq` must come from extract_features over `user`, with columns ordered as `symptom_ids`.
inline Explanation explain_user(const UserHistory& user, const FeatureSequence& seq, const KnowledgeGraph& kg,
                                const std::string& disease, const std::vector<std::string>& symptom_ids,
                                const ExplainConfig& cfg = {}) {
    if (!kg.has_disease(disease)) throw Error("unknown disease '" + disease + "'");
    if (seq.size() != user.posts.size()) throw Error("explain_user: feature sequence does not match history");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < symptom_ids.size(); ++i) col[symptom_ids[i]] = i;

    const auto b = binarize(feature_matrix(seq), symptom_ids.size(), cfg.threshold);
    Explanation ex{user.user_id, disease, {}, 0.0};
    std::size_t covered = 0;
    const auto typical = kg.typical_symptoms(disease);
    for (const auto& symptom : kg.symptoms()) {
        const auto& sid = symptom.id;
        if (!typical.count(sid)) continue;
        auto it = col.find(sid);
        if (it == col.end()) throw Error("symptom '" + sid + "' missing from the feature columns");
        SymptomEvidence ev{sid, b.present[it->second], {}};
        for (auto t : b.support[it->second]) {
            std::string text = user.posts[t].text;
            if (cfg.redact) text = cfg.redact(text);
            ev.evidence.push_back({user.posts[t].id, seq[t].f_symp[it->second], truncate_utf8(text, cfg.excerpt_chars)});
        }
        std::stable_sort(ev.evidence.begin(), ev.evidence.end(),
                         [](const EvidencePost& a, const EvidencePost& c) { return a.value > c.value; });
        covered += ev.present;
        ex.typical.push_back(std::move(ev));
    }
    ex.coverage = typical.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(typical.size());
    return ex;
}

// Re-checks that every cited post exists and still crosses the threshold.
inline bool verify_explanation(const Explanation& ex, const UserHistory& user, const FeatureSequence& seq,
                               const std::vector<std::string>& symptom_ids, bool reweighting = true,
                               double threshold = kPresenceThreshold) {
    std::map<std::string, std::size_t> post_index;
    for (std::size_t t = 0; t < user.posts.size(); ++t) post_index[user.posts[t].id] = t;
    for (const auto& ev : ex.typical) {
        const auto col = std::find(symptom_ids.begin(), symptom_ids.end(), ev.symptom_id);
        if (col == symptom_ids.end()) return false;
        const auto s = static_cast<std::size_t>(col - symptom_ids.begin());
        if (ev.present != !ev.evidence.empty()) return false;
        for (const auto& e : ev.evidence) {
            auto it = post_index.find(e.post_id);
            if (it == post_index.end()) return false;
            const auto& pf = seq[it->second];
            const double v = reweighting ? reweight(pf.p_rel, pf.w_status, pf.w_subj)[s] : pf.p_rel[s];
            if (v < threshold || v != e.value) return false;
        }
    }
    return true;
}

inline nlohmann::json to_json(const Explanation& ex) {
    nlohmann::json typical = nlohmann::json::array();
    for (const auto& ev : ex.typical) {
        nlohmann::json posts = nlohmann::json::array();
        for (const auto& e : ev.evidence) posts.push_back({{"post_id", e.post_id}, {"f_symp", e.value}, {"excerpt", e.excerpt}});
        typical.push_back({{"symptom", ev.symptom_id}, {"present", ev.present}, {"evidence", posts}});
    }
    return {{"user_id", ex.user_id}, {"disease", ex.disease_id}, {"coverage", ex.coverage}, {"typical", typical}};
}

// Two-column post/symptom table followed by the typical-symptom checklist.
inline std::string render_explanation(const Explanation& ex, const KnowledgeGraph& kg) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& ev : ex.typical) {
        for (const auto& e : ev.evidence) rows.emplace_back(e.excerpt, kg.symptom(ev.symptom_id).name);
    }
    std::size_t w1 = display_width("Post"), w2 = display_width("Symptom");
    for (const auto& [p, s] : rows) {
        w1 = std::max(w1, display_width(p));
        w2 = std::max(w2, display_width(s));
    }
    std::string footer = "Typical " + kg.disease(ex.disease_id).name + " symptoms:";
    for (const auto& ev : ex.typical) {
        footer += " " + kg.symptom(ev.symptom_id).name + (ev.present ? " ✓" : " ✗");
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - display_width(s), ' '); };
    const std::size_t width = std::max(w1 + 3 + w2, display_width(footer));
    const std::string rule(width, '-');
    std::string out = "User: " + ex.user_id + "\n" + rule + "\n";
    out += pad("Post", w1) + " | " + "Symptom" + "\n" + rule + "\n";
    for (const auto& [p, s] : rows) out += pad(p, w1) + " | " + s + "\n";
    out += rule + "\n" + footer + "\n";
    out += "Coverage: " + format_double(ex.coverage) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Label audit

enum class AuditKind { suspect_false_positive, suspect_false_negative };

inline std::string to_string(AuditKind k) {
    return k == AuditKind::suspect_false_positive ? "suspect_false_positive" : "suspect_false_negative";
}

struct LabelAuditFlag {
    std::string user_id;
    std::string disease_id;
    AuditKind kind = AuditKind::suspect_false_positive;
    double coverage = 0.0;
    std::optional<double> model_probability;
};

struct AuditConfig {
    double fp_coverage_max = 0.2;
    double fn_coverage_min = 0.6;
    double fn_probability_min = 0.5;
    ExplainConfig explain;
};

// Diseases without a detector in `detectors` can only raise false-positive flags.
inline std::vector<LabelAuditFlag> audit_labels(const UserHistory& user, const FeatureSequence& seq,
                                                const KnowledgeGraph& kg, const std::vector<std::string>& symptom_ids,
                                                const std::map<std::string, MddModel>& detectors,
                                                const AuditConfig& cfg = {}) {
    std::vector<LabelAuditFlag> flags;
    const auto x = feature_matrix(seq);
    for (const auto& d : kg.diseases()) {
        const auto ex = explain_user(user, seq, kg, d.id, symptom_ids, cfg.explain);
        std::optional<double> prob;
        auto it = detectors.find(d.id);
        if (it != detectors.end() && !x.empty()) prob = it->second.predict(x);
        if (user.has(d.id)) {
            if (ex.coverage <= cfg.fp_coverage_max) {
                flags.push_back({user.user_id, d.id, AuditKind::suspect_false_positive, ex.coverage, prob});
            }
        } else if (ex.coverage >= cfg.fn_coverage_min && prob && *prob >= cfg.fn_probability_min) {
            flags.push_back({user.user_id, d.id, AuditKind::suspect_false_negative, ex.coverage, prob});
        }
    }
    return flags;
}

inline nlohmann::json to_json(const LabelAuditFlag& f) {
    return {{"user_id", f.user_id},
            {"disease", f.disease_id},
            {"kind", to_string(f.kind)},
            {"coverage", f.coverage},
            {"model_probability", f.model_probability ? nlohmann::json(*f.model_probability) : nlohmann::json(nullptr)}};
}

}  // namespace psysym
