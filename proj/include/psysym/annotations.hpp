#pragma once

// Multi-annotator labels: merging into gold labels, Fleiss's kappa and the
// F-beta annotator quality score.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"

namespace psysym {

enum class Status { True, Uncertain };

struct AnnotationRecord {
    std::string sentence_id;
    std::string annotator_id;
    std::map<std::string, bool> relevance;  // over the queue's typical symptoms
    std::optional<Status> status;           // present iff some relevance is true

    bool any_relevant() const {
        for (const auto& [s, r] : relevance) {
            if (r) return true;
        }
        return false;
    }
};

struct GoldLabel {
    std::string sentence_id;
    std::set<std::string> relevant;
    std::set<std::string> observed;  // symptoms outside this set are missing, not negative
    double status_q = 0.0;           // fraction of status votes that are Uncertain
    bool status_applicable = false;
    std::size_t n_annotators = 0;
};

inline GoldLabel merge_relevance(const std::vector<AnnotationRecord>& records) {
    if (records.empty()) throw Error("merge_relevance: no records");
    GoldLabel g;
    g.sentence_id = records.front().sentence_id;
    g.n_annotators = records.size();
    for (const auto& [s, r] : records.front().relevance) g.observed.insert(s);
    for (const auto& rec : records) {
        std::set<std::string> keys;
        for (const auto& [s, r] : rec.relevance) {
            keys.insert(s);
            if (r) g.relevant.insert(s);
        }
        if (keys != g.observed) {
            throw ValidationError("annotations of sentence '" + g.sentence_id +
                                  "' disagree on the observed symptom set (annotator '" +
                                  rec.annotator_id + "')");
        }
    }
    return g;
}

struct StatusMerge {
    double q = 0.0;
    bool applicable = false;
    std::size_t votes = 0;
};

inline StatusMerge merge_status(const std::vector<AnnotationRecord>& records) {
    std::size_t votes = 0, uncertain = 0;
    for (const auto& r : records) {
        if (!r.status) continue;
        ++votes;
        uncertain += *r.status == Status::Uncertain;
    }
    if (votes == 0) return {};
    return {static_cast<double>(uncertain) / static_cast<double>(votes), true, votes};
}

// Sentence-level status is Uncertain when any relevant symptom is.
inline Status sentence_status_from_symptom_status(const std::map<std::string, Status>& per_symptom) {
    if (per_symptom.empty()) throw Error("sentence_status_from_symptom_status: empty input");
    for (const auto& [s, st] : per_symptom) {
        if (st == Status::Uncertain) return Status::Uncertain;
    }
    return Status::True;
}

inline GoldLabel merge_gold(const std::vector<AnnotationRecord>& records) {
    GoldLabel g = merge_relevance(records);
    const auto st = merge_status(records);
    g.status_q = st.q;
    // A partial panel would put q outside {k / n_annotators}.
    g.status_applicable = st.applicable && !g.relevant.empty() && st.votes == records.size();
    return g;
}

// ---------------------------------------------------------------------------
// Agreement

using CountMatrix = std::vector<std::vector<std::size_t>>;  // items x categories

// nullopt when expected agreement is 1 (kappa undefined).
inline std::optional<double> fleiss_kappa(const CountMatrix& m, std::size_t n) {
    if (m.size() < 2) throw Error("fleiss_kappa: need at least 2 items");
    if (n < 2) throw Error("fleiss_kappa: need at least 2 raters per item");
    const std::size_t k = m.front().size();
    std::vector<double> col(k, 0.0);
    double p_bar = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].size() != k) throw ValidationError("fleiss_kappa: ragged row " + std::to_string(i));
        std::size_t sum = 0;
        double sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sum += m[i][j];
            sq += static_cast<double>(m[i][j]) * static_cast<double>(m[i][j]);
            col[j] += static_cast<double>(m[i][j]);
        }
        if (sum != n) {
            throw ValidationError("fleiss_kappa: row " + std::to_string(i) + " sums to " +
                                  std::to_string(sum) + ", expected " + std::to_string(n));
        }
        p_bar += (sq - static_cast<double>(n)) / (static_cast<double>(n) * static_cast<double>(n - 1));
    }
    const double items = static_cast<double>(m.size());
    p_bar /= items;
    double p_e = 0.0;
    for (double c : col) {
        const double p = c / (items * static_cast<double>(n));
        p_e += p * p;
    }
    if (p_e >= 1.0) return std::nullopt;
    if (p_bar == 1.0) return 1.0;
    return (p_bar - p_e) / (1.0 - p_e);
}

// ---------------------------------------------------------------------------
// Annotator quality

struct QualityScore {
    double f_beta = 0.0;  // 0..100
    double beta = 2.0;
};

inline constexpr double kScreeningPassScore = 75.0;
inline constexpr double kBatchRejectScore = 60.0;

inline bool passes_screening(const QualityScore& q) { return q.f_beta >= kScreeningPassScore; }
inline bool rejects_batch(const QualityScore& q) { return q.f_beta < kBatchRejectScore; }

using Mark = std::pair<std::string, std::string>;  // (sentence id, symptom id)

// Micro F-beta over symptom-level decisions, scaled to 0..100.
inline QualityScore quality_score(const std::set<Mark>& candidate, const std::set<Mark>& reference,
                                  double beta = 2.0) {
    if (!(beta > 0.0)) throw Error("quality_score: beta must be > 0");
    std::size_t tp = 0;
    for (const auto& m : candidate) tp += reference.count(m);
    const double p = candidate.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(candidate.size());
    const double r = reference.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(reference.size());
    const double b2 = beta * beta;
    const double denom = b2 * p + r;
    const double f = denom == 0.0 ? 0.0 : (1.0 + b2) * p * r / denom;
    return {100.0 * f, beta};
}

// ---------------------------------------------------------------------------
// IO
//
// Annotation TSV: sentence_id, annotator_id, symptom_id, relevant (0/1), status (T/U/empty).
// Status is given per relevant symptom and collapsed to sentence level.

inline std::vector<AnnotationRecord> parse_annotations(const std::string& text) {
    struct Partial {
        AnnotationRecord rec;
        std::map<std::string, Status> symptom_status;
    };
    std::map<std::pair<std::string, std::string>, Partial> grouped;
    std::vector<std::pair<std::string, std::string>> order;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() == 4) cols.emplace_back();
        if (cols.size() != 5) throw ParseError("annotation line " + std::to_string(line_no) + ": expected 5 columns");
        if (cols[0] == "sentence_id") continue;
        const auto key = std::make_pair(cols[0], cols[1]);
        auto [it, inserted] = grouped.try_emplace(key);
        if (inserted) {
            order.push_back(key);
            it->second.rec.sentence_id = cols[0];
            it->second.rec.annotator_id = cols[1];
        }
        const auto rel = trim(cols[3]);
        if (rel != "0" && rel != "1") throw ParseError("annotation line " + std::to_string(line_no) + ": relevant must be 0/1");
        it->second.rec.relevance[cols[2]] = rel == "1";
        const auto st = trim(cols[4]);
        if (st == "T") it->second.symptom_status[cols[2]] = Status::True;
        else if (st == "U") it->second.symptom_status[cols[2]] = Status::Uncertain;
        else if (!st.empty() && st != "-") throw ParseError("annotation line " + std::to_string(line_no) + ": bad status '" + st + "'");
    }
    std::vector<AnnotationRecord> out;
    for (const auto& key : order) {
        auto& p = grouped.at(key);
        std::map<std::string, Status> relevant_status;
        for (const auto& [s, st] : p.symptom_status) {
            if (p.rec.relevance.at(s)) relevant_status[s] = st;
        }
        if (!relevant_status.empty()) p.rec.status = sentence_status_from_symptom_status(relevant_status);
        else if (p.rec.any_relevant()) p.rec.status = Status::True;
        out.push_back(std::move(p.rec));
    }
    return out;
}

inline std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    return parse_annotations(read_file(path));
}

inline std::map<std::string, std::vector<AnnotationRecord>> group_by_sentence(
    const std::vector<AnnotationRecord>& records) {
    std::map<std::string, std::vector<AnnotationRecord>> out;
    for (const auto& r : records) out[r.sentence_id].push_back(r);
    return out;
}

inline nlohmann::json to_json(const GoldLabel& g) {
    return {{"relevant", g.relevant},
            {"observed", g.observed},
            {"status_q", g.status_q},
            {"status_applicable", g.status_applicable},
            {"n_annotators", g.n_annotators}};
}

inline std::map<std::string, GoldLabel> gold_from_json(const nlohmann::json& j) {
    std::map<std::string, GoldLabel> out;
    try {
        for (const auto& [id, v] : j.items()) {
            GoldLabel g;
            g.sentence_id = id;
            g.relevant = v.at("relevant").get<std::set<std::string>>();
            g.observed = v.at("observed").get<std::set<std::string>>();
            g.status_q = v.at("status_q").get<double>();
            g.status_applicable = v.value("status_applicable", !g.relevant.empty());
            g.n_annotators = v.value("n_annotators", std::size_t{3});
            for (const auto& s : g.relevant) {
                if (!g.observed.count(s)) throw ValidationError("gold '" + id + "': relevant symptom '" + s + "' not observed");
            }
            out.emplace(id, std::move(g));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed gold file: ") + ex.what());
    }
    return out;
}

}  // namespace psysym
