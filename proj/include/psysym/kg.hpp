#pragma once

// Bipartite disease <-> symptom knowledge graph.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"

namespace psysym {

enum class DescriptionSource { manual, questionnaire, post };

inline std::string to_string(DescriptionSource s) {
    switch (s) {
        case DescriptionSource::manual: return "manual";
        case DescriptionSource::questionnaire: return "questionnaire";
        case DescriptionSource::post: return "post";
    }
    return "manual";
}

inline DescriptionSource parse_source(const std::string& s) {
    if (s == "manual") return DescriptionSource::manual;
    if (s == "questionnaire") return DescriptionSource::questionnaire;
    if (s == "post") return DescriptionSource::post;
    throw ParseError("unknown sub-symptom source '" + s + "'");
}

struct SubSymptom {
    std::string text;
    DescriptionSource source = DescriptionSource::manual;
    bool operator==(const SubSymptom&) const = default;
};

struct Symptom {
    std::string id;
    std::string name;
    std::vector<SubSymptom> sub_symptoms;
    bool operator==(const Symptom&) const = default;
};

struct Disease {
    std::string id;
    std::string name;
    bool operator==(const Disease&) const = default;
};

using Edge = std::pair<std::string, std::string>;  // (disease id, symptom id)

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Validates every invariant; throws ValidationError naming the offender.
    static KnowledgeGraph build(std::vector<Disease> diseases, std::vector<Symptom> symptoms,
                                const std::vector<Edge>& edges) {
        KnowledgeGraph kg;
        kg.diseases_ = std::move(diseases);
        kg.symptoms_ = std::move(symptoms);

        for (std::size_t i = 0; i < kg.diseases_.size(); ++i) {
            const auto& d = kg.diseases_[i];
            if (d.id.empty()) throw ValidationError("disease with empty id");
            if (!kg.disease_index_.emplace(d.id, i).second) {
                throw ValidationError("duplicate disease id '" + d.id + "'");
            }
        }
        std::map<std::string, std::string> slug_owner;
        for (std::size_t i = 0; i < kg.symptoms_.size(); ++i) {
            const auto& s = kg.symptoms_[i];
            if (s.id.empty()) throw ValidationError("symptom with empty id");
            const std::string slug = slugify(s.name);
            if (s.id != slug) {
                throw ValidationError("symptom id '" + s.id + "' is not the slug of its name ('" +
                                      slug + "')");
            }
            if (kg.disease_index_.count(s.id)) {
                throw ValidationError("id '" + s.id + "' used for both a disease and a symptom");
            }
            if (!slug_owner.emplace(slug, s.name).second) {
                throw ValidationError("symptom slug collision on '" + slug + "'");
            }
            kg.symptom_index_.emplace(s.id, i);
            if (s.sub_symptoms.empty()) {
                throw ValidationError("symptom '" + s.id + "' has no sub-symptoms");
            }
            for (const auto& sub : s.sub_symptoms) {
                if (trim(sub.text).empty()) {
                    throw ValidationError("symptom '" + s.id + "' has an empty sub-symptom text");
                }
            }
        }
        for (const auto& [d, s] : edges) {
            if (!kg.disease_index_.count(d)) {
                if (kg.symptom_index_.count(d)) {
                    throw ValidationError("non-bipartite edge (" + d + ", " + s +
                                          "): first endpoint is a symptom");
                }
                throw ValidationError("dangling edge (" + d + ", " + s + "): unknown disease '" +
                                      d + "'");
            }
            if (!kg.symptom_index_.count(s)) {
                if (kg.disease_index_.count(s)) {
                    throw ValidationError("non-bipartite edge (" + d + ", " + s +
                                          "): second endpoint is a disease");
                }
                throw ValidationError("dangling edge (" + d + ", " + s + "): unknown symptom '" +
                                      s + "'");
            }
            if (!kg.edges_.emplace(d, s).second) {
                throw ValidationError("duplicate edge (" + d + ", " + s + ")");
            }
            kg.by_disease_[d].insert(s);
            kg.by_symptom_[s].insert(d);
        }
        for (const auto& d : kg.diseases_) {
            if (!kg.by_disease_.count(d.id)) {
                throw ValidationError("disease '" + d.id + "' has no incident edge");
            }
        }
        for (const auto& s : kg.symptoms_) {
            if (!kg.by_symptom_.count(s.id)) {
                throw ValidationError("symptom '" + s.id + "' has no incident edge");
            }
        }
        return kg;
    }

    const std::vector<Disease>& diseases() const { return diseases_; }
    const std::vector<Symptom>& symptoms() const { return symptoms_; }
    const std::set<Edge>& edges() const { return edges_; }

    bool has_disease(const std::string& id) const { return disease_index_.count(id) > 0; }
    bool has_symptom(const std::string& id) const { return symptom_index_.count(id) > 0; }

    const Disease& disease(const std::string& id) const {
        auto it = disease_index_.find(id);
        if (it == disease_index_.end()) throw Error("unknown disease id '" + id + "'");
        return diseases_[it->second];
    }

    const Symptom& symptom(const std::string& id) const {
        return symptoms_[symptom_index(id)];
    }

    // Position of the symptom in symptoms(); the column order of all per-symptom vectors.
    std::size_t symptom_index(const std::string& id) const {
        auto it = symptom_index_.find(id);
        if (it == symptom_index_.end()) throw Error("unknown symptom id '" + id + "'");
        return it->second;
    }

    std::vector<std::string> symptom_ids() const {
        std::vector<std::string> ids;
        for (const auto& s : symptoms_) ids.push_back(s.id);
        return ids;
    }

    std::set<std::string> typical_symptoms(const std::string& disease_id) const {
        if (!has_disease(disease_id)) throw Error("unknown disease id '" + disease_id + "'");
        return by_disease_.at(disease_id);
    }

    std::set<std::string> diseases_of(const std::string& symptom_id) const {
        if (!has_symptom(symptom_id)) throw Error("unknown symptom id '" + symptom_id + "'");
        return by_symptom_.at(symptom_id);
    }

    bool operator==(const KnowledgeGraph& o) const {
        return diseases_ == o.diseases_ && symptoms_ == o.symptoms_ && edges_ == o.edges_;
    }

private:
    std::vector<Disease> diseases_;
    std::vector<Symptom> symptoms_;
    std::set<Edge> edges_;
    std::map<std::string, std::size_t> disease_index_;
    std::map<std::string, std::size_t> symptom_index_;
    std::map<std::string, std::set<std::string>> by_disease_;
    std::map<std::string, std::set<std::string>> by_symptom_;
};

inline KnowledgeGraph kg_from_json(const nlohmann::json& j) {
    try {
        std::vector<Disease> diseases;
        for (const auto& d : j.at("diseases")) {
            diseases.push_back({d.at("id").get<std::string>(), d.at("name").get<std::string>()});
        }
        std::vector<Symptom> symptoms;
        for (const auto& s : j.at("symptoms")) {
            Symptom sym{s.at("id").get<std::string>(), s.at("name").get<std::string>(), {}};
            for (const auto& sub : s.at("sub_symptoms")) {
                sym.sub_symptoms.push_back({sub.at("text").get<std::string>(),
                                            parse_source(sub.at("source").get<std::string>())});
            }
            symptoms.push_back(std::move(sym));
        }
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw ParseError("edge must be [disease, symptom]");
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
        return KnowledgeGraph::build(std::move(diseases), std::move(symptoms), edges);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed KG: ") + ex.what());
    }
}

inline nlohmann::json to_json(const KnowledgeGraph& kg) {
    nlohmann::json j;
    j["diseases"] = nlohmann::json::array();
    for (const auto& d : kg.diseases()) j["diseases"].push_back({{"id", d.id}, {"name", d.name}});
    j["symptoms"] = nlohmann::json::array();
    for (const auto& s : kg.symptoms()) {
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& sub : s.sub_symptoms) {
            subs.push_back({{"text", sub.text}, {"source", to_string(sub.source)}});
        }
        j["symptoms"].push_back({{"id", s.id}, {"name", s.name}, {"sub_symptoms", subs}});
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& [d, s] : kg.edges()) j["edges"].push_back({d, s});
    return j;
}

inline KnowledgeGraph parse_kg(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("KG is not valid JSON: ") + ex.what());
    }
    return kg_from_json(j);
}

inline KnowledgeGraph load_kg(const std::string& path) { return parse_kg(read_file(path)); }

inline std::string serialize_kg(const KnowledgeGraph& kg) { return to_json(kg).dump(2) + "\n"; }

inline void save_kg(const KnowledgeGraph& kg, const std::string& path) {
    write_file(path, serialize_kg(kg));
}

}  // namespace psysym
