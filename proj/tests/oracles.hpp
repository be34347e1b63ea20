#pragma once

// Slow, obviously-correct reimplementations used to check the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "psysym/psysym.hpp"

namespace psysym::testing {

// Sort every sentence by score (stable, so earlier sentences win ties) and
// keep the first `capacity` per typical symptom. Scores come from the same
// relevance function so only the selection logic is under test.
inline std::set<std::string> brute_force_candidates(const std::vector<EmbeddedSentence>& sentences,
                                                    const KnowledgeGraph& kg, const std::string& disease,
                                                    const EmbeddingStore& store, std::size_t capacity) {
    std::set<std::string> out;
    for (const auto& sid : kg.typical_symptoms(disease)) {
        const auto& s = kg.symptom(sid);
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            const double best = symptom_relevance(sentences[i].vec, s, store).score;
            scored.emplace_back(best, i);
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; i < std::min(capacity, scored.size()); ++i) out.insert(sentences[scored[i].second].id);
    }
    return out;
}

struct CandidateFixture {
    KnowledgeGraph kg;
    EmbeddingStore store;
    std::vector<EmbeddedSentence> sentences;
    std::string disease;
};

// Random KG and embeddings. A share of sentences repeat earlier vectors so that
// score ties at the queue boundary are common.
inline CandidateFixture random_candidate_fixture(std::uint64_t seed, std::size_t max_sentences = 1000) {
    Rng rng(seed);
    const std::size_t dim = 8 + rng.index(9);
    const std::size_t n_sym = 2 + rng.index(6);
    const std::size_t n_dis = 1 + rng.index(std::min<std::size_t>(3, n_sym));
    std::vector<Disease> diseases;
    for (std::size_t d = 0; d < n_dis; ++d) diseases.push_back({"d" + std::to_string(d), "D" + std::to_string(d)});
    std::vector<Symptom> symptoms;
    std::vector<Edge> edges;
    for (std::size_t s = 0; s < n_sym; ++s) {
        Symptom sym{"s" + std::to_string(s), "S" + std::to_string(s), {}};
        const std::size_t subs = 1 + rng.index(3);
        for (std::size_t k = 0; k < subs; ++k) sym.sub_symptoms.push_back({"t" + std::to_string(k), DescriptionSource::manual});
        symptoms.push_back(sym);
        edges.emplace_back(diseases[s % n_dis].id, sym.id);
        if (rng.bernoulli(0.3)) {
            const auto other = diseases[rng.index(n_dis)].id;
            if (other != diseases[s % n_dis].id) edges.emplace_back(other, sym.id);
        }
    }
    CandidateFixture f;
    f.kg = KnowledgeGraph::build(diseases, symptoms, edges);
    auto random_unit = [&] {
        Vector v(dim);
        for (auto& x : v) x = rng.normal();
        return v;
    };
    for (const auto& s : f.kg.symptoms()) {
        for (std::size_t k = 0; k < s.sub_symptoms.size(); ++k) f.store.add(sub_symptom_key(s.id, k), random_unit());
    }
    const std::size_t n = 1 + rng.index(max_sentences);
    for (std::size_t i = 0; i < n; ++i) {
        Vector v = (i > 0 && rng.bernoulli(0.2)) ? f.sentences[rng.index(i)].vec : random_unit();
        f.sentences.push_back({"x" + std::to_string(i), std::move(v)});
    }
    f.disease = f.kg.diseases()[rng.index(n_dis)].id;
    return f;
}

// Mean agreement over ordered rater pairs, enumerated from per-rater labels.
inline double fleiss_kappa_oracle(const std::vector<std::vector<std::size_t>>& ratings, std::size_t categories) {
    const double N = static_cast<double>(ratings.size());
    std::vector<double> p(categories, 0.0);
    double p_bar = 0.0;
    double total = 0.0;
    for (const auto& item : ratings) {
        double agree = 0.0, pairs = 0.0;
        for (std::size_t a = 0; a < item.size(); ++a) {
            for (std::size_t b = 0; b < item.size(); ++b) {
                if (a == b) continue;
                pairs += 1.0;
                agree += item[a] == item[b];
            }
            p[item[a]] += 1.0;
            total += 1.0;
        }
        p_bar += agree / pairs;
    }
    p_bar /= N;
    double p_e = 0.0;
    for (double c : p) p_e += (c / total) * (c / total);
    return (p_bar - p_e) / (1.0 - p_e);
}

inline CountMatrix count_matrix(const std::vector<std::vector<std::size_t>>& ratings, std::size_t categories) {
    CountMatrix m;
    for (const auto& item : ratings) {
        std::vector<std::size_t> row(categories, 0);
        for (auto c : item) ++row[c];
        m.push_back(row);
    }
    return m;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double good = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1.0;
            good += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
        }
    }
    return good / pairs;
}

// Constant-mean predictor error and the expected error of one annotator whose
// binary vote is Uncertain with probability q, by enumerating both votes.
inline MaeBounds mae_bounds_oracle(const std::vector<double>& q) {
    double mean = 0.0;
    for (double x : q) mean += x;
    mean /= static_cast<double>(q.size());
    MaeBounds b;
    for (double x : q) {
        b.baseline += std::abs(x - mean);
        for (int vote = 0; vote <= 1; ++vote) {
            const double pv = vote ? x : 1.0 - x;
            b.single_annotator += pv * std::abs(static_cast<double>(vote) - x);
        }
    }
    b.baseline /= static_cast<double>(q.size());
    b.single_annotator /= static_cast<double>(q.size());
    return b;
}

}  // namespace psysym::testing
