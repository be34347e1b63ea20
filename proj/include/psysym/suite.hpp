#pragma once

// End-to-end experiments on the synthetic world: relevance masking modes,
// status inference, embedding vs keyword retrieval, and detector signal
// recovery. Used by `psysym evaluate` and the acceptance runner.

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/classifier.hpp"
#include "psysym/corpus.hpp"
#include "psysym/embed.hpp"
#include "psysym/mdd.hpp"
#include "psysym/retrieval.hpp"
#include "psysym/synth.hpp"
#include "psysym/tfidf.hpp"

namespace psysym {

// Training defaults for the linear tier on the synthetic benchmark. The loss
// averages over symptoms, so each symptom's data term is scaled down by the
// symptom count while the penalty is not; a light penalty keeps the
// probabilities usable at the 0.5 cut.
inline TrainConfig suite_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = 2.0;
    cfg.epochs = 100;
    cfg.l2 = 1e-6;
    cfg.seed = seed;
    return cfg;
}

// ---------------------------------------------------------------------------
// Relevance

struct RelevanceRun {
    std::uint64_t seed = 0;
    std::map<MaskMode, RelevanceEval> eval;
    std::map<MaskMode, TrainReport> report;
};

struct RelevanceSplits {
    TfidfVectorizer vectorizer;
    RelevanceData train, validation;
    std::vector<SparseVector> test_features;
    LabelMask test_observed, test_truth;
};

inline RelevanceSplits relevance_splits(const RelevanceBenchmark& b) {
    RelevanceSplits s;
    s.vectorizer = fit_tfidf(b.texts(b.train));
    s.train = {s.vectorizer.transform_all(b.texts(b.train)), b.rows_of(b.observed, b.train), {}};
    s.validation = {s.vectorizer.transform_all(b.texts(b.validation)), b.rows_of(b.observed, b.validation), {}};
    s.test_features = s.vectorizer.transform_all(b.texts(b.test));
    s.test_observed = b.rows_of(b.observed, b.test);
    s.test_truth = b.rows_of(b.truth, b.test);
    return s;
}

// Test AUC is scored on the annotated (queue-observed) test labels, the same
// protocol a real annotated corpus allows.
inline RelevanceRun run_relevance(const SentenceKnobs& knobs, const TrainConfig& cfg, std::uint64_t seed,
                                  const std::vector<MaskMode>& modes = {MaskMode::naive_negative, MaskMode::loss_mask,
                                                                        MaskMode::label_enhance}) {
    const auto b = make_relevance_benchmark(knobs, seed);
    const auto s = relevance_splits(b);
    RelevanceRun run;
    run.seed = seed;
    for (auto mode : modes) {
        TrainReport rep;
        const auto model = train_relevance(s.train, &s.validation, s.vectorizer, b.symptom_ids, cfg, mode, &rep);
        run.eval[mode] = evaluate_relevance(model, s.test_features, s.test_observed);
        run.report[mode] = std::move(rep);
    }
    return run;
}

inline nlohmann::json to_json(const RelevanceRun& r) {
    nlohmann::json modes = nlohmann::json::object();
    for (const auto& [m, ev] : r.eval) {
        auto j = to_json(ev);
        const auto& rep = r.report.at(m);
        j["epochs_run"] = rep.epochs_run;
        j["skipped"] = rep.skipped;
        if (m == MaskMode::label_enhance) {
            j["enhanced_labels"] = rep.enhanced_labels;
            j["thresholds"] = rep.thresholds;
            j["achieved_tnr"] = rep.achieved_tnr;
        }
        modes[to_string(m)] = j;
    }
    return {{"seed", r.seed}, {"modes", modes}};
}

// ---------------------------------------------------------------------------
// Status

inline StatusData status_rows(const RelevanceBenchmark& b, const TfidfVectorizer& v,
                              const std::vector<std::size_t>& rows) {
    StatusData d;
    for (auto r : rows) {
        if (!b.gold[r].status_applicable) continue;
        d.features.push_back(v.transform(b.sentences[r].text));
        d.targets.push_back(b.gold[r].status_q);
    }
    return d;
}

struct StatusRun {
    std::uint64_t seed = 0;
    StatusEval eval;
    std::size_t train_size = 0, test_size = 0;
};

inline StatusRun run_status(const SentenceKnobs& knobs, const TrainConfig& cfg, std::uint64_t seed) {
    const auto b = make_relevance_benchmark(knobs, seed);
    const auto v = fit_tfidf(b.texts(b.train));
    const auto train = status_rows(b, v, b.train);
    const auto val = status_rows(b, v, b.validation);
    const auto test = status_rows(b, v, b.test);
    const auto model = train_status(train, &val, v, cfg);
    return {seed, evaluate_status(model, test), train.targets.size(), test.targets.size()};
}

inline nlohmann::json to_json(const StatusRun& r) {
    auto j = to_json(r.eval);
    j["seed"] = r.seed;
    j["train_size"] = r.train_size;
    j["test_size"] = r.test_size;
    return j;
}

// ---------------------------------------------------------------------------
// Retrieval

inline constexpr std::size_t kSuiteEmbeddingDim = 64;

inline EmbeddingStore sub_symptom_store(const KnowledgeGraph& kg, const ConceptEmbedder& emb) {
    EmbeddingStore store;
    for (const auto& s : kg.symptoms()) {
        for (std::size_t i = 0; i < s.sub_symptoms.size(); ++i) {
            store.add(sub_symptom_key(s.id, i), emb.embed(s.sub_symptoms[i].text));
        }
    }
    return store;
}

inline std::map<PairKey, double> embedding_scores(const RetrievalCorpus& c, const KnowledgeGraph& kg,
                                                  const ConceptEmbedder& emb, const EmbeddingStore& store) {
    std::map<PairKey, double> scores;
    for (const auto& [id, text] : c.sentences) {
        const auto v = emb.embed(text);
        for (const auto& s : kg.symptoms()) scores[{id, s.id}] = symptom_relevance(v, s, store).score;
    }
    return scores;
}

inline std::map<PairKey, double> lexicon_scores(const RetrievalCorpus& c, const SynthWorld& w) {
    std::map<PairKey, double> scores;
    for (const auto& s : w.kg.symptoms()) {
        const auto lex = w.lexicon(s.id);
        for (const auto& [id, text] : c.sentences) scores[{id, s.id}] = lex.matches(text) ? 1.0 : 0.0;
    }
    return scores;
}

struct RetrievalRun {
    std::uint64_t seed = 0;
    double threshold = 0.0;  // embedding cut, chosen on a separate calibration corpus
    RetrievalEval embedding, lexicon;
    std::size_t planted = 0, paraphrase_only = 0;
};

// Cosine cut on a 0.01 grid with the best macro F1 among cuts whose macro
// precision reaches `min_precision`.
inline double calibrate_threshold(const std::map<PairKey, double>& scores, const std::map<PairKey, bool>& gold,
                                  double min_precision) {
    double best_t = 1.0, best_f1 = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        const auto ev = evaluate_retrieval(scores, gold, t);
        if (ev.macro_precision < min_precision) continue;
        const double pr = ev.macro_precision + ev.macro_recall;
        const double f1 = pr > 0.0 ? 2.0 * ev.macro_precision * ev.macro_recall / pr : 0.0;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_t = t;
        }
    }
    return best_t;
}

inline RetrievalRun run_retrieval(const RetrievalKnobs& knobs, std::uint64_t seed, double min_precision = 0.4) {
    const auto& w = synth_world();
    const ConceptEmbedder emb(w.concept_table(), kSuiteEmbeddingDim, derive_seed(seed, "embedder"));
    const auto store = sub_symptom_store(w.kg, emb);
    const auto calib = make_retrieval_corpus(knobs, derive_seed(seed, "calibration"));
    const auto corpus = make_retrieval_corpus(knobs, seed);

    RetrievalRun run;
    run.seed = seed;
    run.planted = knobs.planted;
    run.paraphrase_only = corpus.paraphrase_only;
    run.lexicon = evaluate_retrieval(lexicon_scores(corpus, w), corpus.gold, 0.5);
    run.threshold = calibrate_threshold(embedding_scores(calib, w.kg, emb, store), calib.gold,
                                        std::max(min_precision, run.lexicon.macro_precision));
    run.embedding = evaluate_retrieval(embedding_scores(corpus, w.kg, emb, store), corpus.gold, run.threshold);
    return run;
}

inline nlohmann::json to_json(const RetrievalRun& r) {
    auto side = [](const RetrievalEval& e) {
        return nlohmann::json{{"macro_precision", e.macro_precision}, {"macro_recall", e.macro_recall}};
    };
    return {{"seed", r.seed},
            {"threshold", r.threshold},
            {"planted", r.planted},
            {"paraphrase_only", r.paraphrase_only},
            {"embedding", side(r.embedding)},
            {"lexicon", side(r.lexicon)}};
}

// ---------------------------------------------------------------------------
// Detectors

enum class FeatureControl { none, shuffled };

struct MddRun {
    std::uint64_t seed = 0;
    bool reweighting = true;
    FeatureControl control = FeatureControl::none;
    MddEval eval;
};

struct SymptomModels {
    RelevanceModel relevance;
    StatusModel status;
};

// Relevance (label enhancement) and status models trained on the seeded benchmark.
inline SymptomModels train_symptom_models(const SentenceKnobs& knobs, const TrainConfig& cfg, std::uint64_t seed) {
    const auto b = make_relevance_benchmark(knobs, seed);
    const auto s = relevance_splits(b);
    SymptomModels m;
    m.relevance = train_relevance(s.train, &s.validation, s.vectorizer, b.symptom_ids, cfg, MaskMode::label_enhance);
    const auto st_train = status_rows(b, s.vectorizer, b.train);
    const auto st_val = status_rows(b, s.vectorizer, b.validation);
    m.status = train_status(st_train, &st_val, s.vectorizer, cfg);
    return m;
}

inline std::map<std::string, Matrix> user_features(const std::vector<UserHistory>& users, const SymptomModels& m,
                                                   bool reweighting) {
    std::map<std::string, Matrix> out;
    for (const auto& u : users) out[u.user_id] = feature_matrix(extract_features(u, m.relevance, m.status, reweighting));
    return out;
}

// Reassigns feature matrices among the given users, breaking the user/feature link.
inline void shuffle_features(std::map<std::string, Matrix>& features, const std::vector<std::string>& ids, Rng& rng) {
    std::vector<Matrix> pool;
    for (const auto& id : ids) pool.push_back(features.at(id));
    rng.shuffle(pool);
    for (std::size_t i = 0; i < ids.size(); ++i) features[ids[i]] = std::move(pool[i]);
}

inline MddRun run_mdd(const UserKnobs& uk, const SymptomModels& models, const MddConfig& base, std::uint64_t seed,
                      bool reweighting, FeatureControl control = FeatureControl::none) {
    const auto users = make_users(uk, seed);
    auto features = user_features(users, models, reweighting);

    std::vector<std::string> ids;
    std::map<std::string, std::string> strata;
    for (const auto& u : users) {
        ids.push_back(u.user_id);
        std::string tag = "control";
        for (const auto& [d, l] : u.labels) {
            if (l) tag = d;
        }
        strata[u.user_id] = tag;
    }
    const auto splits = split_dataset(ids, kDefaultRatios, derive_seed(seed, "user-split"), &strata);
    std::array<std::vector<UserHistory>, 3> part;
    for (const auto& u : users) part[static_cast<std::size_t>(splits.at(u.user_id))].push_back(u);
    if (control == FeatureControl::shuffled) {
        Rng rng(derive_seed(seed, "feature-shuffle"));
        for (const auto& p : part) {
            std::vector<std::string> pids;
            for (const auto& u : p) pids.push_back(u.user_id);
            shuffle_features(features, pids, rng);
        }
    }

    MddRun run{seed, reweighting, control, {}};
    std::map<std::string, MddModel> trained;
    std::map<std::string, std::vector<MddExample>> test;
    MddConfig cfg = base;
    cfg.seed = seed;
    for (const auto& d : synth_world().kg.diseases()) {
        const auto tr = binary_examples(part[0], features, d.id);
        const auto va = binary_examples(part[1], features, d.id);
        trained.emplace(d.id, train_mdd(tr, &va, d.id, cfg));
        test[d.id] = binary_examples(part[2], features, d.id);
    }
    run.eval = eval_mdd(trained, test);
    return run;
}

inline nlohmann::json to_json(const MddRun& r) {
    auto j = to_json(r.eval);
    j["seed"] = r.seed;
    j["reweighting"] = r.reweighting;
    j["control"] = r.control == FeatureControl::shuffled ? "shuffled" : "none";
    return j;
}

}  // namespace psysym
