#pragma once

// Seeded synthetic world: a six-disease knowledge graph with per-symptom word
// banks, and generators for annotated sentences, retrieval corpora and user
// posting histories. Ground truth is known for every generated item.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "psysym/annotations.hpp"
#include "psysym/classifier.hpp"
#include "psysym/corpus.hpp"
#include "psysym/kg.hpp"
#include "psysym/mdd.hpp"
#include "psysym/retrieval.hpp"

namespace psysym {

struct SymptomBank {
    std::string id;
    std::vector<std::string> lexicon;     // keyword-lexicon terms
    std::vector<std::string> paraphrase;  // same meaning, never in the lexicon
};

struct SynthWorld {
    KnowledgeGraph kg;
    std::vector<SymptomBank> banks;  // same order as kg.symptoms()
    std::map<std::string, std::vector<std::string>> context;  // per-disease topic words
    std::map<std::string, std::vector<std::string>> aliases;  // per-disease diagnosis keywords
    std::vector<std::string> generic;   // words people use whenever they describe symptoms
    std::vector<std::string> filler;
    std::vector<std::string> negation;  // status cues: symptom denied
    std::vector<std::string> hedge;     // status cues: symptom uncertain
    std::vector<std::string> recovery;  // status cues: symptom in the past
    std::vector<std::string> relatives;
    std::map<std::string, std::vector<std::string>> comorbid;  // disease -> frequently co-occurring diseases
    // Everyday words shared by symptoms that never co-occur in one disease's typical set.
    std::map<std::string, std::vector<std::string>> shared;  // symptom id -> words


    const SymptomBank& bank(const std::string& symptom_id) const {
        return banks.at(kg.symptom_index(symptom_id));
    }

    std::map<std::string, std::string> concept_table() const {
        std::map<std::string, std::string> t;
        for (const auto& b : banks) {
            for (const auto& w : b.lexicon) t[w] = b.id;
            for (const auto& w : b.paraphrase) t[w] = b.id;
        }
        return t;
    }

    KeywordLexicon lexicon(const std::string& symptom_id) const { return KeywordLexicon(bank(symptom_id).lexicon); }
};

namespace detail {

inline KnowledgeGraph synth_kg(const std::vector<SymptomBank>& banks, const std::vector<std::string>& names) {
    std::vector<Disease> diseases = {{"depression", "Depression"}, {"anxiety", "Anxiety"}, {"ocd", "OCD"},
                                     {"ptsd", "PTSD"},             {"adhd", "ADHD"},       {"bipolar", "Bipolar"}};
    std::vector<Symptom> symptoms;
    for (std::size_t i = 0; i < banks.size(); ++i) {
        const auto& b = banks[i];
        Symptom s{b.id, names[i], {}};
        s.sub_symptoms.push_back({names[i] + ": " + b.lexicon[0] + ", " + b.lexicon[1] + " or " + b.lexicon[2],
                                  DescriptionSource::manual});
        s.sub_symptoms.push_back({"Feeling " + b.lexicon[3] + " and " + b.paraphrase[0] + " most days",
                                  DescriptionSource::questionnaire});
        s.sub_symptoms.push_back({b.paraphrase[1] + " " + b.paraphrase[2] + " " + b.paraphrase[3],
                                  DescriptionSource::post});
        symptoms.push_back(std::move(s));
    }
    const std::map<std::string, std::vector<std::string>> typical = {
        {"depression",
         {"depressed_mood", "sleep_disturbance", "worthlessness_and_guilty", "suicidal_ideas",
          "decreased_energy_tiredness_fatigue", "weight_and_appetite_change", "inattention"}},
        {"anxiety",
         {"anxious_mood", "panic_fear", "sleep_disturbance", "fear_about_social_situations",
          "decreased_energy_tiredness_fatigue"}},
        {"ocd", {"obsession", "compulsion", "anxious_mood"}},
        {"ptsd",
         {"intrusion_symptoms", "avoidance_of_stimuli", "sleep_disturbance", "anxious_mood", "depressed_mood",
          "worthlessness_and_guilty"}},
        {"adhd", {"inattention", "hyperactivity_agitation"}},
        {"bipolar",
         {"drastical_shift_in_mood_and_energy", "depressed_mood", "hyperactivity_agitation", "sleep_disturbance",
          "suicidal_ideas"}},
    };
    std::vector<Edge> edges;
    for (const auto& [d, ss] : typical) {
        for (const auto& s : ss) edges.emplace_back(d, s);
    }
    return KnowledgeGraph::build(std::move(diseases), std::move(symptoms), std::move(edges));
}

}  // namespace detail

inline const SynthWorld& synth_world() {
    static const SynthWorld world = [] {
        SynthWorld w;
        const std::vector<std::pair<std::string, SymptomBank>> defs = {
            {"Depressed Mood",
             {"", {"sad", "depressed", "hopeless", "down"},
              {"gloomy", "miserable", "empty", "heartbroken", "bleak", "despair", "melancholy", "crying"}}},
            {"Anxious Mood",
             {"", {"anxious", "worried", "nervous", "anxiety"},
              {"uneasy", "tense", "dread", "apprehensive", "fretting", "edgy", "overthinking", "shaky"}}},
            {"Sleep Disturbance",
             {"", {"insomnia", "sleep", "awake", "nightmares"},
              {"tossing", "sleepless", "bedtime", "dozing", "midnight", "pillow", "unrested", "drowsy"}}},
            {"Obsession",
             {"", {"obsessed", "obsessive", "obsession", "fixated"},
              {"preoccupied", "contaminated", "germs", "symmetry", "doubts", "dirty", "unwanted", "urges"}}},
            {"Compulsion",
             {"", {"compulsive", "compulsion", "ritual", "checking"},
              {"recheck", "counting", "washing", "scrubbing", "arranging", "repeat", "locks", "handwashing"}}},
            {"Panic Fear",
             {"", {"panic", "attack", "terrified", "fear"},
              {"pounding", "racing", "choking", "trembling", "dizzy", "sweating", "breathless", "faint"}}},
            {"Intrusion Symptoms",
             {"", {"flashbacks", "trauma", "intrusive", "memories"},
              {"reliving", "haunted", "replaying", "triggered", "assault", "accident", "vivid", "startle"}}},
            {"Avoidance of Stimuli",
             {"", {"avoid", "avoiding", "avoidance", "escape"},
              {"steer", "dodging", "shun", "evade", "sidestep", "hiding", "bypass", "skipping"}}},
            {"Inattention",
             {"", {"distracted", "focus", "concentrate", "attention"},
              {"forgetful", "daydreaming", "zoning", "scattered", "misplacing", "unfocused", "drifting",
               "wandering"}}},
            {"Hyperactivity/Agitation",
             {"", {"hyperactive", "restless", "fidgety", "impulsive"},
              {"squirming", "bouncing", "pacing", "wired", "antsy", "blurting", "interrupting", "jittering"}}},
            {"Suicidal Ideas",
             {"", {"suicide", "suicidal", "die", "kill"},
              {"ending", "overdose", "goodbye", "disappear", "unalive", "bridge", "pills", "finality"}}},
            {"Worthlessness and Guilty",
             {"", {"worthless", "guilty", "useless", "failure"},
              {"ashamed", "burden", "pathetic", "blame", "inadequate", "disappointment", "undeserving", "loser"}}},
            {"Drastical Shift in Mood and Energy",
             {"", {"manic", "mania", "euphoric", "swings"},
              {"grandiose", "invincible", "elated", "spree", "unstoppable", "soaring", "crash", "rollercoaster"}}},
            {"Decreased Energy, Tiredness, Fatigue",
             {"", {"tired", "exhausted", "fatigue", "energy"},
              {"drained", "sluggish", "lethargic", "weary", "wiped", "listless", "heavy", "slow"}}},
            {"Fear about Social Situations",
             {"", {"social", "awkward", "embarrassed", "shy"},
              {"crowds", "strangers", "judged", "party", "mingling", "blushing", "stammering", "spotlight"}}},
            {"Weight and Appetite Change",
             {"", {"appetite", "weight", "eating", "hungry"},
              {"binge", "starving", "snacking", "pounds", "meals", "craving", "calories", "bloated"}}},
        };
        std::vector<std::string> names;
        for (const auto& [name, bank] : defs) {
            names.push_back(name);
            w.banks.push_back(bank);
            w.banks.back().id = slugify(name);
        }
        w.kg = detail::synth_kg(w.banks, names);
        w.context = {
            {"depression", {"therapist", "antidepressants", "counseling", "prozac"}},
            {"anxiety", {"benzos", "breathing", "xanax", "grounding"}},
            {"ocd", {"erp", "exposure", "fluvoxamine", "clinic"}},
            {"ptsd", {"veteran", "emdr", "deployment", "survivor"}},
            {"adhd", {"adderall", "stimulants", "ritalin", "planner"}},
            {"bipolar", {"lithium", "stabilizer", "episode", "psychiatrist"}},
        };
        w.aliases = {
            {"depression", {"depression", "mdd"}},  {"anxiety", {"gad", "generalized anxiety"}},
            {"ocd", {"ocd"}},                       {"ptsd", {"ptsd"}},
            {"adhd", {"adhd", "add"}},              {"bipolar", {"bipolar"}},
        };
        w.comorbid = {
            {"depression", {"anxiety", "ptsd"}}, {"anxiety", {"depression", "ocd"}},
            {"ocd", {"depression", "anxiety"}},  {"ptsd", {"anxiety", "depression"}},
            {"adhd", {"anxiety", "bipolar"}},    {"bipolar", {"anxiety", "adhd"}},
        };
        w.generic = {"feel", "always", "struggle", "lately", "constantly", "keep", "really", "cannot"};
        w.filler = {"today",  "work",    "coffee", "weekend", "movie",  "dog",    "garden", "music",
                    "phone",  "dinner",  "school", "game",    "car",    "book",   "rain",   "city",
                    "friend", "laptop",  "train",  "pizza",   "beach",  "store",  "office", "guitar",
                    "soccer", "recipe",  "cat",    "bike",    "podcast", "movies", "class",  "team"};
        w.negation = {"not", "never", "no", "longer"};
        w.hedge = {"maybe", "wonder", "unsure", "perhaps"};
        w.recovery = {"used", "anymore", "recovered", "past"};
        w.relatives = {"sister", "brother", "mom", "dad", "roommate", "coworker"};
        const std::vector<std::pair<std::string, std::vector<std::string>>> shared = {
            {"thoughts", {"obsession", "suicidal_ideas", "intrusion_symptoms"}},
            {"heart", {"panic_fear", "depressed_mood"}},
            {"hands", {"compulsion", "hyperactivity_agitation"}},
            {"mind", {"inattention", "obsession"}},
            {"night", {"sleep_disturbance", "obsession"}},
            {"food", {"weight_and_appetite_change", "compulsion"}},
            {"people", {"fear_about_social_situations", "avoidance_of_stimuli"}},
            {"body", {"decreased_energy_tiredness_fatigue", "hyperactivity_agitation"}},
            {"value", {"worthlessness_and_guilty", "drastical_shift_in_mood_and_energy"}},
            {"high", {"drastical_shift_in_mood_and_energy", "panic_fear"}},
            {"away", {"avoidance_of_stimuli", "suicidal_ideas"}},
            {"chest", {"anxious_mood", "weight_and_appetite_change"}},
        };
        std::vector<std::string> shared_words;
        for (const auto& [word, symptoms] : shared) {
            shared_words.push_back(word);
            for (const auto& sid : symptoms) {
                for (const auto& d : w.kg.diseases_of(sid)) {
                    for (const auto& other : symptoms) {
                        if (other != sid && w.kg.typical_symptoms(d).count(other)) {
                            throw Error("shared word '" + word + "' links co-typical symptoms");
                        }
                    }
                }
                w.shared[sid].push_back(word);
            }
        }

        std::set<std::string> seen;
        auto claim = [&](const std::vector<std::string>& ws) {
            for (const auto& x : ws) {
                if (!seen.insert(x).second) throw Error("synthetic vocabulary reuses '" + x + "'");
            }
        };
        for (const auto& b : w.banks) {
            claim(b.lexicon);
            claim(b.paraphrase);
        }
        for (const auto& [d, ws] : w.context) claim(ws);
        claim(w.generic);
        claim(w.filler);
        claim(w.negation);
        claim(w.hedge);
        claim(w.recovery);
        claim(w.relatives);
        claim(shared_words);
        return w;
    }();
    return world;
}

// ---------------------------------------------------------------------------
// Annotated sentences

enum class StatusCue { none, negation, hedge, recovery };

struct SynthSentence {
    std::string id;
    std::string disease;  // queue the sentence was retrieved for
    std::string text;
    std::set<std::string> truth;
    StatusCue cue = StatusCue::none;
    double p_uncertain = 0.0;  // latent probability an annotator votes Uncertain
};

struct SentenceKnobs {
    std::size_t sentences = 2000;
    double p_none = 0.25;       // no symptom at all
    double p_second = 0.2;      // a second typical symptom
    double p_comorbid = 0.35;   // an extra symptom outside the queue's typical set
    double p_atypical_only = 0.15;  // symptom sentence only about a symptom outside the typical set
    double p_partner = 0.8;     // comorbid symptom comes from a frequently co-occurring disease
    double p_context = 0.7;     // a disease topic word
    double p_generic = 0.8;     // symptom-talk word per symptom mention
    double p_lexicon = 0.5;     // a symptom word comes from the lexicon part of its bank
    double p_shared = 0.5;      // a shared everyday word per symptom mention
    double p_stray = 0.3;       // symptom-free sentence mentions one bank word in passing
    std::size_t min_words = 1;  // bank words per symptom mention
    std::size_t max_words = 2;
    double p_cue = 0.3;         // symptom sentence carries a status cue
    double label_noise = 0.01;  // per-annotator flip probability on observed labels
    std::size_t annotators = 3;
};

namespace detail {

inline void add_symptom_words(const SynthWorld& w, const std::string& sid, const SentenceKnobs& k, Rng& rng,
                              std::vector<std::string>& words) {
    const auto& b = w.bank(sid);
    const std::size_t n = k.min_words + rng.index(k.max_words - k.min_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
        words.push_back(rng.bernoulli(k.p_lexicon) ? rng.pick(b.lexicon) : rng.pick(b.paraphrase));
    }
    if (rng.bernoulli(k.p_generic)) words.push_back(rng.pick(w.generic));
    auto sh = w.shared.find(sid);
    if (sh != w.shared.end() && rng.bernoulli(k.p_shared)) words.push_back(rng.pick(sh->second));
}

inline void add_cue_words(const SynthWorld& w, StatusCue cue, Rng& rng, std::vector<std::string>& words) {
    switch (cue) {
        case StatusCue::negation: words.push_back(rng.pick(w.negation)); break;
        case StatusCue::hedge: words.push_back(rng.pick(w.hedge)); break;
        case StatusCue::recovery: words.push_back(rng.pick(w.recovery)); break;
        case StatusCue::none: break;
    }
}

inline std::string join_words(const std::vector<std::string>& words, const std::string& end = ".") {
    std::string s;
    for (const auto& x : words) s += (s.empty() ? "" : " ") + x;
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s + end;
}

}  // namespace detail

inline SynthSentence synth_sentence(const SynthWorld& w, const std::string& disease, const SentenceKnobs& k,
                                    Rng& rng) {
    SynthSentence s;
    s.disease = disease;
    const auto typical_set = w.kg.typical_symptoms(disease);
    const std::vector<std::string> typical(typical_set.begin(), typical_set.end());
    std::vector<std::string> atypical;
    for (const auto& sid : w.kg.symptom_ids()) {
        if (!typical_set.count(sid)) atypical.push_back(sid);
    }
    auto partner_pool = [&] {
        std::vector<std::string> pool;
        if (rng.bernoulli(k.p_partner)) {
            for (const auto& sid : w.kg.typical_symptoms(rng.pick(w.comorbid.at(disease)))) {
                if (!typical_set.count(sid)) pool.push_back(sid);
            }
        }
        return pool.empty() ? atypical : pool;
    };
    if (rng.bernoulli(k.p_none)) {
        // symptom-free
    } else if (rng.bernoulli(k.p_atypical_only)) {
        s.truth.insert(rng.pick(partner_pool()));
    } else {
        s.truth.insert(rng.pick(typical));
        if (rng.bernoulli(k.p_second)) s.truth.insert(rng.pick(typical));
        if (rng.bernoulli(k.p_comorbid)) s.truth.insert(rng.pick(partner_pool()));
    }
    std::vector<std::string> words;
    for (const auto& sid : s.truth) detail::add_symptom_words(w, sid, k, rng, words);
    if (s.truth.empty() && rng.bernoulli(k.p_stray)) {
        const auto& bank = w.banks[rng.index(w.banks.size())];
        words.push_back(rng.bernoulli(k.p_lexicon) ? rng.pick(bank.lexicon) : rng.pick(bank.paraphrase));
    }
    if (rng.bernoulli(k.p_context)) words.push_back(rng.pick(w.context.at(disease)));
    const std::size_t fillers = 2 + rng.index(3);
    for (std::size_t i = 0; i < fillers; ++i) words.push_back(rng.pick(w.filler));
    if (!s.truth.empty() && rng.bernoulli(k.p_cue)) {
        s.cue = static_cast<StatusCue>(1 + rng.index(3));
        detail::add_cue_words(w, s.cue, rng, words);
    }
    s.p_uncertain = s.cue == StatusCue::none ? 0.08 : 0.85;
    rng.shuffle(words);
    words.insert(words.begin(), "i");
    s.text = detail::join_words(words, s.cue == StatusCue::hedge ? "?" : ".");
    return s;
}

struct RelevanceBenchmark {
    std::vector<SynthSentence> sentences;
    std::vector<std::string> symptom_ids;
    std::vector<AnnotationRecord> annotations;
    std::vector<GoldLabel> gold;  // parallel to sentences
    LabelMask observed;           // merged annotations; off-queue symptoms missing
    LabelMask truth;              // complete ground truth
    std::vector<std::size_t> train, validation, test;

    std::vector<std::string> texts(const std::vector<std::size_t>& rows) const {
        std::vector<std::string> out;
        for (auto r : rows) out.push_back(sentences[r].text);
        return out;
    }

    LabelMask rows_of(const LabelMask& m, const std::vector<std::size_t>& rows) const {
        LabelMask out(rows.size(), m.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t c = 0; c < m.cols(); ++c) out.set(i, c, m.at(rows[i], c));
        }
        return out;
    }
};

// Sentences spread evenly over disease queues; each is annotated by k.annotators
// simulated annotators over its queue's typical symptoms only.
inline RelevanceBenchmark make_relevance_benchmark(const SentenceKnobs& k, std::uint64_t seed,
                                                   const SynthWorld& w = synth_world()) {
    RelevanceBenchmark b;
    b.symptom_ids = w.kg.symptom_ids();
    Rng rng(derive_seed(seed, "relevance-benchmark"));
    Rng ann(derive_seed(seed, "annotators"));
    const auto& diseases = w.kg.diseases();
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < k.sentences; ++i) {
        auto s = synth_sentence(w, diseases[i % diseases.size()].id, k, rng);
        s.id = "s" + std::to_string(i);
        ids.push_back(s.id);
        std::vector<AnnotationRecord> recs;
        for (std::size_t a = 0; a < k.annotators; ++a) {
            AnnotationRecord r{s.id, "a" + std::to_string(a), {}, std::nullopt};
            for (const auto& sid : w.kg.typical_symptoms(s.disease)) {
                bool rel = s.truth.count(sid) > 0;
                if (ann.bernoulli(k.label_noise)) rel = !rel;
                r.relevance[sid] = rel;
            }
            if (r.any_relevant()) r.status = ann.bernoulli(s.p_uncertain) ? Status::Uncertain : Status::True;
            recs.push_back(r);
        }
        b.gold.push_back(merge_gold(recs));
        b.annotations.insert(b.annotations.end(), recs.begin(), recs.end());
        b.sentences.push_back(std::move(s));
    }
    b.observed = LabelMask(b.sentences.size(), b.symptom_ids.size());
    b.truth = LabelMask(b.sentences.size(), b.symptom_ids.size(), LabelState::negative);
    for (std::size_t r = 0; r < b.sentences.size(); ++r) {
        for (std::size_t c = 0; c < b.symptom_ids.size(); ++c) {
            const auto& sid = b.symptom_ids[c];
            if (b.sentences[r].truth.count(sid)) b.truth.set(r, c, LabelState::positive);
            if (b.gold[r].observed.count(sid)) {
                b.observed.set(r, c, b.gold[r].relevant.count(sid) ? LabelState::positive : LabelState::negative);
            }
        }
    }
    std::map<std::string, std::string> strata;
    for (const auto& s : b.sentences) strata[s.id] = s.disease;
    const auto splits = split_dataset(ids, kDefaultRatios, seed, &strata);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        switch (splits.at(ids[r])) {
            case Split::train: b.train.push_back(r); break;
            case Split::validation: b.validation.push_back(r); break;
            case Split::test: b.test.push_back(r); break;
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Retrieval corpus

struct RetrievalKnobs {
    std::size_t planted = 500;
    std::size_t distractors = 5000;
    double p_paraphrase_only = 0.6;  // planted sentence uses no lexicon word
    double p_stray_word = 0.1;       // distractor mentions one bank word in passing
};

struct RetrievalCorpus {
    std::vector<std::pair<std::string, std::string>> sentences;  // (id, text)
    std::map<PairKey, bool> gold;                                // every (sentence, symptom) pair
    std::size_t paraphrase_only = 0;
};

inline RetrievalCorpus make_retrieval_corpus(const RetrievalKnobs& k, std::uint64_t seed,
                                             const SynthWorld& w = synth_world()) {
    RetrievalCorpus c;
    Rng rng(derive_seed(seed, "retrieval-corpus"));
    const auto sids = w.kg.symptom_ids();
    std::vector<std::pair<std::string, std::optional<std::string>>> items;
    for (std::size_t i = 0; i < k.planted; ++i) {
        const auto& sid = sids[i % sids.size()];
        const auto& b = w.bank(sid);
        std::vector<std::string> words;
        const bool para_only = rng.bernoulli(k.p_paraphrase_only);
        c.paraphrase_only += para_only;
        const std::size_t n = 3 + rng.index(2);
        for (std::size_t j = 0; j < n; ++j) words.push_back(rng.pick(b.paraphrase));
        if (!para_only) words[0] = rng.pick(b.lexicon);
        const std::size_t fillers = 1 + rng.index(3);
        for (std::size_t j = 0; j < fillers; ++j) words.push_back(rng.pick(w.filler));
        if (rng.bernoulli(0.5)) words.push_back(rng.pick(w.generic));
        rng.shuffle(words);
        words.insert(words.begin(), "i");
        items.emplace_back(detail::join_words(words), sid);
    }
    for (std::size_t i = 0; i < k.distractors; ++i) {
        std::vector<std::string> words;
        const std::size_t n = 5 + rng.index(5);
        for (std::size_t j = 0; j < n; ++j) words.push_back(rng.pick(w.filler));
        if (rng.bernoulli(k.p_stray_word)) {
            const auto& b = w.bank(rng.pick(sids));
            words.push_back(rng.bernoulli(0.5) ? rng.pick(b.lexicon) : rng.pick(b.paraphrase));
        }
        rng.shuffle(words);
        items.emplace_back(detail::join_words(words), std::nullopt);
    }
    rng.shuffle(items);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string id = "r" + std::to_string(i);
        c.sentences.emplace_back(id, items[i].first);
        for (const auto& sid : sids) c.gold[{id, sid}] = items[i].second && *items[i].second == sid;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Users

struct UserKnobs {
    std::size_t positives_per_disease = 30;
    std::size_t controls = 90;
    std::size_t min_posts = 8;
    std::size_t max_posts = 20;
    double p_symptom_post = 0.4;    // diagnosed users: first-person symptom post
    double p_confounder_post = 0.4; // controls: third-person or denied symptom post
    double p_third_person = 0.5;    // share of confounders written about someone else
    double p_cue = 0.1;             // diagnosed users' symptom posts carrying a status cue
    bool diagnosis_posts = false;   // add a self-reported diagnosis post to each diagnosed user
};

namespace detail {

inline std::string filler_post(const SynthWorld& w, Rng& rng) {
    std::vector<std::string> words{"i"};
    const std::size_t n = 4 + rng.index(5);
    for (std::size_t j = 0; j < n; ++j) words.push_back(rng.pick(w.filler));
    return join_words(words);
}

inline std::string first_person_symptom_post(const SynthWorld& w, const std::string& sid, StatusCue cue, Rng& rng) {
    SentenceKnobs k;
    std::vector<std::string> words;
    add_symptom_words(w, sid, k, rng, words);
    words.push_back(rng.pick(w.filler));
    add_cue_words(w, cue, rng, words);
    rng.shuffle(words);
    words.insert(words.begin(), rng.bernoulli(0.5) ? "i" : "my");
    return join_words(words, cue == StatusCue::hedge ? "?" : ".") + " " + filler_post(w, rng);
}

inline std::string third_person_symptom_post(const SynthWorld& w, const std::string& sid, Rng& rng) {
    SentenceKnobs k;
    std::vector<std::string> words;
    add_symptom_words(w, sid, k, rng, words);
    words.push_back(rng.pick(w.filler));
    rng.shuffle(words);
    const bool she = rng.bernoulli(0.5);
    std::vector<std::string> head{"my", rng.pick(w.relatives), "says", she ? "she" : "he"};
    words.insert(words.begin(), head.begin(), head.end());
    words.push_back(she ? "her" : "his");
    words.push_back(rng.pick(w.filler));
    return join_words(words);
}

}  // namespace detail

// Diagnosed users write first-person posts about their disease's typical
// symptoms; controls write about other people's symptoms or deny having them.
inline std::vector<UserHistory> make_users(const UserKnobs& k, std::uint64_t seed,
                                           const SynthWorld& w = synth_world()) {
    Rng rng(derive_seed(seed, "users"));
    std::vector<UserHistory> users;
    const auto sids = w.kg.symptom_ids();
    auto blank_labels = [&] {
        std::map<std::string, bool> l;
        for (const auto& d : w.kg.diseases()) l[d.id] = false;
        return l;
    };
    auto make_posts = [&](const std::string& uid, const std::function<std::string()>& gen) {
        std::vector<UserPost> posts;
        const std::size_t n = k.min_posts + rng.index(k.max_posts - k.min_posts + 1);
        std::int64_t t = 1500000000 + static_cast<std::int64_t>(rng.index(1000000));
        for (std::size_t i = 0; i < n; ++i) {
            t += 600 + static_cast<std::int64_t>(rng.index(200000));
            posts.push_back({uid + ":" + std::to_string(i), t, gen()});
        }
        return posts;
    };
    std::size_t next = 0;
    for (const auto& d : w.kg.diseases()) {
        const auto typ = w.kg.typical_symptoms(d.id);
        const std::vector<std::string> typical(typ.begin(), typ.end());
        for (std::size_t i = 0; i < k.positives_per_disease; ++i) {
            const std::string uid = "u" + std::to_string(next++);
            auto posts = make_posts(uid, [&] {
                if (!rng.bernoulli(k.p_symptom_post)) return detail::filler_post(w, rng);
                const StatusCue cue = rng.bernoulli(k.p_cue) ? static_cast<StatusCue>(1 + rng.index(3)) : StatusCue::none;
                return detail::first_person_symptom_post(w, rng.pick(typical), cue, rng);
            });
            if (k.diagnosis_posts) {
                posts.insert(posts.begin(), {uid + ":dx", posts.front().created_utc - 1,
                                             "I was diagnosed with " + w.aliases.at(d.id).front() + " last year."});
            }
            auto labels = blank_labels();
            labels[d.id] = true;
            users.push_back(make_history(uid, std::move(posts), std::move(labels)));
        }
    }
    for (std::size_t i = 0; i < k.controls; ++i) {
        const std::string uid = "u" + std::to_string(next++);
        auto posts = make_posts(uid, [&] {
            if (!rng.bernoulli(k.p_confounder_post)) return detail::filler_post(w, rng);
            const auto& sid = rng.pick(sids);
            if (rng.bernoulli(k.p_third_person)) return detail::third_person_symptom_post(w, sid, rng);
            return detail::first_person_symptom_post(w, sid, StatusCue::negation, rng);
        });
        users.push_back(make_history(uid, std::move(posts), blank_labels()));
    }
    return users;
}

inline DiagnosisRule synth_diagnosis_rule(const SynthWorld& w = synth_world()) {
    DiagnosisRule r;
    r.diagnosis_patterns = {"diagnosed with", "diagnosis of", "i have been diagnosed"};
    r.disease_keywords = w.aliases;
    r.window = 40;
    return r;
}

}  // namespace psysym
