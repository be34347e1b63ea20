// psysym: command-line driver for the symptom-grounded detection pipeline.
//
// Every subcommand reads its inputs from the config's [paths] section (or
// per-command flags), writes its outputs into --out, and leaves a
// <stage>.manifest.json recording input digests, seed and version. Failures
// print {"error": {"stage", "message"}} on stderr and exit with status 2.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "psysym/psysym.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psysym;

namespace {

struct Common {
    std::string config_path;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

class Stage {
public:
    Stage(std::string name, const Common& common) : name_(std::move(name)) {
        if (!common.config_path.empty()) {
            if (!fs::exists(common.config_path)) throw ValidationError("config file not found: " + common.config_path);
            cfg_ = Config::load(common.config_path);
            cfg_.set_base_dir(fs::path(common.config_path).parent_path().string());
        }
        cfg_.apply_env(environ);
        seed_ = common.seed ? *common.seed : cfg_.get_u64("seeds.seed", 1);
        out_ = common.out;
        fs::create_directories(out_);
    }

    const std::string& name() const { return name_; }
    const Config& cfg() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    // Flag value when given, else [paths].<key>, else the file an earlier stage
    // leaves in the output directory. The file must exist.
    std::string input(const std::string& key, const std::string& flag = {}) {
        std::string p = flag.empty() ? cfg_.get_path("paths." + key) : flag;
        if (p.empty()) {
            static const std::map<std::string, std::string> produced = {
                {"embeddings", "sub_symptom_embeddings.tsv"},
                {"sentence_embeddings", "sentence_embeddings.tsv"},
                {"gold", "gold.json"},
                {"users", "users.jsonl"},
                {"user_splits", "user_splits.tsv"},
                {"relevance_model", "relevance_model.json"},
                {"status_model", "status_model.json"},
                {"mdd_models", "mdd_models.json"},
            };
            auto it = produced.find(key);
            if (it != produced.end()) p = (out_ / it->second).string();
        }
        if (p.empty()) throw ValidationError("no path for input '" + key + "' (flag or [paths] " + key + ")");
        if (!fs::exists(p)) throw ValidationError("input '" + key + "' not found: " + p);
        inputs_[key] = {fs::path(p).filename().string(), to_hex(fnv1a64(read_file(p)))};
        return p;
    }

    std::string optional_input(const std::string& key, const std::string& flag = {}) {
        const std::string p = flag.empty() ? cfg_.get_path("paths." + key) : flag;
        return p.empty() ? p : input(key, p);
    }

    std::string out_file(const std::string& file) const { return (out_ / file).string(); }

    void write(const std::string& file, const std::string& content) {
        write_file((out_ / file).string(), content);
        outputs_.push_back(file);
    }

    void write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

    void finish(json extra = json::object()) {
        json inputs = json::object();
        for (const auto& [k, v] : inputs_) inputs[k] = {{"file", v.first}, {"digest", v.second}};
        json m = {{"stage", name_},
                  {"version", kVersion},
                  {"seed", seed_},
                  {"inputs", inputs},
                  {"outputs", outputs_},
                  {"config_digest", to_hex(fnv1a64(cfg_.to_json().dump()))}};
        if (!extra.empty()) m["summary"] = std::move(extra);
        write_file((out_ / (name_ + ".manifest.json")).string(), m.dump(2) + "\n");
    }

private:
    std::string name_;
    Config cfg_;
    std::uint64_t seed_ = 1;
    fs::path out_;
    std::map<std::string, std::pair<std::string, std::string>> inputs_;
    std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Config-derived settings

TrainConfig train_config(const Config& c, const std::string& section, std::uint64_t seed) {
    TrainConfig t;
    t.learning_rate = c.get_double(section + ".learning_rate", 2.0);
    t.momentum = c.get_double(section + ".momentum", t.momentum);
    t.l2 = c.get_double(section + ".l2", t.l2);
    t.epochs = c.get_size(section + ".epochs", 100);
    t.batch_size = c.get_size(section + ".batch_size", t.batch_size);
    t.patience = c.get_size(section + ".patience", t.patience);
    t.balanced_sampler = c.get_bool(section + ".balanced_sampler", false);
    t.target_tnr = c.get_double(section + ".target_tnr", t.target_tnr);
    t.seed = seed;
    return t;
}

MddConfig mdd_config(const Config& c, std::uint64_t seed) {
    MddConfig m;
    m.variant = parse_variant(c.get_string("mdd.variant", "conv"));
    std::vector<double> ks(m.kernels.begin(), m.kernels.end());
    m.kernels.clear();
    for (double k : c.get_doubles("mdd.kernels", ks)) m.kernels.push_back(static_cast<std::size_t>(k));
    m.channels = c.get_size("mdd.channels", m.channels);
    m.learning_rate = c.get_double("mdd.learning_rate", m.learning_rate);
    m.momentum = c.get_double("mdd.momentum", m.momentum);
    m.l2 = c.get_double("mdd.l2", m.l2);
    m.epochs = c.get_size("mdd.epochs", m.epochs);
    m.batch_size = c.get_size("mdd.batch_size", m.batch_size);
    m.patience = c.get_size("mdd.patience", m.patience);
    m.init_scale = c.get_double("mdd.init_scale", m.init_scale);
    m.seed = seed;
    return m;
}

SplitRatios split_ratios(const Config& c) {
    const auto r = c.get_doubles("splits.ratios", {5.0, 1.0, 4.0});
    if (r.size() != 3) throw ValidationError("splits.ratios needs three values");
    for (double x : r) {
        if (!(x > 0.0)) throw ValidationError("splits.ratios must be positive");
    }
    return {r[0], r[1], r[2]};
}

DedupConfig dedup_config(const Config& c, std::uint64_t seed) {
    DedupConfig d;
    d.bands = c.get_size("retrieval.dedup_bands", d.bands);
    d.rows = c.get_size("retrieval.dedup_rows", d.rows);
    d.k = c.get_size("retrieval.dedup_k", d.k);
    d.shingle_size = c.get_size("retrieval.shingle_size", d.shingle_size);
    d.threshold = c.get_double("retrieval.dedup_threshold", d.threshold);
    d.seed = seed;
    return d;
}

// ---------------------------------------------------------------------------
// Shared loaders

struct Embedder {
    std::optional<ConceptEmbedder> concepts;
    std::size_t dim = 64;
    std::uint64_t seed = 0;

    Vector embed(std::string_view text) const { return concepts ? concepts->embed(text) : hash_embed(text, dim, seed); }
};

Embedder make_embedder(Stage& st) {
    Embedder e;
    e.dim = st.cfg().get_size("embed.dim", 64);
    e.seed = st.cfg().get_u64("embed.seed", st.seed());
    const auto method = st.cfg().get_string("embed.method", "concept");
    if (method == "concept") {
        e.concepts.emplace(load_concept_table(st.input("concepts")), e.dim, e.seed);
    } else if (method != "hash") {
        throw ValidationError("embed.method must be 'concept' or 'hash'");
    }
    return e;
}

std::vector<Sentence> post_sentences(const std::vector<RawPost>& posts) {
    std::vector<Sentence> out;
    for (const auto& p : posts) {
        for (auto& s : split_sentences(clean_post(p))) out.push_back(std::move(s));
    }
    return out;
}

struct SentenceRow {
    std::string id;
    std::string text;
    std::string disease;
    bool control = false;
};

std::vector<SentenceRow> load_sentence_rows(const std::string& path) {
    std::vector<SentenceRow> rows;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            rows.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                            j.value("disease", std::string{}), j.value("control", false)});
        } catch (const json::exception& ex) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return rows;
}

std::map<std::string, GoldLabel> load_gold(const std::string& path) {
    try {
        return gold_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& ex) {
        throw ParseError("gold labels are not valid JSON: " + std::string(ex.what()));
    }
}

LabelMask gold_mask(const std::vector<SentenceRow>& rows, const std::map<std::string, GoldLabel>& gold,
                    const std::vector<std::string>& symptom_ids) {
    LabelMask m(rows.size(), symptom_ids.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto it = gold.find(rows[r].id);
        if (it == gold.end()) {
            if (rows[r].control) {
                for (std::size_t c = 0; c < symptom_ids.size(); ++c) m.set(r, c, LabelState::negative);
            }
            continue;
        }
        for (std::size_t c = 0; c < symptom_ids.size(); ++c) {
            const auto& sid = symptom_ids[c];
            if (!it->second.observed.count(sid)) continue;
            m.set(r, c, it->second.relevant.count(sid) ? LabelState::positive : LabelState::negative);
        }
    }
    return m;
}

struct SplitRows {
    std::array<std::vector<std::size_t>, 3> rows;
};

template <class Ids>
SplitRows rows_by_split(const Ids& ids, const SplitAssignment& splits) {
    SplitRows s;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        auto it = splits.find(ids[r]);
        if (it == splits.end()) throw ValidationError("no split assignment for '" + ids[r] + "'");
        s.rows[static_cast<std::size_t>(it->second)].push_back(r);
    }
    return s;
}

struct RelevanceInputs {
    std::vector<SentenceRow> rows;
    LabelMask labels;
    SplitRows split;
    std::vector<std::string> symptom_ids;
};

RelevanceInputs relevance_inputs(Stage& st) {
    RelevanceInputs in;
    const auto kg = load_kg(st.input("kg"));
    in.symptom_ids = kg.symptom_ids();
    in.rows = load_sentence_rows(st.input("sentences"));
    in.labels = gold_mask(in.rows, load_gold(st.input("gold")), in.symptom_ids);
    std::vector<std::string> ids;
    for (const auto& r : in.rows) ids.push_back(r.id);
    in.split = rows_by_split(ids, load_splits(st.input("sentence_splits")));
    return in;
}

RelevanceData relevance_data(const RelevanceInputs& in, const std::vector<std::size_t>& rows,
                             const TfidfVectorizer& v) {
    RelevanceData d;
    d.labels = LabelMask(rows.size(), in.symptom_ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.features.push_back(v.transform(in.rows[rows[i]].text));
        d.is_control.push_back(in.rows[rows[i]].control);
        for (std::size_t c = 0; c < in.symptom_ids.size(); ++c) d.labels.set(i, c, in.labels.at(rows[i], c));
    }
    return d;
}

StatusData status_data(const RelevanceInputs& in, const std::map<std::string, GoldLabel>& gold,
                       const std::vector<std::size_t>& rows, const TfidfVectorizer& v) {
    StatusData d;
    for (auto r : rows) {
        auto it = gold.find(in.rows[r].id);
        if (it == gold.end() || !it->second.status_applicable) continue;
        d.features.push_back(v.transform(in.rows[r].text));
        d.targets.push_back(it->second.status_q);
    }
    return d;
}

std::vector<std::string> texts_of(const RelevanceInputs& in, const std::vector<std::size_t>& rows) {
    std::vector<std::string> out;
    for (auto r : rows) out.push_back(in.rows[r].text);
    return out;
}

json load_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& ex) {
        throw ParseError(path + " is not valid JSON: " + ex.what());
    }
}

std::map<std::string, MddModel> load_detectors(const std::string& path) {
    std::map<std::string, MddModel> out;
    const auto all = load_json_file(path);
    for (const auto& [d, j] : all.items()) out.emplace(d, mdd_model_from_json(j));
    return out;
}

struct UserFeatures {
    std::vector<UserHistory> users;
    std::map<std::string, FeatureSequence> seqs;
    std::vector<std::string> symptom_ids;
};

SubjectLexicon subject_lexicon(const Config& c) {
    SubjectLexicon lex;
    for (const auto& p : c.get_strings("mdd.mention_patterns", {})) lex.mention_patterns.emplace_back(p, std::regex::icase);
    return lex;
}

UserFeatures user_features(Stage& st, bool reweighting) {
    UserFeatures uf;
    uf.users = load_users(st.input("users"));
    const auto rel = relevance_model_from_json(load_json_file(st.input("relevance_model")));
    const auto status = status_model_from_json(load_json_file(st.input("status_model")));
    const auto lex = subject_lexicon(st.cfg());
    uf.symptom_ids = rel.symptom_ids;
    for (const auto& u : uf.users) uf.seqs[u.user_id] = extract_features(u, rel, status, reweighting, lex);
    return uf;
}

std::map<std::string, std::vector<std::string>> load_lexicon_table(const std::string& path) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty() || line[0] == '#') continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 2) throw ParseError("lexicon line needs symptom<TAB>term: " + line);
        out[trim(cols[0])].push_back(trim(cols[1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_validate_kg(Stage& st, const std::string& kg_flag) {
    const auto kg = load_kg(st.input("kg", kg_flag));
    json diseases = json::object();
    for (const auto& d : kg.diseases()) diseases[d.id] = kg.typical_symptoms(d.id);
    json report = {{"valid", true},
                   {"diseases", kg.diseases().size()},
                   {"symptoms", kg.symptoms().size()},
                   {"edges", kg.edges().size()},
                   {"typical", diseases}};
    st.write_json("kg_report.json", report);
    st.finish({{"valid", true}});
}

void cmd_embed(Stage& st) {
    const auto kg = load_kg(st.input("kg"));
    const auto emb = make_embedder(st);
    EmbeddingStore subs;
    for (const auto& s : kg.symptoms()) {
        for (std::size_t i = 0; i < s.sub_symptoms.size(); ++i) subs.add(sub_symptom_key(s.id, i), emb.embed(s.sub_symptoms[i].text));
    }
    st.write("sub_symptom_embeddings.tsv", serialize_embeddings(subs));
    std::size_t n = 0;
    const auto posts_path = st.optional_input("posts");
    if (!posts_path.empty()) {
        EmbeddingStore sents;
        for (const auto& s : post_sentences(load_posts(posts_path))) {
            sents.add(s.id(), emb.embed(s.text));
            ++n;
        }
        st.write("sentence_embeddings.tsv", serialize_embeddings(sents));
    }
    st.finish({{"sub_symptoms", subs.size()}, {"sentences", n}});
}

void cmd_retrieve(Stage& st, const std::string& disease) {
    const auto kg = load_kg(st.input("kg"));
    if (!kg.has_disease(disease)) throw ValidationError("unknown disease '" + disease + "'");
    const auto subs = load_embeddings(st.input("embeddings"));
    const auto sents = load_embeddings(st.input("sentence_embeddings"));
    std::vector<EmbeddedSentence> es;
    for (const auto& [id, v] : sents.entries()) es.push_back({id, v});
    const auto capacity = st.cfg().get_size("retrieval.capacity", CandidateQueue::kDefaultCapacity);
    const auto sel = select_candidates(es, kg, disease, subs, capacity);
    st.write("candidates_" + disease + ".tsv", serialize_candidates(sel.rows()));
    st.finish({{"disease", disease}, {"candidates", sel.sentence_ids.size()}});
}

void cmd_dedup(Stage& st, const std::string& disease) {
    const auto cand_path = st.input("candidates", st.cfg().has("paths.candidates")
                                                      ? std::string{}
                                                      : st.out_file("candidates_" + disease + ".tsv"));
    const auto rows = parse_candidates(read_file(cand_path));
    std::map<std::string, std::string> text;
    for (const auto& s : post_sentences(load_posts(st.input("posts")))) text[s.id()] = s.text;
    std::vector<TextItem> items;
    std::set<std::string> seen;
    for (const auto& r : rows) {
        if (!seen.insert(r.sentence_id).second) continue;
        auto it = text.find(r.sentence_id);
        if (it == text.end()) throw ValidationError("candidate sentence '" + r.sentence_id + "' not found in posts");
        items.push_back({r.sentence_id, it->second});
    }
    const auto kept_ids = lsh_dedup(items, dedup_config(st.cfg(), st.seed()));
    const std::set<std::string> kept(kept_ids.begin(), kept_ids.end());
    std::vector<CandidateRow> out;
    for (const auto& r : rows) {
        if (kept.count(r.sentence_id)) out.push_back(r);
    }
    st.write("candidates_" + disease + ".dedup.tsv", serialize_candidates(out));
    st.finish({{"sentences_in", items.size()}, {"sentences_kept", kept.size()}});
}

void cmd_label_users(Stage& st) {
    const auto posts = load_posts(st.input("posts"));
    const auto rule = load_rule(st.input("rule"));
    const auto dx = label_diagnosed_users(posts, rule);
    const auto kept_posts = filter_diagnostic_posts(posts, dx.diagnostic_posts);

    std::set<std::string> mh_subs;
    for (const auto& s : st.cfg().get_strings("label.mh_subreddits", {})) mh_subs.insert(s);
    std::vector<std::string> mh_terms = st.cfg().get_strings("label.mh_terms", {});
    for (const auto& [d, kws] : rule.disease_keywords) mh_terms.insert(mh_terms.end(), kws.begin(), kws.end());
    std::vector<RawPost> undiagnosed;
    for (const auto& p : posts) {
        if (!dx.user_diseases.count(p.author)) undiagnosed.push_back(p);
    }
    std::size_t n_controls = st.cfg().get_size("label.controls", 0);
    if (n_controls == 0) n_controls = eligible_control_users(undiagnosed, mh_subs, mh_terms).size();
    const auto controls = sample_control_users(undiagnosed, mh_subs, mh_terms, n_controls, st.seed());

    std::map<std::string, std::vector<UserPost>> by_author;
    for (const auto& p : kept_posts) {
        if (!dx.user_diseases.count(p.author) && !controls.count(p.author)) continue;
        by_author[p.author].push_back({p.id, p.created, clean_post(p).text});
    }
    std::vector<UserHistory> users;
    std::vector<std::string> ids;
    std::map<std::string, std::string> strata;
    for (auto& [author, ps] : by_author) {
        std::map<std::string, bool> labels;
        for (const auto& [d, kws] : rule.disease_keywords) labels[d] = false;
        std::string tag = "control";
        if (auto it = dx.user_diseases.find(author); it != dx.user_diseases.end()) {
            for (const auto& d : it->second) labels[d] = true;
            tag = *it->second.begin();
        }
        ids.push_back(author);
        strata[author] = tag;
        users.push_back(make_history(author, std::move(ps), std::move(labels)));
    }
    if (users.empty()) throw ValidationError("no diagnosed or control users found");
    const auto splits = split_dataset(ids, split_ratios(st.cfg()), st.seed(), &strata);
    st.write("users.jsonl", serialize_users(users));
    st.write("user_splits.tsv", serialize_splits(splits));
    json per = json::object();
    for (const auto& [u, ds] : dx.user_diseases) {
        for (const auto& d : ds) per[d] = per.value(d, 0) + 1;
    }
    st.finish({{"diagnosed_users", dx.user_diseases.size()},
               {"diagnostic_posts_removed", dx.diagnostic_posts.size()},
               {"control_users", controls.size()},
               {"per_disease", per}});
}

void cmd_merge_annotations(Stage& st) {
    const auto records = load_annotations(st.input("annotations"));
    const auto groups = group_by_sentence(records);
    json gold = json::object();
    std::set<std::string> symptoms;
    for (const auto& [sid, recs] : groups) {
        const auto g = merge_gold(recs);
        gold[sid] = to_json(g);
        symptoms.insert(g.observed.begin(), g.observed.end());
    }
    // Agreement per symptom over sentences annotated by the modal rater count.
    json kappa = json::object();
    for (const auto& sym : symptoms) {
        std::map<std::size_t, CountMatrix> by_n;
        for (const auto& [sid, recs] : groups) {
            std::vector<std::size_t> counts(2, 0);
            std::size_t n = 0;
            for (const auto& r : recs) {
                auto it = r.relevance.find(sym);
                if (it == r.relevance.end()) continue;
                ++counts[it->second ? 1 : 0];
                ++n;
            }
            if (n >= 2) by_n[n].push_back(counts);
        }
        if (by_n.empty()) continue;
        const auto best = std::max_element(by_n.begin(), by_n.end(),
                                           [](const auto& a, const auto& b) { return a.second.size() < b.second.size(); });
        if (best->second.size() < 2) continue;
        const auto k = fleiss_kappa(best->second, best->first);
        kappa[sym] = k ? json(*k) : json(nullptr);
    }
    st.write_json("gold.json", gold);
    st.write_json("agreement.json", {{"fleiss_kappa", kappa}});
    st.finish({{"sentences", groups.size()}, {"records", records.size()}});
}

void cmd_train_relevance(Stage& st, const std::string& mode_flag) {
    const auto in = relevance_inputs(st);
    const auto mode = parse_mask_mode(mode_flag.empty() ? st.cfg().get_string("relevance.mode", "label_enhance") : mode_flag);
    const auto cfg = train_config(st.cfg(), "relevance", st.seed());
    const auto vec = fit_tfidf(texts_of(in, in.split.rows[0]));
    const auto train = relevance_data(in, in.split.rows[0], vec);
    const auto val = relevance_data(in, in.split.rows[1], vec);
    TrainReport rep;
    const auto model = train_relevance(train, &val, vec, in.symptom_ids, cfg, mode, &rep);
    st.write_json("relevance_model.json", to_json(model));
    json report = {{"mode", to_string(mode)},
                   {"epochs_run", rep.epochs_run},
                   {"skipped", rep.skipped},
                   {"warnings", rep.warnings},
                   {"enhanced_labels", rep.enhanced_labels},
                   {"thresholds", rep.thresholds},
                   {"achieved_tnr", rep.achieved_tnr}};
    if (rep.best_validation_loss) report["best_validation_loss"] = *rep.best_validation_loss;
    st.write_json("relevance_train_report.json", report);
    st.finish({{"mode", to_string(mode)}, {"train_rows", train.features.size()}});
}

void cmd_train_status(Stage& st) {
    const auto in = relevance_inputs(st);
    const auto gold = load_gold(st.input("gold"));
    const auto cfg = train_config(st.cfg(), "status", st.seed());
    const auto vec = fit_tfidf(texts_of(in, in.split.rows[0]));
    const auto train = status_data(in, gold, in.split.rows[0], vec);
    const auto val = status_data(in, gold, in.split.rows[1], vec);
    if (train.targets.empty()) throw ValidationError("no status-annotated training sentences");
    TrainReport rep;
    const auto model = train_status(train, &val, vec, cfg, &rep);
    st.write_json("status_model.json", to_json(model));
    st.finish({{"train_rows", train.targets.size()}, {"epochs_run", rep.epochs_run}});
}

std::map<std::string, Matrix> matrices(const UserFeatures& uf) {
    std::map<std::string, Matrix> m;
    for (const auto& [u, seq] : uf.seqs) m[u] = feature_matrix(seq);
    return m;
}

std::array<std::vector<UserHistory>, 3> users_by_split(const std::vector<UserHistory>& users, const SplitAssignment& s) {
    std::array<std::vector<UserHistory>, 3> out;
    for (const auto& u : users) {
        auto it = s.find(u.user_id);
        if (it == s.end()) throw ValidationError("no split assignment for user '" + u.user_id + "'");
        out[static_cast<std::size_t>(it->second)].push_back(u);
    }
    return out;
}

std::vector<std::string> labelled_diseases(const std::vector<UserHistory>& users) {
    std::set<std::string> ds;
    for (const auto& u : users) {
        for (const auto& [d, l] : u.labels) ds.insert(d);
    }
    return {ds.begin(), ds.end()};
}

void cmd_train_mdd(Stage& st) {
    const bool reweighting = st.cfg().get_bool("mdd.reweighting", true);
    const auto uf = user_features(st, reweighting);
    const auto part = users_by_split(uf.users, load_splits(st.input("user_splits")));
    const auto feats = matrices(uf);
    const auto cfg = mdd_config(st.cfg(), st.seed());
    json models = json::object(), report = json::object();
    for (const auto& d : labelled_diseases(uf.users)) {
        const auto tr = binary_examples(part[0], feats, d);
        const auto va = binary_examples(part[1], feats, d);
        MddTrainReport rep;
        models[d] = to_json(train_mdd(tr, &va, d, cfg, &rep));
        report[d] = {{"epochs_run", rep.epochs_run}, {"train_users", tr.size()}};
        if (rep.best_validation_f1) report[d]["best_validation_f1"] = *rep.best_validation_f1;
    }
    std::string cache;
    for (const auto& u : uf.users) {
        json posts = json::array();
        for (const auto& pf : uf.seqs.at(u.user_id)) {
            posts.push_back({{"post_id", pf.post_id}, {"p_rel", pf.p_rel}, {"w_status", pf.w_status},
                             {"w_subj", pf.w_subj}, {"f_symp", pf.f_symp}});
        }
        cache += json{{"user_id", u.user_id}, {"posts", posts}}.dump() + "\n";
    }
    st.write("user_features.jsonl", cache);
    st.write_json("mdd_models.json", models);
    st.write_json("mdd_train_report.json", report);
    st.finish({{"reweighting", reweighting}, {"variant", to_string(cfg.variant)}});
}

void cmd_evaluate(Stage& st, const std::string& suite) {
    if (suite == "relevance") {
        const auto in = relevance_inputs(st);
        const auto model = relevance_model_from_json(load_json_file(st.input("relevance_model")));
        const auto test = relevance_data(in, in.split.rows[2], model.vectorizer);
        const auto ev = evaluate_relevance(model, test.features, test.labels);
        st.write_json("eval_relevance.json", to_json(ev));
        st.finish({{"macro_auc", ev.macro_auc}});
    } else if (suite == "status") {
        const auto in = relevance_inputs(st);
        const auto gold = load_gold(st.input("gold"));
        const auto model = status_model_from_json(load_json_file(st.input("status_model")));
        const auto test = status_data(in, gold, in.split.rows[2], model.vectorizer);
        const auto ev = evaluate_status(model, test);
        st.write_json("eval_status.json", to_json(ev));
        st.finish({{"mae", ev.mae}});
    } else if (suite == "mdd") {
        const auto uf = user_features(st, st.cfg().get_bool("mdd.reweighting", true));
        const auto part = users_by_split(uf.users, load_splits(st.input("user_splits")));
        const auto models = load_detectors(st.input("mdd_models"));
        const auto feats = matrices(uf);
        std::map<std::string, std::vector<MddExample>> test;
        for (const auto& [d, m] : models) test[d] = binary_examples(part[2], feats, d);
        const auto ev = eval_mdd(models, test);
        st.write_json("eval_mdd.json", to_json(ev));
        st.finish({{"macro_f1", ev.macro_f1}});
    } else if (suite == "retrieval") {
        const auto kg = load_kg(st.input("kg"));
        const auto subs = load_embeddings(st.input("embeddings"));
        const auto emb = make_embedder(st);
        const auto lex = load_lexicon_table(st.input("lexicon"));
        std::map<PairKey, double> es, ls;
        std::map<PairKey, bool> gold;
        for (const auto& line : read_lines(st.input("retrieval_corpus"))) {
            if (trim(line).empty()) continue;
            const auto j = json::parse(line);
            const auto id = j.at("id").get<std::string>();
            const auto text = j.at("text").get<std::string>();
            const auto truth = j.at("symptoms").get<std::set<std::string>>();
            const auto v = emb.embed(text);
            for (const auto& s : kg.symptoms()) {
                es[{id, s.id}] = symptom_relevance(v, s, subs).score;
                auto it = lex.find(s.id);
                ls[{id, s.id}] = it != lex.end() && KeywordLexicon(it->second).matches(text) ? 1.0 : 0.0;
                gold[{id, s.id}] = truth.count(s.id) > 0;
            }
        }
        const double t = st.cfg().get_double("retrieval.match_threshold", 0.6);
        const auto e = evaluate_retrieval(es, gold, t);
        const auto l = evaluate_retrieval(ls, gold, 0.5);
        json out = {{"threshold", t},
                    {"embedding", {{"macro_precision", e.macro_precision}, {"macro_recall", e.macro_recall}}},
                    {"lexicon", {{"macro_precision", l.macro_precision}, {"macro_recall", l.macro_recall}}}};
        st.write_json("eval_retrieval.json", out);
        st.finish({{"embedding_recall", e.macro_recall}, {"lexicon_recall", l.macro_recall}});
    } else if (suite == "synthetic") {
        const auto s = st.seed();
        const auto cfg = train_config(st.cfg(), "relevance", s);
        const auto models = train_symptom_models({}, cfg, s);
        const auto mcfg = mdd_config(st.cfg(), s);
        json out = {{"relevance", to_json(run_relevance({}, cfg, s))},
                    {"status", to_json(run_status({}, train_config(st.cfg(), "status", s), s))},
                    {"retrieval", to_json(run_retrieval({}, s))},
                    {"mdd_reweighted", to_json(run_mdd({}, models, mcfg, s, true))},
                    {"mdd_plain", to_json(run_mdd({}, models, mcfg, s, false))}};
        st.write_json("eval_synthetic.json", out);
        st.finish();
    } else {
        throw ValidationError("unknown suite '" + suite + "' (relevance, status, mdd, retrieval, synthetic)");
    }
}

ExplainConfig explain_config(const Config& c) {
    ExplainConfig e;
    e.threshold = c.get_double("explain.threshold", e.threshold);
    e.excerpt_chars = c.get_size("explain.excerpt_chars", e.excerpt_chars);
    return e;
}

void cmd_explain(Stage& st, const std::string& user_flag, const std::string& disease_flag) {
    const auto kg = load_kg(st.input("kg"));
    const bool reweighting = st.cfg().get_bool("mdd.reweighting", true);
    const auto uf = user_features(st, reweighting);
    const auto cfg = explain_config(st.cfg());
    std::string text;
    std::string js;
    std::size_t n = 0;
    for (const auto& u : uf.users) {
        if (!user_flag.empty() && u.user_id != user_flag) continue;
        for (const auto& d : kg.diseases()) {
            const bool wanted = disease_flag.empty() ? u.has(d.id) : d.id == disease_flag;
            if (!wanted) continue;
            const auto ex = explain_user(u, uf.seqs.at(u.user_id), kg, d.id, uf.symptom_ids, cfg);
            if (!verify_explanation(ex, u, uf.seqs.at(u.user_id), uf.symptom_ids, reweighting, cfg.threshold)) {
                throw Error("explanation for '" + u.user_id + "' failed verification");
            }
            text += render_explanation(ex, kg) + "\n";
            js += to_json(ex).dump() + "\n";
            ++n;
        }
    }
    if (!user_flag.empty() && n == 0) throw ValidationError("no explanation produced for user '" + user_flag + "'");
    st.write("explanations.txt", text);
    st.write("explanations.jsonl", js);
    st.finish({{"explanations", n}});
}

void cmd_audit(Stage& st) {
    const auto kg = load_kg(st.input("kg"));
    const auto uf = user_features(st, st.cfg().get_bool("mdd.reweighting", true));
    const auto detectors = load_detectors(st.input("mdd_models"));
    AuditConfig cfg;
    cfg.fp_coverage_max = st.cfg().get_double("audit.fp_coverage_max", cfg.fp_coverage_max);
    cfg.fn_coverage_min = st.cfg().get_double("audit.fn_coverage_min", cfg.fn_coverage_min);
    cfg.fn_probability_min = st.cfg().get_double("audit.fn_probability_min", cfg.fn_probability_min);
    cfg.explain = explain_config(st.cfg());
    std::string out;
    std::size_t fp = 0, fn = 0;
    for (const auto& u : uf.users) {
        for (const auto& f : audit_labels(u, uf.seqs.at(u.user_id), kg, uf.symptom_ids, detectors, cfg)) {
            (f.kind == AuditKind::suspect_false_positive ? fp : fn)++;
            out += to_json(f).dump() + "\n";
        }
    }
    st.write("audit_flags.jsonl", out);
    st.finish({{"suspect_false_positive", fp}, {"suspect_false_negative", fn}});
}

std::string fixture_config() {
    return R"([paths]
kg = "kg.json"
concepts = "concepts.tsv"
lexicon = "lexicon.tsv"
posts = "posts.jsonl"
rule = "rule.json"
sentences = "sentences.jsonl"
annotations = "annotations.tsv"
sentence_splits = "sentence_splits.tsv"
retrieval_corpus = "retrieval.jsonl"

[seeds]
seed = 1

[embed]
method = "concept"
dim = 64

[retrieval]
capacity = 300
dedup_bands = 32
dedup_rows = 4
dedup_k = 128
dedup_threshold = 0.8
match_threshold = 0.6

[label]
controls = 0

[relevance]
mode = "label_enhance"
learning_rate = 2.0
l2 = 1e-6
epochs = 100
target_tnr = 0.9

[status]
learning_rate = 2.0
l2 = 1e-6
epochs = 100

[mdd]
variant = "conv"
kernels = [3, 5, 7]
channels = 16
reweighting = true

[splits]
ratios = [5, 1, 4]

[audit]
fp_coverage_max = 0.2
fn_coverage_min = 0.6
fn_probability_min = 0.5
)";
}

void cmd_synth_fixtures(Stage& st) {
    const auto& w = synth_world();
    const auto s = st.seed();
    st.write("kg.json", serialize_kg(w.kg));
    std::string concepts = "# word\tconcept\n";
    for (const auto& [word, c] : w.concept_table()) concepts += word + "\t" + c + "\n";
    st.write("concepts.tsv", concepts);
    std::string lex = "# symptom\tterm\n";
    for (const auto& b : w.banks) {
        for (const auto& t : b.lexicon) lex += b.id + "\t" + t + "\n";
    }
    st.write("lexicon.tsv", lex);
    st.write("rule.json", to_json(synth_diagnosis_rule(w)).dump(2) + "\n");

    SentenceKnobs sk;
    sk.sentences = st.cfg().get_size("synth.sentences", sk.sentences);
    const auto b = make_relevance_benchmark(sk, s);
    std::string sents;
    for (const auto& x : b.sentences) sents += json{{"id", x.id}, {"disease", x.disease}, {"text", x.text}}.dump() + "\n";
    st.write("sentences.jsonl", sents);
    std::string ann = "sentence_id\tannotator_id\tsymptom_id\trelevant\tstatus\n";
    for (const auto& r : b.annotations) {
        for (const auto& [sym, rel] : r.relevance) {
            ann += r.sentence_id + "\t" + r.annotator_id + "\t" + sym + "\t" + (rel ? "1" : "0") + "\t" +
                   (rel && r.status ? (*r.status == Status::Uncertain ? "U" : "T") : "") + "\n";
        }
    }
    st.write("annotations.tsv", ann);
    SplitAssignment splits;
    for (auto r : b.train) splits[b.sentences[r].id] = Split::train;
    for (auto r : b.validation) splits[b.sentences[r].id] = Split::validation;
    for (auto r : b.test) splits[b.sentences[r].id] = Split::test;
    st.write("sentence_splits.tsv", serialize_splits(splits));

    UserKnobs uk;
    uk.diagnosis_posts = true;
    uk.positives_per_disease = st.cfg().get_size("synth.positives_per_disease", uk.positives_per_disease);
    uk.controls = st.cfg().get_size("synth.controls", uk.controls);
    std::vector<RawPost> posts;
    for (const auto& u : make_users(uk, s)) {
        std::string sub = "casual";
        for (const auto& [d, l] : u.labels) {
            if (l) sub = d;
        }
        for (const auto& p : u.posts) posts.push_back({p.id, u.user_id, sub, p.created_utc, p.text});
    }
    st.write("posts.jsonl", serialize_posts(posts));

    RetrievalKnobs rk;
    rk.planted = st.cfg().get_size("synth.planted", 160);
    rk.distractors = st.cfg().get_size("synth.distractors", 800);
    const auto rc = make_retrieval_corpus(rk, s);
    std::string corpus;
    for (const auto& [id, text] : rc.sentences) {
        json syms = json::array();
        for (const auto& sym : w.kg.symptom_ids()) {
            if (rc.gold.at({id, sym})) syms.push_back(sym);
        }
        corpus += json{{"id", id}, {"text", text}, {"symptoms", syms}}.dump() + "\n";
    }
    st.write("retrieval.jsonl", corpus);
    st.write("config.toml", fixture_config());
    st.finish({{"sentences", b.sentences.size()}, {"posts", posts.size()}, {"retrieval_sentences", rc.sentences.size()}});
}

int fail(const std::string& stage, const std::string& message) {
    std::cerr << json{{"error", {{"stage", stage}, {"message", message}}}}.dump() << std::endl;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symptom-grounded mental disease detection pipeline"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Common common;
    std::string stage_name;
    std::function<void(Stage&)> action;

    auto sub = [&](const std::string& name, const std::string& desc) {
        auto* c = app.add_subcommand(name, desc);
        c->add_option("--config", common.config_path, "TOML config file")->check(CLI::ExistingFile);
        c->add_option("--out", common.out, "output directory")->capture_default_str();
        c->add_option("--seed", common.seed, "random seed (overrides [seeds] seed)");
        c->callback([&, name] { stage_name = name; });
        return c;
    };

    std::string kg_flag, disease, mode, suite, user_id;

    auto* validate = sub("validate-kg", "check knowledge-graph invariants");
    validate->add_option("--kg", kg_flag, "KG JSON (overrides [paths] kg)");
    sub("embed", "embed sub-symptom descriptions and post sentences");
    auto* retrieve = sub("retrieve", "fill per-symptom candidate queues for one disease");
    retrieve->add_option("--disease", disease, "disease id")->required();
    auto* dedup = sub("dedup", "remove near-duplicate candidate sentences");
    dedup->add_option("--disease", disease, "disease id")->required();
    sub("label-users", "find diagnosed users, sample controls, split users");
    sub("merge-annotations", "merge annotator records into gold labels");
    auto* train_rel = sub("train-relevance", "train the relevance classifier");
    train_rel->add_option("--mode", mode, "naive_negative | loss_mask | label_enhance");
    sub("train-status", "train the status (uncertainty) regressor");
    sub("train-mdd", "extract symptom features and train per-disease detectors");
    auto* evaluate = sub("evaluate", "evaluate persisted models");
    evaluate->add_option("--suite", suite, "relevance | status | mdd | retrieval | synthetic")->required();
    auto* explain = sub("explain", "render symptom explanations for diagnosed users");
    explain->add_option("--user", user_id, "only this user");
    explain->add_option("--disease", disease, "explain for this disease instead of the user's labels");
    sub("audit", "flag suspicious user labels");
    sub("synth-fixtures", "write the seeded synthetic corpora and a matching config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        Stage st(stage_name, common);
        if (stage_name == "validate-kg") cmd_validate_kg(st, kg_flag);
        else if (stage_name == "embed") cmd_embed(st);
        else if (stage_name == "retrieve") cmd_retrieve(st, disease);
        else if (stage_name == "dedup") cmd_dedup(st, disease);
        else if (stage_name == "label-users") cmd_label_users(st);
        else if (stage_name == "merge-annotations") cmd_merge_annotations(st);
        else if (stage_name == "train-relevance") cmd_train_relevance(st, mode);
        else if (stage_name == "train-status") cmd_train_status(st);
        else if (stage_name == "train-mdd") cmd_train_mdd(st);
        else if (stage_name == "evaluate") cmd_evaluate(st, suite);
        else if (stage_name == "explain") cmd_explain(st, user_id, disease);
        else if (stage_name == "audit") cmd_audit(st);
        else if (stage_name == "synth-fixtures") cmd_synth_fixtures(st);
    } catch (const std::exception& e) {
        return fail(stage_name, e.what());
    }
    return 0;
}
