#pragma once

// User-level disease detection from per-post symptom features.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/classifier.hpp"
#include "psysym/common.hpp"
#include "psysym/corpus.hpp"
#include "psysym/metrics.hpp"

namespace psysym {

inline constexpr std::size_t kMaxHistoryPosts = 256;
inline constexpr double kFirstPersonWeight = 0.9;
inline constexpr double kOtherPersonWeight = 0.1;

struct UserPost {
    std::string id;
    std::int64_t created_utc = 0;
    std::string text;
};

struct UserHistory {
    std::string user_id;
    std::vector<UserPost> posts;
    std::map<std::string, bool> labels;

    bool has(const std::string& disease) const {
        auto it = labels.find(disease);
        return it != labels.end() && it->second;
    }
    bool is_control() const {
        return std::none_of(labels.begin(), labels.end(), [](const auto& kv) { return kv.second; });
    }
};

// Sorts by time (stable, so same-second posts keep file order) and keeps the
// earliest kMaxHistoryPosts.
inline UserHistory make_history(std::string user_id, std::vector<UserPost> posts, std::map<std::string, bool> labels) {
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (posts[i].id.empty()) posts[i].id = user_id + ":" + std::to_string(i);
    }
    std::stable_sort(posts.begin(), posts.end(),
                     [](const UserPost& a, const UserPost& b) { return a.created_utc < b.created_utc; });
    if (posts.size() > kMaxHistoryPosts) posts.resize(kMaxHistoryPosts);
    return {std::move(user_id), std::move(posts), std::move(labels)};
}

inline UserHistory user_from_json(const nlohmann::json& j) {
    try {
        std::vector<UserPost> posts;
        for (const auto& p : j.at("posts")) {
            posts.push_back({p.value("id", std::string{}), p.at("created_utc").get<std::int64_t>(),
                             p.at("text").get<std::string>()});
        }
        std::map<std::string, bool> labels;
        if (j.contains("label")) labels = j.at("label").get<std::map<std::string, bool>>();
        return make_history(j.at("user_id").get<std::string>(), std::move(posts), std::move(labels));
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed user record: ") + ex.what());
    }
}

inline nlohmann::json to_json(const UserHistory& u) {
    nlohmann::json posts = nlohmann::json::array();
    for (const auto& p : u.posts) posts.push_back({{"id", p.id}, {"created_utc", p.created_utc}, {"text", p.text}});
    return {{"user_id", u.user_id}, {"label", u.labels}, {"posts", posts}};
}

inline std::vector<UserHistory> parse_users(const std::string& text) {
    std::vector<UserHistory> out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("users line " + std::to_string(line_no) + ": " + ex.what());
        }
        auto u = user_from_json(j);
        if (!seen.insert(u.user_id).second) throw ValidationError("duplicate user id '" + u.user_id + "'");
        out.push_back(std::move(u));
    }
    return out;
}

inline std::vector<UserHistory> load_users(const std::string& path) { return parse_users(read_file(path)); }

inline std::string serialize_users(const std::vector<UserHistory>& users) {
    std::string out;
    for (const auto& u : users) out += to_json(u).dump() + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Subject and status weights

struct SubjectLexicon {
    std::set<std::string> first_person{"i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"};
    std::set<std::string> other_person{"he",   "she",  "they",   "him",     "her",     "them",
                                       "his",  "hers", "their",  "theirs",  "himself", "herself",
                                       "themselves"};
    std::vector<std::string> mention_patterns;  // regexes, matched case-insensitively
};

inline double subject_weight(std::string_view text, const SubjectLexicon& lex = {}) {
    std::size_t first = 0, other = 0;
    for (const auto& tok : word_tokens(text)) {
        first += lex.first_person.count(tok);
        other += lex.other_person.count(tok);
    }
    if (!lex.mention_patterns.empty()) {
        const std::string s(text);
        for (const auto& pat : lex.mention_patterns) {
            const std::regex re(pat, std::regex::icase);
            other += static_cast<std::size_t>(
                std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
        }
    }
    return first >= other ? kFirstPersonWeight : kOtherPersonWeight;
}

inline std::vector<double> reweight(std::span<const double> p_rel, double w_status, double w_subj) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(w_status)) throw Error("reweight: w_status out of [0, 1]: " + format_double(w_status));
    if (!in_unit(w_subj)) throw Error("reweight: w_subj out of [0, 1]: " + format_double(w_subj));
    std::vector<double> out(p_rel.size());
    for (std::size_t i = 0; i < p_rel.size(); ++i) {
        if (!in_unit(p_rel[i])) throw Error("reweight: p_rel[" + std::to_string(i) + "] out of [0, 1]");
        out[i] = p_rel[i] * w_status * w_subj;
    }
    return out;
}

struct PostFeatures {
    std::string post_id;
    std::vector<double> p_rel;
    double w_status = 1.0;
    double w_subj = kFirstPersonWeight;
    std::vector<double> f_symp;
};

using FeatureSequence = std::vector<PostFeatures>;

inline FeatureSequence extract_features(const UserHistory& user, const RelevanceModel& rel, const StatusModel& status,
                                        bool reweighting, const SubjectLexicon& lex = {}) {
    FeatureSequence seq;
    seq.reserve(user.posts.size());
    const std::size_t S = rel.symptom_count();
    for (const auto& post : user.posts) {
        PostFeatures pf;
        pf.post_id = post.id;
        pf.p_rel.assign(S, 0.0);
        const auto sentences = split_text(post.text);
        double unc = 0.0;
        for (const auto& s : sentences) {
            const auto x = rel.vectorizer.transform(s);
            const auto p = rel.predict(x);
            for (std::size_t i = 0; i < S; ++i) pf.p_rel[i] = std::max(pf.p_rel[i], p[i]);
            unc += status.predict_text(s);
        }
        pf.w_status = sentences.empty() ? 1.0 : 1.0 - unc / static_cast<double>(sentences.size());
        pf.w_status = std::clamp(pf.w_status, 0.0, 1.0);
        pf.w_subj = subject_weight(post.text, lex);
        pf.f_symp = reweighting ? reweight(pf.p_rel, pf.w_status, pf.w_subj) : pf.p_rel;
        seq.push_back(std::move(pf));
    }
    return seq;
}

using Matrix = std::vector<std::vector<double>>;  // posts x symptoms

inline Matrix feature_matrix(const FeatureSequence& seq) {
    Matrix m;
    m.reserve(seq.size());
    for (const auto& p : seq) m.push_back(p.f_symp);
    return m;
}

// ---------------------------------------------------------------------------
// Detector models

enum class MddVariant { conv, meanpool };

inline std::string to_string(MddVariant v) { return v == MddVariant::conv ? "conv" : "meanpool"; }

inline MddVariant parse_variant(const std::string& s) {
    if (s == "conv") return MddVariant::conv;
    if (s == "meanpool") return MddVariant::meanpool;
    throw ParseError("unknown detector variant '" + s + "'");
}

struct MddConfig {
    MddVariant variant = MddVariant::conv;
    std::vector<std::size_t> kernels{3, 5, 7};
    std::size_t channels = 16;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double l2 = 1e-4;
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    std::size_t patience = 4;
    double init_scale = 0.1;
    std::uint64_t seed = 1;
};

// All parameters live in one flat vector; the layout depends on the variant.
//   conv:     per kernel k: [channels][k][S] weights then [channels] biases;
//             then [kernels.size() * channels] output weights and one output bias.
//   meanpool: [S] weights then one bias.
class MddModel {
public:
    MddModel() = default;

    MddModel(MddVariant variant, std::size_t symptoms, std::vector<std::size_t> kernels, std::size_t channels)
        : variant_(variant), S_(symptoms), kernels_(std::move(kernels)), C_(channels) {
        if (S_ == 0) throw Error("detector needs at least one input feature");
        if (variant_ == MddVariant::conv) {
            if (kernels_.empty() || C_ == 0) throw Error("conv detector needs kernels and channels");
            std::size_t off = 0;
            for (auto k : kernels_) {
                if (k == 0) throw Error("kernel size must be positive");
                conv_off_.push_back(off);
                off += C_ * k * S_ + C_;
            }
            out_off_ = off;
            theta_.assign(off + kernels_.size() * C_ + 1, 0.0);
        } else {
            theta_.assign(S_ + 1, 0.0);
        }
    }

    MddVariant variant() const { return variant_; }
    std::size_t symptoms() const { return S_; }
    const std::vector<std::size_t>& kernels() const { return kernels_; }
    std::size_t channels() const { return C_; }
    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::string& disease() const { return disease_; }
    void set_disease(std::string d) { disease_ = std::move(d); }

    void init_random(Rng& rng, double scale) {
        for (auto& t : theta_) t = scale * rng.normal();
        if (variant_ == MddVariant::conv) {
            for (std::size_t g = 0; g < kernels_.size(); ++g) {
                const std::size_t b = conv_off_[g] + C_ * kernels_[g] * S_;
                for (std::size_t c = 0; c < C_; ++c) theta_[b + c] = 0.0;
            }
        }
        theta_.back() = 0.0;
    }

    double logit(const Matrix& x) const { return forward(x, nullptr, 0.0); }
    double predict(const Matrix& x) const { return sigmoid(logit(x)); }

    // BCE for one example; adds dL/dtheta into grad (same size as theta) when given.
    double loss(const Matrix& x, bool y, std::vector<double>* grad = nullptr) const {
        const double z = forward(x, nullptr, 0.0);
        const double p = sigmoid(z);
        if (grad) forward(x, grad, p - (y ? 1.0 : 0.0));
        return bce(p, y ? 1.0 : 0.0);
    }

    bool finite() const {
        return std::all_of(theta_.begin(), theta_.end(), [](double t) { return std::isfinite(t); });
    }

private:
    void check(const Matrix& x) const {
        if (x.empty()) throw Error("detector input has no posts");
        for (const auto& row : x) {
            if (row.size() != S_) throw Error("detector input width " + std::to_string(row.size()) +
                                              " != " + std::to_string(S_));
        }
    }

    // Computes the logit; when grad is given, backpropagates dlogit into it.
    double forward(const Matrix& x, std::vector<double>* grad, double dlogit) const {
        check(x);
        const std::size_t T = x.size();
        if (variant_ == MddVariant::meanpool) {
            double z = theta_[S_];
            std::vector<double> m(S_, 0.0);
            for (const auto& row : x) {
                for (std::size_t s = 0; s < S_; ++s) m[s] += row[s] / static_cast<double>(T);
            }
            for (std::size_t s = 0; s < S_; ++s) z += theta_[s] * m[s];
            if (grad) {
                for (std::size_t s = 0; s < S_; ++s) (*grad)[s] += dlogit * m[s];
                (*grad)[S_] += dlogit;
            }
            return z;
        }
        const std::size_t kmax = *std::max_element(kernels_.begin(), kernels_.end());
        const std::size_t L = std::max(T, kmax);
        auto at = [&](std::size_t t, std::size_t s) { return t < T ? x[t][s] : 0.0; };
        double z = theta_.back();
        for (std::size_t g = 0; g < kernels_.size(); ++g) {
            const std::size_t k = kernels_[g];
            const std::size_t w0 = conv_off_[g];
            const std::size_t b0 = w0 + C_ * k * S_;
            for (std::size_t c = 0; c < C_; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t arg = 0;
                for (std::size_t t = 0; t + k <= L; ++t) {
                    double v = theta_[b0 + c];
                    for (std::size_t j = 0; j < k; ++j) {
                        if (t + j >= T) break;
                        const double* w = &theta_[w0 + (c * k + j) * S_];
                        const auto& row = x[t + j];
                        for (std::size_t s = 0; s < S_; ++s) v += w[s] * row[s];
                    }
                    if (v > best) {
                        best = v;
                        arg = t;
                    }
                }
                const double h = std::max(0.0, best);
                const std::size_t oi = out_off_ + g * C_ + c;
                z += theta_[oi] * h;
                if (grad) {
                    (*grad)[oi] += dlogit * h;
                    if (best > 0.0) {
                        const double dz = dlogit * theta_[oi];
                        (*grad)[b0 + c] += dz;
                        for (std::size_t j = 0; j < k; ++j) {
                            for (std::size_t s = 0; s < S_; ++s) {
                                (*grad)[w0 + (c * k + j) * S_ + s] += dz * at(arg + j, s);
                            }
                        }
                    }
                }
            }
        }
        if (grad) grad->back() += dlogit;
        return z;
    }

    MddVariant variant_ = MddVariant::meanpool;
    std::size_t S_ = 0;
    std::vector<std::size_t> kernels_;
    std::size_t C_ = 0;
    std::vector<std::size_t> conv_off_;
    std::size_t out_off_ = 0;
    std::vector<double> theta_;
    std::string disease_;
};

inline nlohmann::json to_json(const MddModel& m) {
    return {{"format_version", 1},
            {"kind", "mdd"},
            {"variant", to_string(m.variant())},
            {"disease", m.disease()},
            {"symptoms", m.symptoms()},
            {"kernels", m.kernels()},
            {"channels", m.channels()},
            {"theta", m.theta()}};
}

inline MddModel mdd_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind") != "mdd") throw ParseError("not a detector model file");
        MddModel m(parse_variant(j.at("variant").get<std::string>()), j.at("symptoms").get<std::size_t>(),
                   j.at("kernels").get<std::vector<std::size_t>>(), j.at("channels").get<std::size_t>());
        const auto theta = j.at("theta").get<std::vector<double>>();
        if (theta.size() != m.theta().size()) throw ParseError("detector parameter count mismatch");
        m.theta() = theta;
        m.set_disease(j.at("disease").get<std::string>());
        if (!m.finite()) throw ValidationError("detector has non-finite parameters");
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed detector model: ") + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Training and evaluation

struct MddExample {
    std::string user_id;
    Matrix x;
    bool y = false;
};

// Users diagnosed with `disease` are positives and control users negatives;
// users with only other diagnoses are left out.
inline std::vector<MddExample> binary_examples(const std::vector<UserHistory>& users,
                                               const std::map<std::string, Matrix>& features,
                                               const std::string& disease) {
    std::vector<MddExample> out;
    for (const auto& u : users) {
        const bool pos = u.has(disease);
        if (!pos && !u.is_control()) continue;
        auto it = features.find(u.user_id);
        if (it == features.end()) throw Error("no features for user '" + u.user_id + "'");
        if (it->second.empty()) continue;
        out.push_back({u.user_id, it->second, pos});
    }
    return out;
}

inline double mdd_f1(const MddModel& m, const std::vector<MddExample>& xs, double threshold = 0.5) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& e : xs) {
        scores.push_back(m.predict(e.x));
        labels.push_back(e.y);
    }
    return f1_at(scores, labels, threshold);
}

inline double mdd_mean_loss(const MddModel& m, const std::vector<MddExample>& xs) {
    double s = 0.0;
    for (const auto& e : xs) s += m.loss(e.x, e.y);
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

struct MddTrainReport {
    std::size_t epochs_run = 0;
    std::optional<double> best_validation_f1;
    std::optional<double> best_validation_loss;
};

inline MddModel train_mdd(const std::vector<MddExample>& train, const std::vector<MddExample>* validation,
                          const std::string& disease, const MddConfig& cfg, MddTrainReport* report_out = nullptr) {
    const auto npos = static_cast<std::size_t>(std::count_if(train.begin(), train.end(), [](const auto& e) { return e.y; }));
    if (npos == 0) throw Error("detector for '" + disease + "': no positive training users");
    if (npos == train.size()) throw Error("detector for '" + disease + "': no control training users");
    const std::size_t S = train.front().x.front().size();
    MddModel model(cfg.variant, S, cfg.kernels, cfg.channels);
    model.set_disease(disease);
    Rng rng(derive_seed(cfg.seed, "mdd:" + disease));
    model.init_random(rng, cfg.init_scale);

    std::vector<double> velocity(model.theta().size(), 0.0), grad(model.theta().size());
    MddTrainReport report;
    std::optional<MddModel> best;
    double best_f1 = -1.0, best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    const bool use_val = validation && !validation->empty();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& batch : shuffled_batches(train.size(), cfg.batch_size, rng)) {
            std::fill(grad.begin(), grad.end(), 0.0);
            double l = 0.0;
            for (auto i : batch) l += model.loss(train[i].x, train[i].y, &grad);
            const double inv = 1.0 / static_cast<double>(batch.size());
            if (!std::isfinite(l)) throw DivergenceError("detector for '" + disease + "' diverged at epoch " + std::to_string(epoch));
            auto& th = model.theta();
            for (std::size_t i = 0; i < th.size(); ++i) {
                const double g = grad[i] * inv + cfg.l2 * th[i];
                velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * g;
                th[i] += velocity[i];
            }
        }
        if (!model.finite()) throw DivergenceError("detector for '" + disease + "' has non-finite parameters");
        report.epochs_run = epoch + 1;
        if (!use_val) continue;
        const double f1 = mdd_f1(model, *validation);
        const double vl = mdd_mean_loss(model, *validation);
        if (f1 > best_f1 || (f1 == best_f1 && vl < best_loss)) {
            best_f1 = f1;
            best_loss = vl;
            best = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    if (best) {
        model = *best;
        report.best_validation_f1 = best_f1;
        report.best_validation_loss = best_loss;
    }
    if (report_out) *report_out = report;
    return model;
}

struct MddEval {
    std::map<std::string, double> per_disease_f1;
    std::vector<std::string> excluded;  // no test positives
    double macro_f1 = 0.0;
};

inline MddEval eval_mdd(const std::map<std::string, MddModel>& models,
                        const std::map<std::string, std::vector<MddExample>>& test) {
    MddEval ev;
    for (const auto& [d, xs] : test) {
        const bool has_pos = std::any_of(xs.begin(), xs.end(), [](const auto& e) { return e.y; });
        auto it = models.find(d);
        if (!has_pos || it == models.end()) {
            ev.excluded.push_back(d);
            continue;
        }
        ev.per_disease_f1[d] = mdd_f1(it->second, xs);
    }
    double s = 0.0;
    for (const auto& [d, f] : ev.per_disease_f1) s += f;
    if (!ev.per_disease_f1.empty()) ev.macro_f1 = s / static_cast<double>(ev.per_disease_f1.size());
    return ev;
}

inline nlohmann::json to_json(const MddEval& ev) {
    return {{"per_disease_f1", ev.per_disease_f1}, {"macro_f1", ev.macro_f1}, {"excluded", ev.excluded}};
}

}  // namespace psysym
