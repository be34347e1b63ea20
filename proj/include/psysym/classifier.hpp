#pragma once

// Multi-label symptom relevance model and status regressor over TF-IDF
// features. Missing labels are handled by treating them as negatives, masking
// them out of the loss, or by teacher/student label enhancement.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "psysym/common.hpp"
#include "psysym/metrics.hpp"
#include "psysym/tfidf.hpp"

namespace psysym {

enum class LabelState : std::int8_t { negative = 0, positive = 1, missing = -1 };

class LabelMask {
public:
    LabelMask() = default;
    LabelMask(std::size_t rows, std::size_t cols, LabelState fill = LabelState::missing)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    LabelState at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    void set(std::size_t r, std::size_t c, LabelState s) { data_[r * cols_ + c] = s; }

    std::size_t count(std::size_t c, LabelState s) const {
        std::size_t n = 0;
        for (std::size_t r = 0; r < rows_; ++r) n += at(r, c) == s;
        return n;
    }

    LabelMask with_missing_as_negative() const {
        LabelMask m = *this;
        for (auto& s : m.data_) {
            if (s == LabelState::missing) s = LabelState::negative;
        }
        return m;
    }

    bool operator==(const LabelMask&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<LabelState> data_;
};

enum class MaskMode { naive_negative, loss_mask, label_enhance };

inline std::string to_string(MaskMode m) {
    switch (m) {
        case MaskMode::naive_negative: return "naive_negative";
        case MaskMode::loss_mask: return "loss_mask";
        case MaskMode::label_enhance: return "label_enhance";
    }
    return "loss_mask";
}

inline MaskMode parse_mask_mode(const std::string& s) {
    if (s == "naive_negative" || s == "naive") return MaskMode::naive_negative;
    if (s == "loss_mask" || s == "mask") return MaskMode::loss_mask;
    if (s == "label_enhance" || s == "enhance") return MaskMode::label_enhance;
    throw ParseError("unknown mask mode '" + s + "'");
}

struct TrainConfig {
    double learning_rate = 0.5;
    double momentum = 0.9;
    double l2 = 1e-4;
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    std::size_t patience = 4;
    std::uint64_t seed = 1;
    bool balanced_sampler = false;
    double target_tnr = 0.9;

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
        if (patience < 1) throw Error("patience must be >= 1");
        if (batch_size < 1) throw Error("batch size must be >= 1");
    }
};

// Dense weights (outputs x features, row-major) plus one bias per output.
struct LinearParams {
    std::size_t outputs = 0;
    std::size_t features = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    LinearParams() = default;
    LinearParams(std::size_t o, std::size_t f) : outputs(o), features(f), weights(o * f, 0.0), bias(o, 0.0) {}

    std::span<double> row(std::size_t o) { return {weights.data() + o * features, features}; }
    std::span<const double> row(std::size_t o) const { return {weights.data() + o * features, features}; }

    double logit(std::size_t o, const SparseVector& x) const { return sparse_dot(x, row(o)) + bias[o]; }

    bool finite() const {
        for (double w : weights) {
            if (!std::isfinite(w)) return false;
        }
        for (double b : bias) {
            if (!std::isfinite(b)) return false;
        }
        return true;
    }

    void zero() {
        std::fill(weights.begin(), weights.end(), 0.0);
        std::fill(bias.begin(), bias.end(), 0.0);
    }
};

inline nlohmann::json to_json(const LinearParams& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t o = 0; o < p.outputs; ++o) {
        auto r = p.row(o);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"weights", rows}, {"biases", p.bias}};
}

inline LinearParams linear_from_json(const nlohmann::json& j, std::size_t features) {
    const auto& rows = j.at("weights");
    LinearParams p(rows.size(), features);
    for (std::size_t o = 0; o < rows.size(); ++o) {
        const auto r = rows[o].get<std::vector<double>>();
        if (r.size() != features) throw ParseError("model weight row has wrong length");
        std::copy(r.begin(), r.end(), p.row(o).begin());
    }
    p.bias = j.at("biases").get<std::vector<double>>();
    if (p.bias.size() != p.outputs) throw ParseError("model bias length mismatch");
    if (!p.finite()) throw ValidationError("model has non-finite parameters");
    return p;
}

inline double bce(double p, double y) {
    constexpr double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

// ---------------------------------------------------------------------------
// Losses with analytic gradients

// Per symptom: mean BCE over the batch's non-missing entries; symptoms are then
// averaged without weighting. Missing entries contribute nothing.
inline double masked_bce_loss(const LinearParams& p, std::span<const SparseVector> features, const LabelMask& labels,
                              std::span<const std::size_t> rows, const std::vector<bool>& active, double l2,
                              LinearParams* grad = nullptr) {
    if (grad) {
        *grad = LinearParams(p.outputs, p.features);
    }
    double total = 0.0;
    std::size_t used = 0;
    std::vector<std::size_t> obs_rows;
    std::vector<double> ys;
    for (std::size_t s = 0; s < p.outputs; ++s) {
        if (!active.empty() && !active[s]) continue;
        obs_rows.clear();
        ys.clear();
        for (auto r : rows) {
            const auto st = labels.at(r, s);
            if (st == LabelState::missing) continue;
            obs_rows.push_back(r);
            ys.push_back(st == LabelState::positive ? 1.0 : 0.0);
        }
        if (obs_rows.empty()) continue;
        ++used;
        const double m = static_cast<double>(obs_rows.size());
        double ls = 0.0;
        for (std::size_t k = 0; k < obs_rows.size(); ++k) {
            const auto& x = features[obs_rows[k]];
            const double prob = sigmoid(p.logit(s, x));
            ls += bce(prob, ys[k]);
            if (grad) {
                const double d = (prob - ys[k]) / m;
                auto g = grad->row(s);
                for (const auto& [i, v] : x) g[i] += d * v;
                grad->bias[s] += d;
            }
        }
        total += ls / m;
    }
    if (used > 0) {
        total /= static_cast<double>(used);
        if (grad) {
            const double inv = 1.0 / static_cast<double>(used);
            for (auto& g : grad->weights) g *= inv;
            for (auto& g : grad->bias) g *= inv;
        }
    }
    double reg = 0.0;
    for (std::size_t s = 0; s < p.outputs; ++s) {
        if (!active.empty() && !active[s]) continue;
        auto w = p.row(s);
        for (std::size_t i = 0; i < w.size(); ++i) {
            reg += w[i] * w[i];
            if (grad) grad->row(s)[i] += l2 * w[i];
        }
    }
    return total + 0.5 * l2 * reg;
}

// Cross-entropy against soft targets q in [0, 1], averaged over rows.
inline double soft_ce_loss(const LinearParams& p, std::span<const SparseVector> features,
                           std::span<const double> targets, std::span<const std::size_t> rows, double l2,
                           LinearParams* grad = nullptr) {
    if (grad) *grad = LinearParams(p.outputs, p.features);
    double total = 0.0;
    const double m = static_cast<double>(rows.size());
    for (auto r : rows) {
        const double prob = sigmoid(p.logit(0, features[r]));
        total += bce(prob, targets[r]);
        if (grad) {
            const double d = (prob - targets[r]) / m;
            auto g = grad->row(0);
            for (const auto& [i, v] : features[r]) g[i] += d * v;
            grad->bias[0] += d;
        }
    }
    if (!rows.empty()) total /= m;
    double reg = 0.0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        reg += p.weights[i] * p.weights[i];
        if (grad) grad->weights[i] += l2 * p.weights[i];
    }
    return total + 0.5 * l2 * reg;
}

// ---------------------------------------------------------------------------
// Batching

using BatchPlan = std::vector<std::vector<std::size_t>>;

inline BatchPlan shuffled_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    BatchPlan plan;
    for (std::size_t i = 0; i < n; i += batch_size) {
        plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    }
    return plan;
}

// Half of every batch from each pool. One epoch walks a fresh permutation of
// the larger pool; the smaller pool is drawn with replacement.
class BalancedBatchSampler {
public:
    BalancedBatchSampler(std::vector<std::size_t> annotated, std::vector<std::size_t> control, std::size_t batch_size)
        : annotated_(std::move(annotated)), control_(std::move(control)), batch_size_(batch_size) {
        if (annotated_.empty() || control_.empty()) throw Error("balanced sampler: empty pool");
        if (batch_size_ == 0 || batch_size_ % 2 != 0) throw Error("balanced sampler: batch size must be even");
    }

    BatchPlan epoch(Rng& rng) const {
        const bool annotated_larger = annotated_.size() >= control_.size();
        std::vector<std::size_t> large = annotated_larger ? annotated_ : control_;
        const auto& small = annotated_larger ? control_ : annotated_;
        rng.shuffle(large);
        const std::size_t half = batch_size_ / 2;
        BatchPlan plan;
        for (std::size_t i = 0; i < large.size(); i += half) {
            std::vector<std::size_t> batch;
            for (std::size_t k = 0; k < half; ++k) {
                batch.push_back(i + k < large.size() ? large[i + k] : large[rng.index(large.size())]);
            }
            for (std::size_t k = 0; k < half; ++k) batch.push_back(small[rng.index(small.size())]);
            plan.push_back(std::move(batch));
        }
        return plan;
    }

private:
    std::vector<std::size_t> annotated_, control_;
    std::size_t batch_size_;
};

inline BatchPlan balanced_batches(const std::vector<std::size_t>& annotated, const std::vector<std::size_t>& control,
                                  std::size_t batch_size, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "balanced"));
    return BalancedBatchSampler(annotated, control, batch_size).epoch(rng);
}

// ---------------------------------------------------------------------------
// Mini-batch gradient descent with momentum and validation early stopping.

struct TrainReport {
    std::vector<std::string> skipped;
    std::vector<std::string> warnings;
    std::size_t epochs_run = 0;
    std::optional<double> best_validation_loss;
    std::map<std::string, double> thresholds;    // label enhancement, per symptom
    std::map<std::string, double> achieved_tnr;  // label enhancement, per symptom
    std::size_t enhanced_labels = 0;
};

namespace detail {

using LossFn = std::function<double(const LinearParams&, std::span<const std::size_t>, LinearParams*)>;
using ValFn = std::function<double(const LinearParams&)>;
using PlanFn = std::function<BatchPlan(Rng&)>;

inline void sgd_train(LinearParams& p, const TrainConfig& cfg, const PlanFn& plan, const LossFn& loss,
                      const ValFn* validation, TrainReport& report) {
    Rng rng(derive_seed(cfg.seed, "sgd"));
    LinearParams velocity(p.outputs, p.features);
    LinearParams grad;
    LinearParams best = p;
    std::optional<double> best_val;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = plan(rng);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const double l = loss(p, batches[b], &grad);
            if (!std::isfinite(l)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(b));
            }
            for (std::size_t i = 0; i < p.weights.size(); ++i) {
                velocity.weights[i] = cfg.momentum * velocity.weights[i] - cfg.learning_rate * grad.weights[i];
                p.weights[i] += velocity.weights[i];
            }
            for (std::size_t i = 0; i < p.bias.size(); ++i) {
                velocity.bias[i] = cfg.momentum * velocity.bias[i] - cfg.learning_rate * grad.bias[i];
                p.bias[i] += velocity.bias[i];
            }
        }
        report.epochs_run = epoch + 1;
        if (!validation) continue;
        const double v = (*validation)(p);
        if (!std::isfinite(v)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
        if (!best_val || v < *best_val) {
            best_val = v;
            best = p;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    if (validation && best_val) {
        p = best;
        report.best_validation_loss = best_val;
    }
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Relevance model

struct RelevanceData {
    std::vector<SparseVector> features;
    LabelMask labels;
    std::vector<bool> is_control;  // empty = no control rows
};

struct RelevanceModel {
    TfidfVectorizer vectorizer;
    std::vector<std::string> symptom_ids;
    LinearParams params;
    std::vector<bool> trained;
    MaskMode mode = MaskMode::loss_mask;
    std::uint64_t seed = 0;

    std::size_t symptom_count() const { return symptom_ids.size(); }

    // Per-symptom probabilities; symptoms skipped during training score 0.
    std::vector<double> predict(const SparseVector& x) const {
        std::vector<double> out(params.outputs, 0.0);
        for (std::size_t s = 0; s < params.outputs; ++s) {
            if (trained[s]) out[s] = sigmoid(params.logit(s, x));
        }
        return out;
    }

    std::vector<double> predict_text(std::string_view text) const { return predict(vectorizer.transform(text)); }
};

inline nlohmann::json to_json(const RelevanceModel& m) {
    nlohmann::json j = to_json(m.params);
    j["format_version"] = 1;
    j["kind"] = "relevance";
    j["vectorizer"] = m.vectorizer.to_json();
    j["symptoms"] = m.symptom_ids;
    j["trained"] = m.trained;
    j["mask_mode"] = to_string(m.mode);
    j["seed"] = m.seed;
    return j;
}

inline RelevanceModel relevance_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind") != "relevance") throw ParseError("not a relevance model file");
        RelevanceModel m;
        m.vectorizer = TfidfVectorizer::from_json(j.at("vectorizer"));
        m.symptom_ids = j.at("symptoms").get<std::vector<std::string>>();
        m.params = linear_from_json(j, m.vectorizer.size());
        m.trained = j.at("trained").get<std::vector<bool>>();
        m.mode = parse_mask_mode(j.at("mask_mode").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        if (m.params.outputs != m.symptom_ids.size() || m.trained.size() != m.symptom_ids.size()) {
            throw ParseError("relevance model: symptom count mismatch");
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed relevance model: ") + ex.what());
    }
}

// Smallest cut t such that scores strictly below t are predicted negative and at
// least target_tnr of the known negatives fall below it.
inline double tnr_threshold(std::span<const double> scores, const std::vector<bool>& negatives, double target_tnr = 0.9) {
    if (scores.size() != negatives.size()) throw Error("tnr_threshold: size mismatch");
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (negatives[i]) neg.push_back(scores[i]);
    }
    if (neg.empty()) throw Error("tnr_threshold: no known negatives");
    std::sort(neg.begin(), neg.end());
    const double want = target_tnr * static_cast<double>(neg.size());
    auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));
    k = std::clamp<std::size_t>(k, 1, neg.size());
    return std::nextafter(neg[k - 1], std::numeric_limits<double>::infinity());
}

struct EnhanceResult {
    LabelMask labels;
    std::map<std::string, double> thresholds;
    std::map<std::string, double> achieved_tnr;
    std::vector<std::string> warnings;
    std::size_t converted = 0;
};

// Applies precomputed per-symptom cuts: missing entries scored below become negatives.
inline LabelMask apply_thresholds(const RelevanceModel& teacher, std::span<const SparseVector> features,
                                  const LabelMask& labels, const std::map<std::string, double>& thresholds,
                                  std::size_t* converted = nullptr) {
    LabelMask out = labels;
    for (std::size_t r = 0; r < labels.rows(); ++r) {
        const auto p = teacher.predict(features[r]);
        for (std::size_t s = 0; s < labels.cols(); ++s) {
            auto it = thresholds.find(teacher.symptom_ids[s]);
            if (it == thresholds.end() || labels.at(r, s) != LabelState::missing) continue;
            if (p[s] < it->second) {
                out.set(r, s, LabelState::negative);
                if (converted) ++*converted;
            }
        }
    }
    return out;
}

// Missing entries the teacher scores below the per-symptom TNR cut become
// negatives; observed entries are never touched.
inline EnhanceResult enhance_labels(const RelevanceModel& teacher, std::span<const SparseVector> features,
                                    const LabelMask& labels, double target_tnr = 0.9) {
    EnhanceResult res{labels, {}, {}, {}, 0};
    std::vector<std::vector<double>> probs;
    probs.reserve(features.size());
    for (const auto& x : features) probs.push_back(teacher.predict(x));
    for (std::size_t s = 0; s < labels.cols(); ++s) {
        const auto& sid = teacher.symptom_ids[s];
        if (!teacher.trained[s]) {
            res.warnings.push_back("symptom '" + sid + "' untrained in teacher; not enhanced");
            continue;
        }
        std::vector<double> scores;
        std::vector<bool> neg_flags;
        for (std::size_t r = 0; r < labels.rows(); ++r) {
            const auto st = labels.at(r, s);
            if (st == LabelState::missing) continue;
            scores.push_back(probs[r][s]);
            neg_flags.push_back(st == LabelState::negative);
        }
        if (std::find(neg_flags.begin(), neg_flags.end(), true) == neg_flags.end()) {
            res.warnings.push_back("symptom '" + sid + "' has no observed negatives; not enhanced");
            continue;
        }
        const auto& nf = neg_flags;
        const double t = tnr_threshold(scores, nf, target_tnr);
        std::size_t below = 0, total = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (!nf[i]) continue;
            ++total;
            below += scores[i] < t;
        }
        res.thresholds[sid] = t;
        res.achieved_tnr[sid] = static_cast<double>(below) / static_cast<double>(total);
    }
    res.labels = apply_thresholds(teacher, features, labels, res.thresholds, &res.converted);
    return res;
}

namespace detail {

inline std::vector<bool> trainable_symptoms(const LabelMask& labels, const std::vector<std::string>& ids,
                                            TrainReport& report) {
    std::vector<bool> active(labels.cols(), false);
    for (std::size_t s = 0; s < labels.cols(); ++s) {
        active[s] = labels.count(s, LabelState::positive) > 0 && labels.count(s, LabelState::negative) > 0;
        if (!active[s]) report.skipped.push_back(ids[s]);
    }
    return active;
}

inline RelevanceModel fit_relevance(const RelevanceData& train, const LabelMask& train_labels,
                                    const RelevanceData* validation, const LabelMask* val_labels,
                                    const TfidfVectorizer& vectorizer, const std::vector<std::string>& symptom_ids,
                                    const TrainConfig& cfg, MaskMode mode, TrainReport& report) {
    RelevanceModel model;
    model.vectorizer = vectorizer;
    model.symptom_ids = symptom_ids;
    model.mode = mode;
    model.seed = cfg.seed;
    model.params = LinearParams(symptom_ids.size(), vectorizer.size());
    model.trained = trainable_symptoms(train_labels, symptom_ids, report);

    const std::vector<bool>& active = model.trained;

    PlanFn plan;
    if (cfg.balanced_sampler && !train.is_control.empty()) {
        std::vector<std::size_t> ann, ctl;
        for (std::size_t r = 0; r < train.features.size(); ++r) (train.is_control[r] ? ctl : ann).push_back(r);
        BalancedBatchSampler sampler(ann, ctl, cfg.batch_size + cfg.batch_size % 2);
        plan = [sampler](Rng& rng) { return sampler.epoch(rng); };
    } else {
        const std::size_t n = train.features.size();
        const std::size_t bs = cfg.batch_size;
        plan = [n, bs](Rng& rng) { return shuffled_batches(n, bs, rng); };
    }
    LossFn loss = [&](const LinearParams& p, std::span<const std::size_t> rows, LinearParams* g) {
        return masked_bce_loss(p, train.features, train_labels, rows, active, cfg.l2, g);
    };
    ValFn val;
    const ValFn* valp = nullptr;
    std::vector<std::size_t> val_rows;
    if (validation && val_labels && !validation->features.empty()) {
        val_rows = all_rows(validation->features.size());
        val = [&](const LinearParams& p) {
            return masked_bce_loss(p, validation->features, *val_labels, val_rows, active, 0.0, nullptr);
        };
        valp = &val;
    }
    sgd_train(model.params, cfg, plan, loss, valp, report);
    return model;
}

}  // namespace detail

inline RelevanceModel train_relevance(const RelevanceData& train, const RelevanceData* validation,
                                      const TfidfVectorizer& vectorizer, const std::vector<std::string>& symptom_ids,
                                      const TrainConfig& cfg, MaskMode mode, TrainReport* report_out = nullptr) {
    cfg.validate();
    if (train.labels.cols() != symptom_ids.size()) throw Error("train_relevance: label columns != symptom count");
    if (train.labels.rows() != train.features.size()) throw Error("train_relevance: label rows != feature rows");
    TrainReport report;
    RelevanceModel model;
    if (mode == MaskMode::naive_negative) {
        const auto tl = train.labels.with_missing_as_negative();
        std::optional<LabelMask> vl;
        if (validation) vl = validation->labels.with_missing_as_negative();
        model = detail::fit_relevance(train, tl, validation, vl ? &*vl : nullptr, vectorizer, symptom_ids, cfg,
                                      mode, report);
    } else if (mode == MaskMode::loss_mask) {
        model = detail::fit_relevance(train, train.labels, validation, validation ? &validation->labels : nullptr,
                                      vectorizer, symptom_ids, cfg, mode, report);
    } else {
        TrainReport teacher_report;
        const auto teacher =
            detail::fit_relevance(train, train.labels, validation, validation ? &validation->labels : nullptr,
                                  vectorizer, symptom_ids, cfg, MaskMode::loss_mask, teacher_report);
        auto enhanced = enhance_labels(teacher, train.features, train.labels, cfg.target_tnr);
        report.thresholds = enhanced.thresholds;
        report.achieved_tnr = enhanced.achieved_tnr;
        report.enhanced_labels = enhanced.converted;
        report.warnings = enhanced.warnings;
        // The student is early-stopped against validation labels enhanced with the same cuts.
        std::optional<LabelMask> vl;
        if (validation) vl = apply_thresholds(teacher, validation->features, validation->labels, enhanced.thresholds);
        model = detail::fit_relevance(train, enhanced.labels, validation, vl ? &*vl : nullptr, vectorizer,
                                      symptom_ids, cfg, MaskMode::label_enhance, report);
    }
    for (const auto& s : report.skipped) report.warnings.push_back("symptom '" + s + "' skipped: needs >=1 positive and >=1 negative");
    if (report_out) *report_out = report;
    return model;
}

struct SymptomMetrics {
    std::optional<double> auc;
    double f1 = 0.0;
    std::size_t positives = 0, negatives = 0;
};

struct RelevanceEval {
    std::map<std::string, SymptomMetrics> per_symptom;
    std::vector<std::string> excluded;  // single-class or untrained
    double macro_auc = 0.0;
    double macro_f1 = 0.0;
};

// Scores every non-missing entry of `truth`.
inline RelevanceEval evaluate_relevance(const RelevanceModel& model, std::span<const SparseVector> features,
                                        const LabelMask& truth, double threshold = 0.5) {
    RelevanceEval ev;
    std::vector<std::vector<double>> probs;
    for (const auto& x : features) probs.push_back(model.predict(x));
    double auc_sum = 0.0, f1_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < truth.cols(); ++s) {
        std::vector<double> sc;
        std::vector<bool> lab;
        for (std::size_t r = 0; r < truth.rows(); ++r) {
            const auto st = truth.at(r, s);
            if (st == LabelState::missing) continue;
            sc.push_back(probs[r][s]);
            lab.push_back(st == LabelState::positive);
        }
        const auto& labels = lab;
        SymptomMetrics m;
        m.positives = static_cast<std::size_t>(std::count(lab.begin(), lab.end(), true));
        m.negatives = lab.size() - m.positives;
        const auto& sid = model.symptom_ids[s];
        if (!model.trained[s] || m.positives == 0 || m.negatives == 0) {
            ev.excluded.push_back(sid);
            continue;
        }
        m.auc = roc_auc(sc, labels);
        m.f1 = f1_at(sc, labels, threshold);
        auc_sum += *m.auc;
        f1_sum += m.f1;
        ++n;
        ev.per_symptom[sid] = m;
    }
    if (n) {
        ev.macro_auc = auc_sum / static_cast<double>(n);
        ev.macro_f1 = f1_sum / static_cast<double>(n);
    }
    return ev;
}

inline nlohmann::json to_json(const RelevanceEval& ev) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [sid, m] : ev.per_symptom) {
        per[sid] = {{"auc", m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr)}, {"f1", m.f1}};
    }
    return {{"per_symptom", per}, {"macro_auc", ev.macro_auc}, {"macro_f1", ev.macro_f1}, {"excluded", ev.excluded}};
}

// ---------------------------------------------------------------------------
// Status model: predicts the fraction of annotators voting Uncertain.

struct StatusModel {
    TfidfVectorizer vectorizer;
    LinearParams params{1, 0};
    std::uint64_t seed = 0;

    double predict(const SparseVector& x) const { return sigmoid(params.logit(0, x)); }
    double predict_text(std::string_view text) const { return predict(vectorizer.transform(text)); }
};

inline nlohmann::json to_json(const StatusModel& m) {
    nlohmann::json j = to_json(m.params);
    j["format_version"] = 1;
    j["kind"] = "status";
    j["vectorizer"] = m.vectorizer.to_json();
    j["seed"] = m.seed;
    return j;
}

inline StatusModel status_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind") != "status") throw ParseError("not a status model file");
        StatusModel m;
        m.vectorizer = TfidfVectorizer::from_json(j.at("vectorizer"));
        m.params = linear_from_json(j, m.vectorizer.size());
        m.seed = j.at("seed").get<std::uint64_t>();
        if (m.params.outputs != 1) throw ParseError("status model must have one output");
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed status model: ") + ex.what());
    }
}

struct StatusData {
    std::vector<SparseVector> features;
    std::vector<double> targets;
};

inline StatusModel train_status(const StatusData& train, const StatusData* validation,
                                const TfidfVectorizer& vectorizer, const TrainConfig& cfg,
                                TrainReport* report_out = nullptr) {
    cfg.validate();
    if (train.features.size() != train.targets.size()) throw Error("train_status: size mismatch");
    for (double q : train.targets) {
        if (!(q >= 0.0 && q <= 1.0)) throw Error("train_status: targets must lie in [0, 1]");
    }
    StatusModel model;
    model.vectorizer = vectorizer;
    model.seed = cfg.seed;
    model.params = LinearParams(1, vectorizer.size());
    TrainReport report;
    const std::size_t n = train.features.size();
    const std::size_t bs = cfg.batch_size;
    detail::PlanFn plan = [n, bs](Rng& rng) { return shuffled_batches(n, bs, rng); };
    detail::LossFn loss = [&](const LinearParams& p, std::span<const std::size_t> rows, LinearParams* g) {
        return soft_ce_loss(p, train.features, train.targets, rows, cfg.l2, g);
    };
    detail::ValFn val;
    const detail::ValFn* valp = nullptr;
    std::vector<std::size_t> val_rows;
    if (validation && !validation->features.empty()) {
        val_rows = detail::all_rows(validation->features.size());
        val = [&](const LinearParams& p) {
            return soft_ce_loss(p, validation->features, validation->targets, val_rows, 0.0, nullptr);
        };
        valp = &val;
    }
    detail::sgd_train(model.params, cfg, plan, loss, valp, report);
    if (report_out) *report_out = report;
    return model;
}

struct StatusEval {
    double mae = 0.0;
    double baseline_mae = 0.0;
    double single_annotator_mae = 0.0;
};

inline StatusEval evaluate_status(const StatusModel& model, const StatusData& test) {
    if (test.features.empty()) throw Error("evaluate_status: empty test set");
    std::vector<double> pred;
    for (const auto& x : test.features) pred.push_back(model.predict(x));
    const auto b = mae_bounds(test.targets);
    return {mean_absolute_error(pred, test.targets), b.baseline, b.single_annotator};
}

inline nlohmann::json to_json(const StatusEval& e) {
    return {{"mae", e.mae}, {"baseline_mae", e.baseline_mae}, {"single_annotator_mae", e.single_annotator_mae}};
}

}  // namespace psysym
