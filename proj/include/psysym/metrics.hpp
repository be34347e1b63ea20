#pragma once

// Ranking and classification metrics shared by the classifier and detector modules.

#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "psysym/common.hpp"

namespace psysym {

// Mann-Whitney form of ROC AUC; positive/negative ties count 0.5.
// nullopt when only one class is present.
inline std::optional<double> roc_auc(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw Error("roc_auc: size mismatch");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos = 0, neg = 0, rank_sum = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]]) {
                rank_sum += avg_rank;
                pos += 1;
            } else {
                neg += 1;
            }
        }
        i = j;
    }
    if (pos == 0 || neg == 0) return std::nullopt;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    double precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
    double recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
    double f1() const {
        const double d = static_cast<double>(2 * tp + fp + fn);
        return d == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / d;
    }
};

// Predicted positive when score >= threshold.
inline Confusion confusion_at(std::span<const double> scores, const std::vector<bool>& labels, double threshold = 0.5) {
    if (scores.size() != labels.size()) throw Error("confusion_at: size mismatch");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++c.tp;
        else if (pred) ++c.fp;
        else if (labels[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double f1_at(std::span<const double> scores, const std::vector<bool>& labels, double threshold = 0.5) {
    return confusion_at(scores, labels, threshold).f1();
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double mean_absolute_error(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw Error("mae: size mismatch");
    if (pred.empty()) throw Error("mae: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

struct MaeBounds {
    double baseline = 0.0;          // constant test-mean predictor (the worse bound)
    double single_annotator = 0.0;  // expected error of one random annotator (the better bound)
};

// Single annotator votes Uncertain with probability q, so E|vote - q| = 2 q (1 - q).
inline MaeBounds mae_bounds(std::span<const double> targets) {
    if (targets.empty()) throw Error("mae_bounds: empty test set");
    const double m = mean(targets);
    MaeBounds b;
    for (double q : targets) {
        b.baseline += std::abs(m - q);
        b.single_annotator += 2.0 * q * (1.0 - q);
    }
    b.baseline /= static_cast<double>(targets.size());
    b.single_annotator /= static_cast<double>(targets.size());
    return b;
}

}  // namespace psysym
