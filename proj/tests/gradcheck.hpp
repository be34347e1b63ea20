#pragma once

// Central finite differences against analytic gradients.

#include <cmath>
#include <functional>
#include <vector>

#include "psysym/classifier.hpp"
#include "psysym/mdd.hpp"

namespace psysym::testing {

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

// f(theta) returns the loss; analytic holds dL/dtheta at theta. The relative
// error uses max(|a|, |n|, floor) as denominator so that near-zero components
// do not blow up the ratio.
inline GradCheck check_gradient(std::vector<double>& theta, const std::vector<double>& analytic,
                                const std::function<double()>& f, double h = 1e-5, double floor = 1e-6) {
    GradCheck out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + h;
        const double up = f();
        theta[i] = keep - h;
        const double down = f();
        theta[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
        ++out.checked;
    }
    return out;
}

inline std::vector<double> flatten(const LinearParams& p) {
    std::vector<double> v = p.weights;
    v.insert(v.end(), p.bias.begin(), p.bias.end());
    return v;
}

inline void unflatten(const std::vector<double>& v, LinearParams& p) {
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p.weights.size()), p.weights.begin());
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(p.weights.size()), v.end(), p.bias.begin());
}

inline std::vector<SparseVector> random_sparse_rows(Rng& rng, std::size_t n, std::size_t features) {
    std::vector<SparseVector> rows(n);
    for (auto& r : rows) {
        for (std::uint32_t i = 0; i < features; ++i) {
            if (rng.bernoulli(0.4)) r.emplace_back(i, rng.normal());
        }
    }
    return rows;
}

inline LinearParams random_params(Rng& rng, std::size_t outputs, std::size_t features) {
    LinearParams p(outputs, features);
    for (auto& w : p.weights) w = 0.5 * rng.normal();
    for (auto& b : p.bias) b = 0.5 * rng.normal();
    return p;
}

// Masked multi-label BCE with random missing entries and inactive outputs.
inline GradCheck relevance_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t S = 2 + rng.index(4), F = 3 + rng.index(8), N = 4 + rng.index(12);
    const auto x = random_sparse_rows(rng, N, F);
    LabelMask labels(N, S);
    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < S; ++c) {
            const auto u = rng.index(3);
            labels.set(r, c, u == 0 ? LabelState::negative : u == 1 ? LabelState::positive : LabelState::missing);
        }
    }
    std::vector<bool> active(S, true);
    active[rng.index(S)] = rng.bernoulli(0.5);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < N; ++r) {
        if (rng.bernoulli(0.7)) rows.push_back(r);
    }
    if (rows.empty()) rows.push_back(0);
    const double l2 = 1e-3 * rng.uniform();
    LinearParams p = random_params(rng, S, F), grad;
    masked_bce_loss(p, x, labels, rows, active, l2, &grad);
    auto theta = flatten(p);
    return check_gradient(theta, flatten(grad), [&] {
        unflatten(theta, p);
        return masked_bce_loss(p, x, labels, rows, active, l2);
    });
}

// Soft-target cross-entropy of the status regressor.
inline GradCheck status_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t F = 3 + rng.index(8), N = 4 + rng.index(12);
    const auto x = random_sparse_rows(rng, N, F);
    std::vector<double> q(N);
    for (auto& v : q) v = static_cast<double>(rng.index(4)) / 3.0;
    const auto rows = detail::all_rows(N);
    const double l2 = 1e-3 * rng.uniform();
    LinearParams p = random_params(rng, 1, F), grad;
    soft_ce_loss(p, x, q, rows, l2, &grad);
    auto theta = flatten(p);
    return check_gradient(theta, flatten(grad), [&] {
        unflatten(theta, p);
        return soft_ce_loss(p, x, q, rows, l2);
    });
}

// Detector BCE for one user. Sequences shorter than the widest kernel exercise
// the zero padding.
inline GradCheck detector_instance(std::uint64_t seed, MddVariant variant) {
    Rng rng(seed);
    const std::size_t S = 2 + rng.index(4), T = 1 + rng.index(12);
    MddModel m(variant, S, {3, 5, 7}, 2 + rng.index(4));
    m.init_random(rng, 0.5);
    for (auto& t : m.theta()) t += 0.05 * rng.normal();  // non-zero biases too
    Matrix x(T, std::vector<double>(S));
    for (auto& row : x) {
        for (auto& v : row) v = rng.uniform();
    }
    const bool y = rng.bernoulli(0.5);
    std::vector<double> grad(m.theta().size(), 0.0);
    m.loss(x, y, &grad);
    auto theta = m.theta();
    return check_gradient(theta, grad, [&] {
        m.theta() = theta;
        return m.loss(x, y);
    });
}

}  // namespace psysym::testing
