#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"
#include "tensor.hpp"

namespace crest {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(const ParameterSet& params, AdamConfig cfg) : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

    /// Throws NumericError naming the first parameter whose gradient is not finite.
    void step(ParameterSet& params, const ParameterSet& grads) {
        if (!params.congruent(grads) || !params.congruent(m_)) throw ContractError("adam: gradient layout mismatch");
        for (std::size_t i = 0; i < grads.size(); ++i)
            for (double g : grads[i].data)
                if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + grads.name(i));
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i].data;
            const auto& g = grads[i].data;
            auto& m = m_[i].data;
            auto& v = v_[i].data;
            for (std::size_t k = 0; k < p.size(); ++k) {
                m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
                v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
                p[k] -= cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
            }
        }
    }

    long steps() const { return t_; }
    AdamConfig& config() { return cfg_; }

private:
    AdamConfig cfg_;
    ParameterSet m_;
    ParameterSet v_;
    long t_ = 0;
};

inline double global_norm(const ParameterSet& g) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (double x : g[i].data) s += x * x;
    return std::sqrt(s);
}

/// Rescales gradients so the global L2 norm is at most max_norm; returns the norm before clipping.
inline double clip_grad_norm(ParameterSet& g, double max_norm) {
    const double n = global_norm(g);
    if (n > max_norm && std::isfinite(n)) {
        const double scale = max_norm / n;
        for (std::size_t i = 0; i < g.size(); ++i)
            for (auto& x : g[i].data) x *= scale;
    }
    return n;
}

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t coordinates = 0;
    bool passed = false;
};

/// Loss closure: returns the loss at `params` and, when `grads` is non-null, accumulates the
/// analytic gradient into it.
using LossClosure = std::function<double(const ParameterSet& params, ParameterSet* grads)>;

/// Central-difference check of every coordinate. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor keeps coordinates whose
/// true gradient is ~0 from dominating through rounding noise.
inline GradCheckReport gradient_check(const LossClosure& loss, ParameterSet params, double tolerance,
                                      double step = 1e-5, double floor = 1e-6) {
    ParameterSet analytic = params.zeros_like();
    loss(params, &analytic);
    GradCheckReport r;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            double& x = params[i].data[k];
            const double orig = x;
            x = orig + step;
            const double up = loss(params, nullptr);
            x = orig - step;
            const double down = loss(params, nullptr);
            x = orig;
            const double numeric = (up - down) / (2 * step);
            const double a = analytic[i].data[k];
            const double denom = std::max({std::abs(a), std::abs(numeric), floor});
            const double rel = std::abs(a - numeric) / denom;
            ++r.coordinates;
            if (rel > r.max_rel_error || !std::isfinite(rel)) {
                r.max_rel_error = rel;
                r.worst_parameter = params.name(i);
                r.worst_index = k;
                r.analytic = a;
                r.numeric = numeric;
            }
        }
    }
    r.passed = std::isfinite(r.max_rel_error) && r.max_rel_error < tolerance;
    return r;
}

}  // namespace crest
