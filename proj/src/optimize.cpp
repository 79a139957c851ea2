// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/optimize.hpp"

#include <cmath>

namespace fggm {

Gradients project_gradients(const Gradients& grads, const NamedTensors& mask) {
    grads.require_same_layout(mask, "project_gradients");
    Gradients out = grads;
    for (std::size_t t = 0; t < out.size(); ++t) {
        auto g = out[t].tensor.data();
        const auto m = mask[t].tensor.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
    }
    return out;
}

LinearDecay::LinearDecay(double lr0, std::size_t total_steps) : lr0_(lr0), total_(total_steps) {
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) fail(ErrorKind::Validation, "learning rate must be finite and >= 0");
}

double LinearDecay::lr(std::size_t step) const noexcept {
    if (step >= total_) return 0.0;
    return lr0_ * (1.0 - static_cast<double>(step) / static_cast<double>(total_));
}

AdamWState::AdamWState(const ParamSet& like)
    : m_(NamedTensors::zeros_like(like)), v_(NamedTensors::zeros_like(like)) {}

void adamw_step(ParamSet& params, const Gradients& grads, AdamWState& state, const AdamWConfig& cfg, double lr,
                const NamedTensors* mask) {
    params.require_same_layout(grads, "adamw_step gradients");
    if (mask) params.require_same_layout(*mask, "adamw_step mask");
    if (state.m_.empty()) state = AdamWState(params);
    params.require_same_layout(state.m_, "adamw_step state");

    ++state.step_;
    const double t = static_cast<double>(state.step_);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double decay = 1.0 - lr * cfg.weight_decay;

    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k].tensor.data();
        const auto g = grads[k].tensor.data();
        auto m = state.m_[k].tensor.data();
        auto v = state.v_[k].tensor.data();
        const double* mk = mask ? (*mask)[k].tensor.data().data() : nullptr;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g[i];
            if (mk) {
                if (mk[i] == 0.0) continue;
                gi *= mk[i];
            }
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] = p[i] * decay - lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void sgd_step(ParamSet& params, const Gradients& grads, double lr, const NamedTensors* mask) {
    params.require_same_layout(grads, "sgd_step gradients");
    if (mask) params.require_same_layout(*mask, "sgd_step mask");
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k].tensor.data();
        const auto g = grads[k].tensor.data();
        const double* mk = mask ? (*mask)[k].tensor.data().data() : nullptr;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (mk && mk[i] == 0.0) continue;
            p[i] -= lr * (mk ? g[i] * mk[i] : g[i]);
        }
    }
}

}  // namespace fggm
