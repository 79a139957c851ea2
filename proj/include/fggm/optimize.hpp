// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "fggm/masking.hpp"
#include "fggm/model.hpp"

namespace fggm {

/// g ⊙ M per tensor.
Gradients project_gradients(const Gradients& grads, const NamedTensors& mask);
inline Gradients project_gradients(const Gradients& grads, const MaskSet& mask) {
    return project_gradients(grads, mask.masks);
}

/// lr(step) = lr0 * (1 - step / total_steps); zero from total_steps on.
class LinearDecay {
public:
    LinearDecay(double lr0, std::size_t total_steps);
    double lr(std::size_t step) const noexcept;
    double initial() const noexcept { return lr0_; }
    std::size_t total_steps() const noexcept { return total_; }

private:
    double lr0_;
    std::size_t total_;
};

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Moments for every parameter and the shared step counter (used for bias correction).
class AdamWState {
public:
    AdamWState() = default;
    explicit AdamWState(const ParamSet& like);

    std::uint64_t step_count() const noexcept { return step_; }
    const NamedTensors& first_moment() const noexcept { return m_; }
    const NamedTensors& second_moment() const noexcept { return v_; }

private:
    friend void adamw_step(ParamSet&, const Gradients&, AdamWState&, const AdamWConfig&, double,
                           const NamedTensors*);
    NamedTensors m_;
    NamedTensors v_;
    std::uint64_t step_ = 0;
};

/// One AdamW update with decoupled weight decay. With a mask, the gradient is
/// projected first and entries whose mask is 0 are skipped entirely: their value,
/// moments and weight decay are left untouched.
void adamw_step(ParamSet& params, const Gradients& grads, AdamWState& state, const AdamWConfig& cfg, double lr,
                const NamedTensors* mask = nullptr);

/// θ ← θ − lr·(g ⊙ M); entries with mask 0 are not written.
void sgd_step(ParamSet& params, const Gradients& grads, double lr, const NamedTensors* mask = nullptr);

}  // namespace fggm
