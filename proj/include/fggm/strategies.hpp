// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fggm/fisher.hpp"
#include "fggm/masking.hpp"
#include "fggm/model.hpp"
#include "fggm/optimize.hpp"
#include "fggm/random.hpp"

namespace fggm {

enum class OptimizerKind { AdamW, Sgd };

struct TrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    bool linear_decay = true;
    OptimizerKind optimizer = OptimizerKind::AdamW;
    AdamWConfig adamw;

    void validate() const;
};

struct TaskContext {
    std::size_t task_index = 0;  // 0-based position in the stream
    std::uint64_t shuffle_seed = 0;
    /// Epoch budget for this task; 0 falls back to TrainConfig::epochs.
    std::size_t epochs = 0;
    /// Called after every epoch with the current parameters (1-based epoch).
    std::function<void(std::size_t epoch, const ParamSet&)> on_epoch_end;
};

struct TaskReport {
    std::size_t steps = 0;
    double final_train_loss = 0.0;
    std::vector<double> epoch_losses;
    /// Per-tensor fraction of parameters allowed to move (masking strategies only).
    std::vector<std::pair<std::string, double>> retained_fractions;
    std::vector<std::string> warnings;
};

enum class StrategyKind { Fggm, Sft, Ewc, Replay, Migu };

std::string to_string(StrategyKind k);
StrategyKind parse_strategy_kind(std::string_view s);
/// Human-facing label ("FGGM", "SFT", "EWC", "REPLAY", "MIGU-style").
std::string strategy_label(StrategyKind k);

struct StrategyConfig {
    StrategyKind kind = StrategyKind::Fggm;
    // FGGM / MIGU
    double alpha = 0.7;
    Aggregation aggregation = Aggregation::Input;
    MaskMode mask_mode = MaskMode::Hard;
    // FGGM / EWC Fisher estimation
    FisherMode fisher_mode = FisherMode::per_sample();
    std::optional<std::size_t> fisher_samples;  // unset: the whole training split
    // EWC
    double ewc_lambda = 100.0;
    // REPLAY
    std::size_t buffer_size = 200;
    double replay_ratio = 0.5;

    void validate() const;
    bool uses_alpha() const noexcept { return kind == StrategyKind::Fggm || kind == StrategyKind::Migu; }
    bool uses_aggregation() const noexcept { return kind == StrategyKind::Fggm; }
};

/// Common training loop. Subclasses customise it through the hooks below; the loop
/// itself (shuffling, batching, schedule, optimizer reset per task) is shared so
/// strategies that degenerate to plain fine-tuning reproduce it bit for bit.
class Strategy {
public:
    explicit Strategy(TrainConfig train) : train_(train) { train_.validate(); }
    virtual ~Strategy() = default;

    virtual StrategyKind kind() const noexcept = 0;
    TaskReport train_task(ParamSet& params, const Dataset& train, const TaskContext& ctx);

    const TrainConfig& train_config() const noexcept { return train_; }

protected:
    virtual void begin_task(const ParamSet&, const Dataset&, TaskReport&) {}
    virtual Batch augment_batch(Batch batch) { return batch; }
    virtual void adjust_gradients(const ParamSet&, Gradients&) {}
    /// Mask for this step, or nullptr for an unconstrained update.
    virtual const NamedTensors* step_mask(const ParamSet&, const Batch&) { return nullptr; }
    virtual void end_task(const ParamSet&, const Dataset&, TaskReport&) {}

private:
    TrainConfig train_;
};

class SftStrategy final : public Strategy {
public:
    using Strategy::Strategy;
    StrategyKind kind() const noexcept override { return StrategyKind::Sft; }
};

/// Two phases per task: Fisher-guided mask initialisation on the new task's data,
/// then training with every gradient projected onto the mask.
class FggmStrategy final : public Strategy {
public:
    FggmStrategy(TrainConfig train, StrategyConfig cfg);
    StrategyKind kind() const noexcept override { return StrategyKind::Fggm; }

    /// Phase two alone, with a caller-supplied mask.
    TaskReport train_task_with_mask(ParamSet& params, const Dataset& train, MaskSet mask, const TaskContext& ctx);

    const std::optional<FisherDiag>& last_fisher() const noexcept { return fisher_; }
    const std::optional<MaskSet>& last_mask() const noexcept { return mask_; }

protected:
    void begin_task(const ParamSet& params, const Dataset& train, TaskReport& report) override;
    const NamedTensors* step_mask(const ParamSet&, const Batch&) override { return &mask_->masks; }

private:
    StrategyConfig cfg_;
    std::optional<FisherDiag> fisher_;
    std::optional<MaskSet> mask_;
    bool preset_ = false;
};

struct EwcAnchor {
    FisherDiag fisher;
    ParamSet anchor;
};

/// (λ/2) Σ_tasks Σ_i F_i (θ_i − θ*_i)²
double ewc_penalty(const ParamSet& params, const std::vector<EwcAnchor>& anchors, double lambda);
/// λ Σ_tasks F ⊙ (θ − θ*)
Gradients ewc_penalty_grad(const ParamSet& params, const std::vector<EwcAnchor>& anchors, double lambda);

class EwcStrategy final : public Strategy {
public:
    EwcStrategy(TrainConfig train, StrategyConfig cfg);
    StrategyKind kind() const noexcept override { return StrategyKind::Ewc; }
    const std::vector<EwcAnchor>& anchors() const noexcept { return anchors_; }

protected:
    void adjust_gradients(const ParamSet& params, Gradients& grads) override;
    void end_task(const ParamSet& params, const Dataset& train, TaskReport& report) override;

private:
    StrategyConfig cfg_;
    std::vector<EwcAnchor> anchors_;
};

/// Fixed-capacity sample store filled by reservoir sampling (Algorithm R): after n
/// offers every offered sample is retained with probability min(1, capacity/n).
class ReplayBuffer {
public:
    struct Sample {
        std::vector<double> x;
        int label = 0;
        std::size_t task = 0;
    };

    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void offer(Sample s, Rng& rng);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t seen() const noexcept { return seen_; }
    bool empty() const noexcept { return items_.empty(); }
    const std::vector<Sample>& items() const noexcept { return items_; }

    /// k draws with replacement.
    Dataset sample(std::size_t k, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t seen_ = 0;
    std::vector<Sample> items_;
};

class ReplayStrategy final : public Strategy {
public:
    ReplayStrategy(TrainConfig train, StrategyConfig cfg, std::uint64_t seed);
    StrategyKind kind() const noexcept override { return StrategyKind::Replay; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }

protected:
    Batch augment_batch(Batch batch) override;
    void end_task(const ParamSet& params, const Dataset& train, TaskReport& report) override;

private:
    StrategyConfig cfg_;
    ReplayBuffer buffer_;
    Rng mix_rng_;
    Rng reservoir_rng_;
    std::size_t task_ = 0;
};

/// Per-layer row mask keeping the output neurons whose mean |pre-activation| over
/// the batch is above the alpha-quantile; biases follow their layer's rows.
NamedTensors magnitude_row_mask(const ParamSet& params, const Tensor& inputs, double alpha);

/// Magnitude-based masking in the style of MIGU, recomputed from every batch.
class MiguStrategy final : public Strategy {
public:
    MiguStrategy(TrainConfig train, StrategyConfig cfg);
    StrategyKind kind() const noexcept override { return StrategyKind::Migu; }

protected:
    void begin_task(const ParamSet& params, const Dataset& train, TaskReport& report) override;
    const NamedTensors* step_mask(const ParamSet& params, const Batch& batch) override;
    void end_task(const ParamSet& params, const Dataset& train, TaskReport& report) override;

private:
    StrategyConfig cfg_;
    NamedTensors mask_;
    NamedTensors retained_sum_;
    std::size_t mask_steps_ = 0;
    std::size_t empty_steps_ = 0;
};

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& cfg, const TrainConfig& train, std::uint64_t seed);

}  // namespace fggm
