// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fggm {

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorKind::Validation, "epochs must be >= 1");
    if (batch_size < 1) fail(ErrorKind::Validation, "batch_size must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorKind::Validation, "lr must be finite and >= 0");
    if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) || !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0))
        fail(ErrorKind::Validation, "AdamW betas must lie in [0, 1)");
    if (!(adamw.eps > 0.0)) fail(ErrorKind::Validation, "AdamW eps must be > 0");
    if (!(adamw.weight_decay >= 0.0)) fail(ErrorKind::Validation, "weight_decay must be >= 0");
}

std::string to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::Fggm: return "fggm";
        case StrategyKind::Sft: return "sft";
        case StrategyKind::Ewc: return "ewc";
        case StrategyKind::Replay: return "replay";
        case StrategyKind::Migu: return "migu";
    }
    return "?";
}

StrategyKind parse_strategy_kind(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "fggm") return StrategyKind::Fggm;
    if (lower == "sft") return StrategyKind::Sft;
    if (lower == "ewc") return StrategyKind::Ewc;
    if (lower == "replay" || lower == "rep") return StrategyKind::Replay;
    if (lower == "migu" || lower == "migu-style") return StrategyKind::Migu;
    fail(ErrorKind::Validation, "unknown strategy '" + std::string(s) + "' (expected fggm, sft, ewc, replay, migu)");
}

std::string strategy_label(StrategyKind k) {
    switch (k) {
        case StrategyKind::Fggm: return "FGGM";
        case StrategyKind::Sft: return "SFT";
        case StrategyKind::Ewc: return "EWC";
        case StrategyKind::Replay: return "REPLAY";
        case StrategyKind::Migu: return "MIGU-style";
    }
    return "?";
}

void StrategyConfig::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) fail(ErrorKind::Validation, "alpha must lie in [0, 1)");
    if (!(ewc_lambda >= 0.0) || !std::isfinite(ewc_lambda)) fail(ErrorKind::Validation, "ewc lambda must be >= 0");
    if (!(replay_ratio >= 0.0) || !std::isfinite(replay_ratio)) fail(ErrorKind::Validation, "replay_ratio must be >= 0");
    if (fisher_mode.kind == FisherMode::Kind::PerBatch && fisher_mode.batch_size < 1)
        fail(ErrorKind::Validation, "fisher batch size must be >= 1");
    if (fisher_samples && *fisher_samples < 1) fail(ErrorKind::Validation, "fisher_samples must be >= 1");
}

namespace {

Dataset fisher_subset(const Dataset& train, const std::optional<std::size_t>& limit) {
    if (!limit || *limit >= train.size()) return train;
    return train.slice(0, *limit);
}

}  // namespace

// ---------------------------------------------------------------------------
// shared loop

TaskReport Strategy::train_task(ParamSet& params, const Dataset& train, const TaskContext& ctx) {
    if (train.size() == 0) fail(ErrorKind::Validation, "cannot train on an empty task");
    TaskReport report;
    begin_task(params, train, report);

    const std::size_t n = train.size();
    const std::size_t epochs = ctx.epochs ? ctx.epochs : train_.epochs;
    const std::size_t per_epoch = (n + train_.batch_size - 1) / train_.batch_size;
    const std::size_t total = per_epoch * epochs;
    const LinearDecay schedule(train_.lr, total);
    AdamWState state(params);
    Rng shuffle_rng(ctx.shuffle_seed);
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < per_epoch; ++b) {
            const std::size_t lo = b * train_.batch_size;
            const std::size_t hi = std::min(n, lo + train_.batch_size);
            const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
            Batch batch = augment_batch(train.gather(rows));

            auto [loss_value, grads] = loss_and_grads(params, batch);
            adjust_gradients(params, grads);
            const NamedTensors* mask = step_mask(params, batch);
            const double lr = train_.linear_decay ? schedule.lr(report.steps) : train_.lr;
            if (train_.optimizer == OptimizerKind::AdamW)
                adamw_step(params, grads, state, train_.adamw, lr, mask);
            else
                sgd_step(params, grads, lr, mask);
            ++report.steps;
            epoch_loss += loss_value;
        }
        report.epoch_losses.push_back(epoch_loss / static_cast<double>(per_epoch));
        if (ctx.on_epoch_end) ctx.on_epoch_end(epoch, params);
    }
    report.final_train_loss = report.epoch_losses.back();
    end_task(params, train, report);
    return report;
}

// ---------------------------------------------------------------------------
// FGGM

FggmStrategy::FggmStrategy(TrainConfig train, StrategyConfig cfg) : Strategy(train), cfg_(cfg) { cfg_.validate(); }

void FggmStrategy::begin_task(const ParamSet& params, const Dataset& train, TaskReport& report) {
    if (!preset_) {
        fisher_ = estimate_diag_fim(params, fisher_subset(train, cfg_.fisher_samples), cfg_.fisher_mode);
        mask_ = build_mask(*fisher_, cfg_.alpha, cfg_.aggregation, cfg_.mask_mode);
    }
    params.require_same_layout(mask_->masks, "fggm mask");
    report.retained_fractions = mask_->retained_fractions();
    if (mask_->empty_support())
        report.warnings.push_back("fisher scores are fully tied: mask is empty and the task trains nothing");
}

TaskReport FggmStrategy::train_task_with_mask(ParamSet& params, const Dataset& train, MaskSet mask,
                                              const TaskContext& ctx) {
    mask_ = std::move(mask);
    fisher_.reset();
    preset_ = true;
    struct Reset {
        bool& flag;
        ~Reset() { flag = false; }
    } reset{preset_};
    return train_task(params, train, ctx);
}

// ---------------------------------------------------------------------------
// EWC

double ewc_penalty(const ParamSet& params, const std::vector<EwcAnchor>& anchors, double lambda) {
    double total = 0.0;
    for (const auto& a : anchors) {
        params.require_same_layout(a.anchor, "ewc anchor");
        params.require_same_layout(a.fisher.scores, "ewc fisher");
        for (std::size_t k = 0; k < params.size(); ++k) {
            const auto p = params[k].tensor.data();
            const auto s = a.anchor[k].tensor.data();
            const auto f = a.fisher.scores[k].tensor.data();
            for (std::size_t i = 0; i < p.size(); ++i) total += f[i] * (p[i] - s[i]) * (p[i] - s[i]);
        }
    }
    return 0.5 * lambda * total;
}

Gradients ewc_penalty_grad(const ParamSet& params, const std::vector<EwcAnchor>& anchors, double lambda) {
    Gradients g = NamedTensors::zeros_like(params);
    for (const auto& a : anchors) {
        params.require_same_layout(a.anchor, "ewc anchor");
        params.require_same_layout(a.fisher.scores, "ewc fisher");
        for (std::size_t k = 0; k < params.size(); ++k) {
            const auto p = params[k].tensor.data();
            const auto s = a.anchor[k].tensor.data();
            const auto f = a.fisher.scores[k].tensor.data();
            auto out = g[k].tensor.data();
            for (std::size_t i = 0; i < p.size(); ++i) out[i] += lambda * f[i] * (p[i] - s[i]);
        }
    }
    return g;
}

EwcStrategy::EwcStrategy(TrainConfig train, StrategyConfig cfg) : Strategy(train), cfg_(cfg) { cfg_.validate(); }

void EwcStrategy::adjust_gradients(const ParamSet& params, Gradients& grads) {
    if (cfg_.ewc_lambda == 0.0 || anchors_.empty()) return;
    const Gradients pen = ewc_penalty_grad(params, anchors_, cfg_.ewc_lambda);
    for (std::size_t k = 0; k < grads.size(); ++k) {
        auto g = grads[k].tensor.data();
        const auto p = pen[k].tensor.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += p[i];
    }
}

void EwcStrategy::end_task(const ParamSet& params, const Dataset& train, TaskReport&) {
    anchors_.push_back(
        EwcAnchor{estimate_diag_fim(params, fisher_subset(train, cfg_.fisher_samples), cfg_.fisher_mode), params});
}

// ---------------------------------------------------------------------------
// replay

void ReplayBuffer::offer(Sample s, Rng& rng) {
    ++seen_;
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(s));
        return;
    }
    const std::uint64_t j = rng.below(seen_);
    if (j < capacity_) items_[j] = std::move(s);
}

Dataset ReplayBuffer::sample(std::size_t k, Rng& rng) const {
    if (items_.empty()) fail(ErrorKind::Contract, "sampling from an empty replay buffer");
    const std::size_t d = items_.front().x.size();
    std::vector<double> data;
    data.reserve(k * d);
    std::vector<int> labels;
    labels.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Sample& s = items_[rng.below(items_.size())];
        data.insert(data.end(), s.x.begin(), s.x.end());
        labels.push_back(s.label);
    }
    return Dataset{Tensor({k, d}, std::move(data)), std::move(labels)};
}

ReplayStrategy::ReplayStrategy(TrainConfig train, StrategyConfig cfg, std::uint64_t seed)
    : Strategy(train),
      cfg_(cfg),
      buffer_(cfg.buffer_size),
      mix_rng_(substream_seed(seed, "replay.mix")),
      reservoir_rng_(substream_seed(seed, "replay.reservoir")) {
    cfg_.validate();
}

Batch ReplayStrategy::augment_batch(Batch batch) {
    if (buffer_.empty() || cfg_.replay_ratio == 0.0) return batch;
    const auto k = static_cast<std::size_t>(std::llround(cfg_.replay_ratio * static_cast<double>(batch.size())));
    if (k == 0) return batch;
    return Dataset::concat(batch, buffer_.sample(k, mix_rng_));
}

void ReplayStrategy::end_task(const ParamSet&, const Dataset& train, TaskReport&) {
    const std::size_t d = train.dim();
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto row = train.inputs.data().subspan(i * d, d);
        buffer_.offer(ReplayBuffer::Sample{{row.begin(), row.end()}, train.labels[i], task_}, reservoir_rng_);
    }
    ++task_;
}

// ---------------------------------------------------------------------------
// MIGU-style magnitude masking

NamedTensors magnitude_row_mask(const ParamSet& params, const Tensor& inputs, double alpha) {
    const ForwardTrace trace = forward_trace(params, inputs);
    NamedTensors mask;
    const double inv_b = 1.0 / static_cast<double>(inputs.rows());
    for (std::size_t l = 0; l < trace.pre_activations.size(); ++l) {
        const Tensor& z = trace.pre_activations[l];
        std::vector<double> magnitude(z.cols(), 0.0);
        for (std::size_t b = 0; b < z.rows(); ++b)
            for (std::size_t r = 0; r < z.cols(); ++r) magnitude[r] += std::abs(z.at(b, r));
        for (auto& m : magnitude) m *= inv_b;
        const auto keep = threshold_scores(magnitude, alpha);

        const Tensor& w = params.at(weight_name(l));
        Tensor wm(w.shape());
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t c = 0; c < w.cols(); ++c) wm.at(r, c) = keep[r];
        mask.insert(weight_name(l), std::move(wm));
        mask.insert(bias_name(l), Tensor::vector(keep));
    }
    return mask;
}

MiguStrategy::MiguStrategy(TrainConfig train, StrategyConfig cfg) : Strategy(train), cfg_(cfg) { cfg_.validate(); }

void MiguStrategy::begin_task(const ParamSet& params, const Dataset&, TaskReport&) {
    retained_sum_ = NamedTensors::zeros_like(params);
    mask_steps_ = 0;
    empty_steps_ = 0;
}

const NamedTensors* MiguStrategy::step_mask(const ParamSet& params, const Batch& batch) {
    mask_ = magnitude_row_mask(params, batch.inputs, cfg_.alpha);
    bool any = false;
    for (std::size_t k = 0; k < mask_.size(); ++k) {
        auto acc = retained_sum_[k].tensor.data();
        const auto m = mask_[k].tensor.data();
        for (std::size_t i = 0; i < m.size(); ++i) {
            acc[i] += m[i];
            any = any || m[i] != 0.0;
        }
    }
    ++mask_steps_;
    if (!any) ++empty_steps_;
    return &mask_;
}

void MiguStrategy::end_task(const ParamSet&, const Dataset&, TaskReport& report) {
    const double inv = mask_steps_ ? 1.0 / static_cast<double>(mask_steps_) : 0.0;
    for (const auto& e : retained_sum_) {
        const double mean = std::accumulate(e.tensor.data().begin(), e.tensor.data().end(), 0.0) /
                            static_cast<double>(e.tensor.numel());
        report.retained_fractions.emplace_back(e.name, mean * inv);
    }
    if (empty_steps_ > 0)
        report.warnings.push_back(std::to_string(empty_steps_) +
                                  " steps had fully tied activation magnitudes and updated nothing");
}

std::unique_ptr<Strategy> make_strategy(const StrategyConfig& cfg, const TrainConfig& train, std::uint64_t seed) {
    cfg.validate();
    switch (cfg.kind) {
        case StrategyKind::Fggm: return std::make_unique<FggmStrategy>(train, cfg);
        case StrategyKind::Sft: return std::make_unique<SftStrategy>(train);
        case StrategyKind::Ewc: return std::make_unique<EwcStrategy>(train, cfg);
        case StrategyKind::Replay: return std::make_unique<ReplayStrategy>(train, cfg, seed);
        case StrategyKind::Migu: return std::make_unique<MiguStrategy>(train, cfg);
    }
    fail(ErrorKind::Contract, "unhandled strategy kind");
}

}  // namespace fggm
