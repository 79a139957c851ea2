// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fggm/random.hpp"

namespace fggm {

void TaskStream::validate() const {
    if (tasks.empty()) fail(ErrorKind::Validation, "task stream has no tasks");
    for (const auto& t : tasks) {
        t.train.validate(input_dim, num_classes);
        t.eval.validate(input_dim, num_classes);
        if (t.epochs < 1) fail(ErrorKind::Validation, "task '" + t.name + "' has an epoch budget of 0");
    }
    probe.validate(input_dim, num_classes);
}

std::string to_string(StreamFamily f) { return f == StreamFamily::Permuted ? "permuted" : "split"; }

StreamFamily parse_stream_family(std::string_view s) {
    if (s == "permuted") return StreamFamily::Permuted;
    if (s == "split") return StreamFamily::Split;
    fail(ErrorKind::Validation, "unknown stream family '" + std::string(s) + "' (expected permuted or split)");
}

void StreamConfig::validate() const {
    if (input_dim < 2) fail(ErrorKind::Validation, "stream input_dim must be >= 2");
    if (num_classes < 2) fail(ErrorKind::Validation, "stream num_classes must be >= 2");
    if (num_tasks < 1) fail(ErrorKind::Validation, "stream num_tasks must be >= 1");
    if (n_per_task < 1 || n_eval < 1 || n_probe < 1)
        fail(ErrorKind::Validation, "stream sample counts must be >= 1");
    if (!(separation > 0.0) || !std::isfinite(separation)) fail(ErrorKind::Validation, "separation must be > 0");
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) fail(ErrorKind::Validation, "noise_var must be > 0");
    if (!(permute_fraction >= 0.0 && permute_fraction <= 1.0))
        fail(ErrorKind::Validation, "permute_fraction must lie in [0, 1]");
    if (epochs.empty() || (epochs.size() != 1 && epochs.size() != num_tasks))
        fail(ErrorKind::Validation, "epochs must list one value or one per task (" + std::to_string(num_tasks) + ")");
    for (auto e : epochs)
        if (e < 1) fail(ErrorKind::Validation, "epochs must be >= 1");
    if (family == StreamFamily::Split && num_classes < 2 * num_tasks)
        fail(ErrorKind::Validation, "split stream needs num_classes >= 2 * num_tasks (" +
                                        std::to_string(num_classes) + " < " + std::to_string(2 * num_tasks) + ")");
}

namespace {

std::vector<std::vector<double>> class_means(Rng& rng, const StreamConfig& cfg) {
    const double radius = cfg.separation * std::sqrt(cfg.noise_var);
    std::vector<std::vector<double>> means(cfg.num_classes, std::vector<double>(cfg.input_dim));
    for (auto& mu : means) {
        double norm2 = 0.0;
        for (auto& v : mu) {
            v = rng.normal();
            norm2 += v * v;
        }
        const double s = radius / std::sqrt(norm2);
        for (auto& v : mu) v *= s;
    }
    return means;
}

/// n draws, labels cycling uniformly over `classes` in random order, coordinates
/// remapped by `perm` (output[j] = sample[perm[j]]).
Dataset draw(Rng& rng, const StreamConfig& cfg, const std::vector<std::vector<double>>& means,
             const std::vector<int>& classes, const std::vector<std::size_t>& perm, std::size_t n) {
    const std::size_t d = cfg.input_dim;
    const double sd = std::sqrt(cfg.noise_var);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = classes[i % classes.size()];
    rng.shuffle(labels);
    std::vector<double> data(n * d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = means[static_cast<std::size_t>(labels[i])];
        for (std::size_t j = 0; j < d; ++j) x[j] = mu[j] + sd * rng.normal();
        for (std::size_t j = 0; j < d; ++j) data[i * d + j] = x[perm[j]];
    }
    return Dataset{Tensor({n, d}, std::move(data)), std::move(labels)};
}

std::vector<std::size_t> identity(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    return p;
}

/// Shuffles a seed-chosen subset of round(fraction * n) coordinates among themselves.
std::vector<std::size_t> partial_permutation(Rng& rng, std::size_t n, double fraction) {
    auto p = identity(n);
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (k < 2) return p;
    auto chosen = rng.permutation(n);
    chosen.resize(k);
    auto targets = chosen;
    rng.shuffle(targets);
    for (std::size_t i = 0; i < k; ++i) p[chosen[i]] = targets[i];
    return p;
}

std::size_t epochs_for(const StreamConfig& cfg, std::size_t t) {
    return cfg.epochs.size() == 1 ? cfg.epochs[0] : cfg.epochs[t];
}

}  // namespace

TaskStream gen_permuted_tasks(std::uint64_t seed, const StreamConfig& cfg) {
    cfg.validate();
    Rng mean_rng = substream(seed, "stream.means");
    Rng perm_rng = substream(seed, "stream.permutations");
    Rng sample_rng = substream(seed, "stream.samples");
    const auto means = class_means(mean_rng, cfg);
    std::vector<int> classes(cfg.num_classes);
    for (std::size_t c = 0; c < cfg.num_classes; ++c) classes[c] = static_cast<int>(c);

    TaskStream s;
    s.input_dim = cfg.input_dim;
    s.num_classes = cfg.num_classes;
    for (std::size_t t = 0; t < cfg.num_tasks; ++t) {
        const auto perm = t == 0 ? identity(cfg.input_dim) : partial_permutation(perm_rng, cfg.input_dim, cfg.permute_fraction);
        Task task;
        task.name = "permuted-" + std::to_string(t + 1);
        task.train = draw(sample_rng, cfg, means, classes, perm, cfg.n_per_task);
        task.eval = draw(sample_rng, cfg, means, classes, perm, cfg.n_eval);
        task.epochs = epochs_for(cfg, t);
        s.tasks.push_back(std::move(task));
    }
    s.probe = draw(sample_rng, cfg, means, classes, identity(cfg.input_dim), cfg.n_probe);
    return s;
}

TaskStream gen_split_tasks(std::uint64_t seed, const StreamConfig& cfg) {
    StreamConfig checked = cfg;
    checked.family = StreamFamily::Split;
    checked.validate();
    Rng mean_rng = substream(seed, "stream.means");
    Rng sample_rng = substream(seed, "stream.samples");
    const auto means = class_means(mean_rng, cfg);
    const auto id = identity(cfg.input_dim);

    TaskStream s;
    s.input_dim = cfg.input_dim;
    s.num_classes = cfg.num_classes;
    for (std::size_t t = 0; t < cfg.num_tasks; ++t) {
        const std::vector<int> pair{static_cast<int>(2 * t), static_cast<int>(2 * t + 1)};
        Task task;
        task.name = "split-" + std::to_string(2 * t) + "-" + std::to_string(2 * t + 1);
        task.train = draw(sample_rng, cfg, means, pair, id, cfg.n_per_task);
        task.eval = draw(sample_rng, cfg, means, pair, id, cfg.n_eval);
        task.epochs = epochs_for(cfg, t);
        s.tasks.push_back(std::move(task));
    }
    s.probe = draw(sample_rng, cfg, means, {0, 1}, id, cfg.n_probe);
    return s;
}

TaskStream gen_stream(std::uint64_t seed, const StreamConfig& cfg) {
    return cfg.family == StreamFamily::Permuted ? gen_permuted_tasks(seed, cfg) : gen_split_tasks(seed, cfg);
}

double evaluate(const ParamSet& params, const Dataset& split) {
    if (split.size() == 0) fail(ErrorKind::Validation, "evaluate: empty split");
    const auto pred = predict(params, split.inputs);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == split.labels[i];
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

RDMatrix::RDMatrix(std::size_t num_tasks) {
    for (std::size_t t = 1; t <= num_tasks; ++t) rows_.emplace_back(t, std::numeric_limits<double>::quiet_NaN());
}

void RDMatrix::set(std::size_t t, std::size_t i, double value) {
    if (t < 1 || t > rows_.size() || i < 1 || i > t)
        fail(ErrorKind::Contract, "RD index (" + std::to_string(t) + ", " + std::to_string(i) + ") outside the lower triangle");
    if (!(value >= 0.0 && value <= 1.0)) fail(ErrorKind::Validation, "RD entries must lie in [0, 1]");
    rows_[t - 1][i - 1] = value;
}

double RDMatrix::at(std::size_t t, std::size_t i) const {
    if (t < 1 || t > rows_.size() || i < 1 || i > t)
        fail(ErrorKind::Contract, "RD index (" + std::to_string(t) + ", " + std::to_string(i) + ") outside the lower triangle");
    return rows_[t - 1][i - 1];
}

bool RDMatrix::row_complete(std::size_t t) const {
    if (t < 1 || t > rows_.size()) return false;
    for (double v : rows_[t - 1])
        if (std::isnan(v)) return false;
    return true;
}

RDMatrix RDMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    RDMatrix rd(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() > t + 1)
            fail(ErrorKind::Contract, "RD row " + std::to_string(t + 1) + " has more than " + std::to_string(t + 1) + " entries");
        for (std::size_t i = 0; i < rows[t].size(); ++i) rd.set(t + 1, i + 1, rows[t][i]);
    }
    return rd;
}

double op_metric(const RDMatrix& rd, std::size_t t) {
    if (!rd.row_complete(t)) fail(ErrorKind::Contract, "OP_" + std::to_string(t) + ": RD row is incomplete");
    double s = 0.0;
    for (std::size_t i = 1; i <= t; ++i) s += rd.at(t, i);
    return s / static_cast<double>(t);
}

double overall_op(const RDMatrix& rd) {
    if (rd.num_tasks() == 0) fail(ErrorKind::Contract, "OP of an empty RD matrix");
    double s = 0.0;
    for (std::size_t t = 1; t <= rd.num_tasks(); ++t) s += op_metric(rd, t);
    return s / static_cast<double>(rd.num_tasks());
}

RunReport run_stream(const TaskStream& stream, const ModelSpec& model, const StrategyConfig& strategy_cfg,
                     const TrainConfig& train, std::uint64_t seed, const RunOptions& options) {
    using Clock = std::chrono::steady_clock;
    const auto run_start = Clock::now();
    stream.validate();
    model.validate();
    if (model.input_dim != stream.input_dim || model.num_classes != stream.num_classes)
        fail(ErrorKind::Validation, "model dims do not match the task stream");

    RunReport report;
    report.seed = seed;
    report.strategy = options.original_only ? "ORI" : strategy_label(strategy_cfg.kind);
    if (!options.original_only && strategy_cfg.uses_alpha()) report.alpha = strategy_cfg.alpha;
    if (!options.original_only && strategy_cfg.uses_aggregation()) report.aggregation = strategy_cfg.aggregation;

    const std::size_t n = stream.tasks.size();
    report.rd = RDMatrix(n);
    ParamSet params = init_params(model, substream_seed(seed, "init"));
    std::unique_ptr<Strategy> strategy;
    if (!options.original_only) strategy = make_strategy(strategy_cfg, train, substream_seed(seed, "strategy"));

    for (std::size_t t = 1; t <= n; ++t) {
        const auto task_start = Clock::now();
        const Task& task = stream.tasks[t - 1];
        TaskRecord rec;
        rec.t = t;
        rec.name = task.name;
        if (strategy) {
            TaskContext ctx;
            ctx.task_index = t - 1;
            ctx.shuffle_seed = substream_seed(seed, "shuffle." + std::to_string(t));
            ctx.epochs = task.epochs;
            if (options.eval_every_epoch)
                ctx.on_epoch_end = [&](std::size_t epoch, const ParamSet& p) {
                    rec.epoch_evals.push_back(EpochEval{epoch, evaluate(p, task.eval), evaluate(p, stream.probe)});
                };
            try {
                rec.train = strategy->train_task(params, task.train, ctx);
            } catch (const Error& e) {
                throw Error(e.kind(), "task " + std::to_string(t) + " (" + task.name + "): " + e.what());
            }
        }
        for (std::size_t i = 1; i <= t; ++i) report.rd.set(t, i, evaluate(params, stream.tasks[i - 1].eval));
        rec.op_t = op_metric(report.rd, t);
        rec.general_acc = evaluate(params, stream.probe);
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - task_start).count();
        if (options.on_task_end) options.on_task_end(t, params, strategy.get());
        report.tasks.push_back(std::move(rec));
    }

    report.final_op = overall_op(report.rd);
    report.final_general = report.tasks.back().general_acc;
    report.forgetting_task1 = report.rd.at(1, 1) - report.rd.at(n, 1);
    report.final_params = std::move(params);
    report.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - run_start).count();
    return report;
}

std::vector<nlohmann::ordered_json> jsonl_records(const RunReport& report, bool include_wall_ms) {
    std::vector<nlohmann::ordered_json> out;
    for (const auto& rec : report.tasks) {
        for (std::size_t i = 1; i <= rec.t; ++i) {
            nlohmann::ordered_json j;
            j["strategy"] = report.strategy;
            j["seed"] = report.seed;
            j["alpha"] = report.alpha ? nlohmann::ordered_json(*report.alpha) : nlohmann::ordered_json(nullptr);
            j["aggregation"] =
                report.aggregation ? nlohmann::ordered_json(to_string(*report.aggregation)) : nlohmann::ordered_json(nullptr);
            j["t"] = rec.t;
            j["i"] = i;
            j["rd"] = report.rd.at(rec.t, i);
            j["op_t"] = rec.op_t;
            j["general_acc"] = rec.general_acc;
            j["wall_ms"] = include_wall_ms ? std::round(rec.wall_ms) : 0.0;
            out.push_back(std::move(j));
        }
    }
    return out;
}

}  // namespace fggm
