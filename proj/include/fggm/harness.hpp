// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fggm/model.hpp"
#include "fggm/strategies.hpp"

namespace fggm {

struct Task {
    std::string name;
    Dataset train;
    Dataset eval;
    std::size_t epochs = 1;
};

/// Ordered tasks plus a held-out "general" probe that is never trained on.
struct TaskStream {
    std::vector<Task> tasks;
    Dataset probe;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;

    void validate() const;
};

enum class StreamFamily { Permuted, Split };

std::string to_string(StreamFamily f);
StreamFamily parse_stream_family(std::string_view s);

/// Generator knobs. Class means are `separation * sqrt(noise_var)` times random unit
/// vectors, so `separation` is each mean's distance from the origin in noise
/// standard deviations; samples add N(0, noise_var * I).
struct StreamConfig {
    StreamFamily family = StreamFamily::Permuted;
    std::size_t num_tasks = 4;
    std::size_t n_per_task = 2000;  // training samples per task
    std::size_t n_eval = 500;       // eval samples per task
    std::size_t n_probe = 500;
    std::size_t input_dim = 32;
    std::size_t num_classes = 4;
    double separation = 3.0;
    double noise_var = 0.5;
    /// Fraction of coordinates shuffled by each task's permutation (permuted family).
    double permute_fraction = 1.0;
    /// Per-task epoch budget; a single value applies to every task.
    std::vector<std::size_t> epochs{1};

    void validate() const;
};

/// Task 1 is the unpermuted Gaussian mixture; task t > 1 applies a fixed
/// seed-determined permutation of the input coordinates to fresh draws.
TaskStream gen_permuted_tasks(std::uint64_t seed, const StreamConfig& cfg);

/// Task t classifies the class pair {2t, 2t+1} over a shared input space.
TaskStream gen_split_tasks(std::uint64_t seed, const StreamConfig& cfg);

TaskStream gen_stream(std::uint64_t seed, const StreamConfig& cfg);

/// Argmax accuracy; ties go to the lowest class index.
double evaluate(const ParamSet& params, const Dataset& split);

/// RD[t][i], accuracy on task i after training through task t (both 1-based, i <= t).
class RDMatrix {
public:
    explicit RDMatrix(std::size_t num_tasks = 0);

    std::size_t num_tasks() const noexcept { return rows_.size(); }
    void set(std::size_t t, std::size_t i, double value);
    double at(std::size_t t, std::size_t i) const;
    bool row_complete(std::size_t t) const;

    static RDMatrix from_rows(const std::vector<std::vector<double>>& rows);

private:
    std::vector<std::vector<double>> rows_;  // NaN marks an unset entry
};

/// OP_t = (1/t) Σ_{i<=t} RD[t][i].
double op_metric(const RDMatrix& rd, std::size_t t);
/// Mean of OP_t over t = 1..N.
double overall_op(const RDMatrix& rd);

struct EpochEval {
    std::size_t epoch = 0;
    double task_acc = 0.0;
    double general_acc = 0.0;
};

struct TaskRecord {
    std::size_t t = 0;  // 1-based
    std::string name;
    double op_t = 0.0;
    double general_acc = 0.0;
    double wall_ms = 0.0;
    TaskReport train;
    std::vector<EpochEval> epoch_evals;
};

struct RunOptions {
    bool eval_every_epoch = false;
    /// Evaluate the initial parameters on every task instead of training (the ORI row).
    bool original_only = false;
    /// Called with the parameters after each task (1-based t), e.g. to checkpoint.
    std::function<void(std::size_t t, const ParamSet&, const Strategy*)> on_task_end;
};

struct RunReport {
    std::string strategy;  // display label
    std::uint64_t seed = 0;
    std::optional<double> alpha;
    std::optional<Aggregation> aggregation;
    RDMatrix rd;
    std::vector<TaskRecord> tasks;
    double final_op = 0.0;
    double final_general = 0.0;
    /// RD[1][1] - RD[N][1]
    double forgetting_task1 = 0.0;
    double wall_ms = 0.0;
    ParamSet final_params;
};

/// Trains the stream in order. Randomness comes from named substreams of `seed`:
/// "init" for the parameters and "shuffle.<t>" for task t's batch order.
RunReport run_stream(const TaskStream& stream, const ModelSpec& model, const StrategyConfig& strategy,
                     const TrainConfig& train, std::uint64_t seed, const RunOptions& options = {});

/// One JSON object per (t, i) pair, in row order.
std::vector<nlohmann::ordered_json> jsonl_records(const RunReport& report, bool include_wall_ms);

}  // namespace fggm
