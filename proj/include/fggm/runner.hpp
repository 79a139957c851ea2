// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fggm/config.hpp"
#include "fggm/harness.hpp"

namespace fggm {

/// The three numbers that summarise one run.
struct RunMetrics {
    std::string strategy;
    std::uint64_t seed = 0;
    std::optional<double> alpha;
    std::optional<std::string> aggregation;
    double final_op = 0.0;
    double final_general = 0.0;
    double forgetting_task1 = 0.0;
};

RunMetrics metrics_of(const RunReport& report);

struct GroupStats {
    std::string strategy;
    std::optional<double> alpha;
    std::optional<std::string> aggregation;
    std::size_t n = 0;
    double final_op_mean = 0.0, final_op_std = 0.0;
    double final_general_mean = 0.0, final_general_std = 0.0;
    double forgetting_mean = 0.0, forgetting_std = 0.0;
};

/// Groups by (strategy, alpha, aggregation) in first-seen order. std is the sample
/// standard deviation (n - 1), 0 for a single run.
std::vector<GroupStats> summarize(const std::vector<RunMetrics>& runs);

/// Shortest round-trip decimal form, used in names and CSV cells.
std::string format_number(double v);

/// Trains one (config, seed) cell and writes its artifacts into `dir`:
/// run.jsonl, config.json, tasks.json, checkpoints and (optionally) masks.
RunReport run_cell(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

/// Directory name for a cell, e.g. "fggm_a0.7_IA_s3".
std::string cell_name(const RunConfig& cfg, std::uint64_t seed);

struct SweepOptions {
    std::vector<double> alphas;
    std::vector<StrategyKind> strategies;
    std::vector<Aggregation> aggregations;
    std::vector<std::uint64_t> seeds;  // empty: the config's seeds
    unsigned jobs = 1;                 // 0: hardware concurrency
};

struct SweepCell {
    std::string name;
    RunConfig config;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunMetrics metrics;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<GroupStats> groups;
    std::size_t failed = 0;
    /// Human-readable tables, as printed by the CLI.
    std::string text;
};

/// Cartesian product of the overrides with the seeds. alpha only multiplies
/// strategies that use it, aggregation only FGGM. Writes summary.csv and
/// sweep_table.csv (plus alpha_table.csv / ablation_table.csv when those axes are
/// swept) under `out`. A failing cell is recorded and the sweep carries on.
SweepResult run_sweep(const RunConfig& base, const SweepOptions& options, const std::filesystem::path& out);

struct ReportResult {
    std::vector<RunMetrics> runs;
    std::vector<GroupStats> groups;
    std::string text;
};

/// Reads every run.jsonl below `dir`, prints per-group mean ± std and writes
/// report.csv into `dir`. Malformed lines raise a Validation error naming the file
/// and line; a directory without runs raises a Config error.
ReportResult build_report(const std::filesystem::path& dir);

/// Recomputes a run's metrics from its run.jsonl records.
RunMetrics metrics_from_jsonl(const std::filesystem::path& file);

}  // namespace fggm
