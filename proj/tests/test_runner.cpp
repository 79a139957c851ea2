// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fggm/runner.hpp"

using namespace fggm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fggm_runner_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig tiny_config() {
    return parse_run_config_text(R"({
        "model": {"hidden_dims": [8]},
        "stream": {"num_tasks": 2, "n_per_task": 64, "n_eval": 32, "n_probe": 32, "input_dim": 6, "num_classes": 3},
        "optimizer": {"batch_size": 16}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("format_number round-trips") {
    CHECK(format_number(0.7) == "0.7");
    CHECK(format_number(1.0) == "1");
    CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("summarize: groups in first-seen order, sample std") {
    std::vector<RunMetrics> runs{{"FGGM", 0, 0.7, "IA", 0.5, 0.25, 0.1},
                                 {"SFT", 0, std::nullopt, std::nullopt, 0.4, 0.2, 0.3},
                                 {"FGGM", 1, 0.7, "IA", 0.7, 0.75, 0.3}};
    const auto g = summarize(runs);
    REQUIRE(g.size() == 2);
    CHECK(g[0].strategy == "FGGM");
    CHECK(g[0].n == 2);
    CHECK(g[0].final_op_mean == doctest::Approx(0.6));
    CHECK(g[0].final_general_std == doctest::Approx(std::sqrt(0.125)));
    CHECK(g[1].final_op_std == 0.0);
}

TEST_CASE("cell names") {
    RunConfig c = tiny_config();
    CHECK(cell_name(c, 3) == "fggm_a0.7_IA_s3");
    c.strategy.kind = StrategyKind::Sft;
    CHECK(cell_name(c, 0) == "sft_s0");
    c.strategy.kind = StrategyKind::Migu;
    c.strategy.alpha = 0.5;
    CHECK(cell_name(c, 1) == "migu_a0.5_s1");
}

TEST_CASE("run_cell writes its artifacts and metrics survive the round trip") {
    const fs::path dir = fresh_dir("cell");
    RunConfig c = tiny_config();
    c.harness.save_masks = true;
    const RunReport r = run_cell(c, 5, dir);
    for (const char* f : {"run.jsonl", "config.json", "tasks.json", "task1.ckpt", "task2.ckpt", "final.ckpt",
                          "task1.mask", "task1.fisher"})
        CHECK(fs::exists(dir / f));
    CHECK(load_checkpoint(dir / "final.ckpt").bit_equal(r.final_params));
    const RunMetrics m = metrics_from_jsonl(dir / "run.jsonl");
    CHECK(m.final_op == r.final_op);
    CHECK(m.final_general == r.final_general);
    CHECK(m.forgetting_task1 == r.forgetting_task1);
    CHECK(m.alpha == 0.7);
    CHECK(m.aggregation == "IA");
    // config echo parses back
    CHECK_NOTHROW(parse_run_config_text(slurp(dir / "config.json")));
}

TEST_CASE("sweeps: cell product, tables and failure isolation") {
    const fs::path dir = fresh_dir("sweep");
    SweepOptions o;
    o.strategies = {StrategyKind::Fggm, StrategyKind::Sft};
    o.alphas = {0.5, 0.9};
    o.seeds = {0, 1};
    const SweepResult r = run_sweep(tiny_config(), o, dir);
    CHECK(r.cells.size() == 6);  // 2 alphas x 2 seeds for FGGM, 2 seeds for SFT
    CHECK(r.failed == 0);
    CHECK(r.groups.size() == 3);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "sweep_table.csv"));
    CHECK(fs::exists(dir / "alpha_table.csv"));
    CHECK_FALSE(fs::exists(dir / "ablation_table.csv"));
    CHECK(r.text.find("masking rate sweep") != std::string::npos);

    // invalid grid values are a config error before anything runs
    try {
        run_sweep(tiny_config(), SweepOptions{{1.5}, {}, {}, {}, 1}, fresh_dir("sweep_bad"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

TEST_CASE("a failing sweep cell does not stop the others") {
    const fs::path dir = fresh_dir("sweep_fail");
    std::ofstream(dir / "fggm_a0.7_IA_s1") << "in the way";
    SweepOptions o;
    o.seeds = {0, 1, 2};
    const SweepResult r = run_sweep(tiny_config(), o, dir);
    CHECK(r.failed == 1);
    CHECK_FALSE(r.cells[1].ok);
    CHECK(r.cells[0].ok);
    CHECK(r.cells[2].ok);
    CHECK(r.groups[0].n == 2);
    CHECK(r.text.find("fggm_a0.7_IA_s1") != std::string::npos);
}

TEST_CASE("report: recomputes per-run metrics and rejects malformed input") {
    const fs::path dir = fresh_dir("report");
    SweepOptions o;
    o.seeds = {0, 1, 2};
    run_sweep(tiny_config(), o, dir);
    const ReportResult r = build_report(dir);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].n == 3);
    CHECK(r.groups[0].final_op_mean ==
          doctest::Approx((r.runs[0].final_op + r.runs[1].final_op + r.runs[2].final_op) / 3.0));
    CHECK(fs::exists(dir / "report.csv"));

    const fs::path empty = fresh_dir("report_empty");
    try {
        build_report(empty);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }

    std::ofstream(dir / "fggm_a0.7_IA_s1" / "run.jsonl", std::ios::app) << "{\"t\": oops}\n";
    try {
        build_report(dir);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
}
