// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

// fggm: run, sweep and report continual fine-tuning experiments.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fggm/fggm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code(fggm_status s) {
    switch (s) {
        case FGGM_OK: return kExitOk;
        case FGGM_ERR_CONFIG:
        case FGGM_ERR_VALIDATION:
        case FGGM_ERR_ARGUMENT: return kExitUsage;
        default: return kExitRuntime;
    }
}

int report_failure(const char* what, fggm_status s) {
    std::cerr << "fggm " << what << ": " << fggm_status_string(s) << ": " << fggm_last_error() << '\n';
    return exit_code(s);
}

void print_and_free(char* text) {
    if (text) {
        std::cout << text;
        fggm_string_free(text);
    }
}

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    unsigned jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "override a config value, KEY=VAL (repeatable)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--jobs", c.jobs, "worker threads (0 = all cores)");
}

/// Loads the config, applies overrides and resolves the output root:
/// --out, then the config's output_dir, then $FGGM_OUT, then ./runs.
int prepare(const Common& c, fggm_config** cfg, std::string& out_dir) {
    fggm_status s = fggm_config_load(c.config_path.c_str(), cfg);
    if (s != FGGM_OK) return report_failure("config", s);
    for (const auto& a : c.sets) {
        s = fggm_config_set(*cfg, a.c_str());
        if (s != FGGM_OK) return report_failure("config", s);
    }
    out_dir = c.out;
    if (out_dir.empty()) {
        char* from_cfg = nullptr;
        if (fggm_config_output_dir(*cfg, &from_cfg) == FGGM_OK) {
            out_dir = from_cfg;
            fggm_string_free(from_cfg);
        }
    }
    if (out_dir.empty()) {
        const char* env = std::getenv("FGGM_OUT");
        out_dir = env && *env ? env : "runs";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher-guided gradient masking for continual fine-tuning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fggm_version());

    Common run_opts;
    CLI::App* run = app.add_subcommand("run", "train one config over its seeds");
    add_common(run, run_opts);
    std::vector<std::uint64_t> run_seeds;
    run->add_option("--seeds", run_seeds, "seeds (CSV)")->delimiter(',');

    Common sweep_opts;
    CLI::App* sweep = app.add_subcommand("sweep", "grid over masking rate, strategy and aggregation");
    add_common(sweep, sweep_opts);
    std::vector<double> alphas;
    std::string strategies, aggregations;
    std::vector<std::uint64_t> sweep_seeds;
    sweep->add_option("--alpha", alphas, "masking rates (CSV)")->delimiter(',');
    sweep->add_option("--strategies", strategies, "strategies (CSV): fggm,sft,ewc,replay,migu");
    sweep->add_option("--aggregations", aggregations, "aggregations (CSV): IA,None,OA");
    sweep->add_option("--seeds", sweep_seeds, "seeds (CSV)")->delimiter(',');

    std::string report_dir;
    CLI::App* report = app.add_subcommand("report", "summarise run.jsonl files below a directory");
    report->add_option("dir", report_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (*report) {
        char* text = nullptr;
        const fggm_status s = fggm_report(report_dir.c_str(), &text);
        if (s != FGGM_OK) return report_failure("report", s);
        print_and_free(text);
        return kExitOk;
    }

    const bool is_sweep = static_cast<bool>(*sweep);
    const Common& c = is_sweep ? sweep_opts : run_opts;
    fggm_config* cfg = nullptr;
    std::string out_dir;
    if (const int rc = prepare(c, &cfg, out_dir); rc != kExitOk) {
        fggm_config_free(cfg);
        return rc;
    }

    fggm_sweep_options opts{};
    const auto& seeds = is_sweep ? sweep_seeds : run_seeds;
    opts.seeds = seeds.empty() ? nullptr : seeds.data();
    opts.n_seeds = seeds.size();
    opts.jobs = c.jobs;
    if (is_sweep) {
        opts.alphas = alphas.empty() ? nullptr : alphas.data();
        opts.n_alphas = alphas.size();
        opts.strategies = strategies.c_str();
        opts.aggregations = aggregations.c_str();
    }

    char* text = nullptr;
    const fggm_status s = fggm_sweep(cfg, &opts, out_dir.c_str(), &text, nullptr);
    fggm_config_free(cfg);
    print_and_free(text);
    if (s != FGGM_OK) return report_failure(is_sweep ? "sweep" : "run", s);
    std::cout << "artifacts written to " << out_dir << '\n';
    return kExitOk;
}
