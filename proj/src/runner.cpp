// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "fggm/tensor_file.hpp"

namespace fggm {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

RunMetrics metrics_of(const RunReport& report) {
    RunMetrics m;
    m.strategy = report.strategy;
    m.seed = report.seed;
    m.alpha = report.alpha;
    if (report.aggregation) m.aggregation = to_string(*report.aggregation);
    m.final_op = report.final_op;
    m.final_general = report.final_general;
    m.forgetting_task1 = report.forgetting_task1;
    return m;
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    double s = 0.0;
    for (double x : xs) s += x;
    mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        sd = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string opt_alpha(const std::optional<double>& a) { return a ? format_number(*a) : "na"; }
std::string opt_str(const std::optional<std::string>& s) { return s ? *s : "na"; }

std::string pm(double mean, double sd) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << mean << " ± " << sd;
    return os.str();
}

/// Left-aligned text table with a header rule.
std::string render(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return {};
    std::vector<std::size_t> width(rows.front().size(), 0);
    auto display_len = [](const std::string& s) {
        // count UTF-8 code points so "±" occupies one column
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], display_len(r[c]));
    std::ostringstream os;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t c = 0; c < rows[k].size(); ++c) {
            os << rows[k][c];
            if (c + 1 < rows[k].size()) os << std::string(width[c] - display_len(rows[k][c]) + 2, ' ');
        }
        os << '\n';
        if (k == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            os << std::string(total - 2, '-') << '\n';
        }
    }
    return os.str();
}

std::string group_table(const std::vector<GroupStats>& groups) {
    std::vector<std::vector<std::string>> rows{
        {"strategy", "alpha", "aggregation", "n", "final_op", "final_general", "forgetting_task1"}};
    for (const auto& g : groups)
        rows.push_back({g.strategy, opt_alpha(g.alpha), opt_str(g.aggregation), std::to_string(g.n),
                        pm(g.final_op_mean, g.final_op_std), pm(g.final_general_mean, g.final_general_std),
                        pm(g.forgetting_mean, g.forgetting_std)});
    return render(rows);
}

void write_group_csv(const fs::path& path, const std::vector<GroupStats>& groups) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
    os << "strategy,alpha,aggregation,n,final_op_mean,final_op_std,final_general_mean,final_general_std,"
          "forgetting_task1_mean,forgetting_task1_std\n";
    for (const auto& g : groups)
        os << g.strategy << ',' << opt_alpha(g.alpha) << ',' << opt_str(g.aggregation) << ',' << g.n << ','
           << format_number(g.final_op_mean) << ',' << format_number(g.final_op_std) << ','
           << format_number(g.final_general_mean) << ',' << format_number(g.final_general_std) << ','
           << format_number(g.forgetting_mean) << ',' << format_number(g.forgetting_std) << '\n';
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace

std::vector<GroupStats> summarize(const std::vector<RunMetrics>& runs) {
    std::vector<GroupStats> out;
    std::vector<std::vector<const RunMetrics*>> members;
    for (const auto& r : runs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const GroupStats& g) {
            return g.strategy == r.strategy && g.alpha == r.alpha && g.aggregation == r.aggregation;
        });
        if (it == out.end()) {
            out.push_back(GroupStats{r.strategy, r.alpha, r.aggregation});
            members.emplace_back();
            it = out.end() - 1;
        }
        members[static_cast<std::size_t>(it - out.begin())].push_back(&r);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::vector<double> op, gen, fgt;
        for (const auto* r : members[k]) {
            op.push_back(r->final_op);
            gen.push_back(r->final_general);
            fgt.push_back(r->forgetting_task1);
        }
        out[k].n = members[k].size();
        mean_std(op, out[k].final_op_mean, out[k].final_op_std);
        mean_std(gen, out[k].final_general_mean, out[k].final_general_std);
        mean_std(fgt, out[k].forgetting_mean, out[k].forgetting_std);
    }
    return out;
}

std::string cell_name(const RunConfig& cfg, std::uint64_t seed) {
    if (cfg.harness.original_only) return "ori_s" + std::to_string(seed);
    std::string name = to_string(cfg.strategy.kind);
    if (cfg.strategy.uses_alpha()) name += "_a" + format_number(cfg.strategy.alpha);
    if (cfg.strategy.uses_aggregation()) name += "_" + to_string(cfg.strategy.aggregation);
    return name + "_s" + std::to_string(seed);
}

RunReport run_cell(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    const TaskStream stream = gen_stream(substream_seed(seed, "data"), cfg.effective_stream());

    RunOptions options;
    options.original_only = cfg.harness.original_only;
    options.eval_every_epoch = cfg.harness.eval_every_epoch;
    options.on_task_end = [&](std::size_t t, const ParamSet& params, const Strategy* strategy) {
        if (cfg.harness.save_checkpoints) save_checkpoint(params, dir / ("task" + std::to_string(t) + ".ckpt"));
        if (cfg.harness.save_masks) {
            if (const auto* f = dynamic_cast<const FggmStrategy*>(strategy)) {
                if (f->last_mask()) save_mask(*f->last_mask(), dir / ("task" + std::to_string(t) + ".mask"));
                if (f->last_fisher()) save_fisher(*f->last_fisher(), dir / ("task" + std::to_string(t) + ".fisher"));
            }
        }
    };
    RunReport report = run_stream(stream, cfg.model_spec(), cfg.strategy, cfg.train, seed, options);

    {
        std::ofstream os(dir / "run.jsonl", std::ios::binary | std::ios::trunc);
        if (!os) fail(ErrorKind::Io, "cannot write " + (dir / "run.jsonl").string());
        for (const auto& rec : jsonl_records(report, cfg.harness.record_wall_ms)) os << rec.dump() << '\n';
    }
    if (cfg.harness.eval_every_epoch) {
        std::ofstream os(dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
        for (const auto& task : report.tasks)
            for (const auto& e : task.epoch_evals)
                os << nlohmann::ordered_json{{"t", task.t}, {"epoch", e.epoch}, {"task_acc", e.task_acc},
                                             {"general_acc", e.general_acc}}
                          .dump()
                   << '\n';
    }
    nlohmann::ordered_json echo = cfg.to_json();
    echo["seeds"] = {seed};
    write_json_file(dir / "config.json", echo);

    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const auto& t : report.tasks) {
        nlohmann::ordered_json j;
        j["t"] = t.t;
        j["name"] = t.name;
        j["steps"] = t.train.steps;
        j["final_train_loss"] = t.train.final_train_loss;
        j["epoch_losses"] = t.train.epoch_losses;
        nlohmann::ordered_json rf = nlohmann::ordered_json::object();
        for (const auto& [name, frac] : t.train.retained_fractions) rf[name] = frac;
        j["retained_fractions"] = rf;
        j["warnings"] = t.train.warnings;
        j["op_t"] = t.op_t;
        j["general_acc"] = t.general_acc;
        tasks.push_back(std::move(j));
    }
    write_json_file(dir / "tasks.json", tasks);
    if (cfg.harness.save_checkpoints) save_checkpoint(report.final_params, dir / "final.ckpt");
    return report;
}

SweepResult run_sweep(const RunConfig& base, const SweepOptions& options, const fs::path& out) {
    fs::create_directories(out);
    const auto strategies = options.strategies.empty() ? std::vector<StrategyKind>{base.strategy.kind} : options.strategies;
    const auto alphas = options.alphas.empty() ? std::vector<double>{base.strategy.alpha} : options.alphas;
    const auto aggs = options.aggregations.empty() ? std::vector<Aggregation>{base.strategy.aggregation} : options.aggregations;
    const auto seeds = options.seeds.empty() ? base.seeds : options.seeds;

    SweepResult result;
    for (auto kind : strategies) {
        RunConfig c = base;
        c.strategy.kind = kind;
        const auto alpha_axis = c.strategy.uses_alpha() ? alphas : std::vector<double>{base.strategy.alpha};
        const auto agg_axis = c.strategy.uses_aggregation() ? aggs : std::vector<Aggregation>{base.strategy.aggregation};
        for (double a : alpha_axis) {
            for (auto g : agg_axis) {
                RunConfig cc = c;
                cc.strategy.alpha = a;
                cc.strategy.aggregation = g;
                for (auto seed : seeds) {
                    SweepCell cell;
                    cell.config = cc;
                    cell.config.seeds = {seed};
                    cell.seed = seed;
                    cell.name = cell_name(cc, seed);
                    result.cells.push_back(std::move(cell));
                }
            }
        }
    }

    for (const auto& cell : result.cells) {
        try {
            cell.config.strategy.validate();
        } catch (const Error& e) {
            fail(ErrorKind::Config, "sweep cell " + cell.name + ": " + e.what());
        }
    }

    unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, result.cells.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < result.cells.size(); k = next++) {
            SweepCell& cell = result.cells[k];
            try {
                cell.metrics = metrics_of(run_cell(cell.config, cell.seed, out / cell.name));
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<RunMetrics> ok;
    for (const auto& c : result.cells) {
        if (c.ok)
            ok.push_back(c.metrics);
        else
            ++result.failed;
    }
    result.groups = summarize(ok);

    {
        std::ofstream os(out / "summary.csv");
        if (!os) fail(ErrorKind::Io, "cannot write " + (out / "summary.csv").string());
        os << "strategy,seed,alpha,aggregation,final_op,final_general,forgetting_task1\n";
        for (const auto& m : ok)
            os << m.strategy << ',' << m.seed << ',' << opt_alpha(m.alpha) << ',' << opt_str(m.aggregation) << ','
               << format_number(m.final_op) << ',' << format_number(m.final_general) << ','
               << format_number(m.forgetting_task1) << '\n';
    }
    write_group_csv(out / "sweep_table.csv", result.groups);

    std::ostringstream text;
    text << group_table(result.groups);

    // Stability (probe accuracy) against plasticity (OP) per masking rate.
    if (options.alphas.size() > 1) {
        std::ofstream os(out / "alpha_table.csv");
        os << "strategy,alpha,n,general,op\n";
        std::vector<std::vector<std::string>> rows{{"strategy", "alpha", "n", "general", "op"}};
        for (const auto& g : result.groups) {
            if (!g.alpha) continue;
            os << g.strategy << ',' << format_number(*g.alpha) << ',' << g.n << ',' << format_number(g.final_general_mean)
               << ',' << format_number(g.final_op_mean) << '\n';
            rows.push_back({g.strategy, format_number(*g.alpha), std::to_string(g.n), pm(g.final_general_mean, g.final_general_std),
                            pm(g.final_op_mean, g.final_op_std)});
        }
        text << "\nmasking rate sweep (general = stability, op = plasticity)\n" << render(rows);
    }
    if (options.aggregations.size() > 1) {
        std::ofstream os(out / "ablation_table.csv");
        os << "aggregation,alpha,n,general,op,forgetting_task1\n";
        std::vector<std::vector<std::string>> rows{{"aggregation", "alpha", "n", "general", "op", "forgetting_task1"}};
        for (const auto& g : result.groups) {
            if (!g.aggregation) continue;
            os << *g.aggregation << ',' << opt_alpha(g.alpha) << ',' << g.n << ',' << format_number(g.final_general_mean)
               << ',' << format_number(g.final_op_mean) << ',' << format_number(g.forgetting_mean) << '\n';
            rows.push_back({*g.aggregation, opt_alpha(g.alpha), std::to_string(g.n), pm(g.final_general_mean, g.final_general_std),
                            pm(g.final_op_mean, g.final_op_std), pm(g.forgetting_mean, g.forgetting_std)});
        }
        text << "\naggregation ablation\n" << render(rows);
    }
    if (result.failed) {
        text << '\n' << result.failed << " cell(s) failed:\n";
        for (const auto& c : result.cells)
            if (!c.ok) text << "  " << c.name << ": " << c.error << '\n';
    }
    result.text = text.str();
    return result;
}

RunMetrics metrics_from_jsonl(const fs::path& file) {
    std::ifstream is(file);
    if (!is) fail(ErrorKind::Io, "cannot read " + file.string());
    std::map<std::pair<std::size_t, std::size_t>, double> rd;
    std::map<std::size_t, double> op, general;
    RunMetrics m;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = file.string() + ":" + std::to_string(lineno) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            fail(ErrorKind::Validation, where + "malformed JSON line");
        }
        try {
            const std::size_t t = j.at("t").get<std::size_t>();
            const std::size_t i = j.at("i").get<std::size_t>();
            if (i < 1 || i > t) fail(ErrorKind::Validation, where + "record index (t, i) outside the lower triangle");
            rd[{t, i}] = j.at("rd").get<double>();
            op[t] = j.at("op_t").get<double>();
            general[t] = j.at("general_acc").get<double>();
            (void)j.at("wall_ms").get<double>();
            if (first) {
                m.strategy = j.at("strategy").get<std::string>();
                m.seed = j.at("seed").get<std::uint64_t>();
                if (!j.at("alpha").is_null()) m.alpha = j["alpha"].get<double>();
                if (!j.at("aggregation").is_null()) m.aggregation = j["aggregation"].get<std::string>();
                first = false;
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Validation, where + "record does not match the run.jsonl schema (" + e.what() + ")");
        }
    }
    if (op.empty()) fail(ErrorKind::Validation, file.string() + ": no records");
    const std::size_t n = op.rbegin()->first;
    double s = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        if (!op.count(t)) fail(ErrorKind::Validation, file.string() + ": missing records for t=" + std::to_string(t));
        s += op[t];
    }
    if (!rd.count({1, 1}) || !rd.count({n, 1})) fail(ErrorKind::Validation, file.string() + ": missing RD entries for task 1");
    m.final_op = s / static_cast<double>(n);
    m.final_general = general[n];
    m.forgetting_task1 = rd[{1, 1}] - rd[{n, 1}];
    return m;
}

ReportResult build_report(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::Config, "report: " + dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "run.jsonl") files.push_back(e.path());
    if (files.empty()) fail(ErrorKind::Config, "report: no run.jsonl files under " + dir.string());
    std::sort(files.begin(), files.end());

    ReportResult r;
    for (const auto& f : files) r.runs.push_back(metrics_from_jsonl(f));
    r.groups = summarize(r.runs);
    write_group_csv(dir / "report.csv", r.groups);
    r.text = group_table(r.groups);
    return r;
}

}  // namespace fggm
