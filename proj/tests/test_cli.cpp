// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path root() {
    static const fs::path r = [] {
        const fs::path d = fs::temp_directory_path() / "fggm_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

Result cli(const std::string& args, const std::string& env = "") {
    const fs::path out = root() / "stdout.txt", err = root() / "stderr.txt";
    const std::string cmd = "cd '" + root().string() + "' && " + env + " '" FGGM_CLI_PATH "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = root() / name;
    std::ofstream(p) << text;
    return p;
}

const char* kMinimal = R"({
    "model": {"hidden_dims": [8]},
    "stream": {"num_tasks": 2, "n_per_task": 64, "n_eval": 32, "n_probe": 32, "input_dim": 6, "num_classes": 3},
    "optimizer": {"batch_size": 16},
    "seeds": [0]
})";

}  // namespace

TEST_CASE("run: minimal config produces artifacts and exits 0") {
    const fs::path cfg = write_config("minimal.json", kMinimal);
    const std::string before = slurp(cfg);
    const Result r = cli("run --config minimal.json --out run_a");
    CHECK(r.code == 0);
    CHECK(r.out.find("FGGM") != std::string::npos);
    for (const char* f : {"summary.csv", "fggm_a0.7_IA_s0/run.jsonl", "fggm_a0.7_IA_s0/final.ckpt",
                          "fggm_a0.7_IA_s0/task1.ckpt", "fggm_a0.7_IA_s0/config.json"})
        CHECK(fs::exists(root() / "run_a" / f));
    CHECK(slurp(cfg) == before);
}

TEST_CASE("run: rerun gives a byte-identical run.jsonl") {
    write_config("minimal.json", kMinimal);
    REQUIRE(cli("run --config minimal.json --out run_b1").code == 0);
    REQUIRE(cli("run --config minimal.json --out run_b2").code == 0);
    const std::string a = slurp(root() / "run_b1/fggm_a0.7_IA_s0/run.jsonl");
    CHECK(!a.empty());
    CHECK(a == slurp(root() / "run_b2/fggm_a0.7_IA_s0/run.jsonl"));
}

TEST_CASE("run: unknown key exits 2 naming the key") {
    write_config("typo.json", R"({"strategy": {"alhpa": 0.3}})");
    const Result r = cli("run --config typo.json --out run_typo");
    CHECK(r.code == 2);
    CHECK(r.err.find("alhpa") != std::string::npos);
    CHECK_FALSE(fs::exists(root() / "run_typo"));

    write_config("minimal.json", kMinimal);
    const Result s = cli("run --config minimal.json --set strategy.alhpa=0.3 --out run_typo");
    CHECK(s.code == 2);
    CHECK(s.err.find("strategy.alhpa") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("run").code == 2);
    CHECK(cli("run --config missing.json").code == 2);
    write_config("minimal.json", kMinimal);
    CHECK(cli("sweep --config minimal.json --strategies fggm,lora --out sw_bad").code == 2);
    CHECK(cli("sweep --config minimal.json --alpha 0.5,1.2 --out sw_bad").code == 2);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("runtime failures exit 1") {
    write_config("minimal.json", kMinimal);
    std::ofstream(root() / "not_a_dir") << "x";
    const Result r = cli("run --config minimal.json --out not_a_dir");
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
}

TEST_CASE("output directory precedence: --out, config, FGGM_OUT") {
    write_config("with_out.json", R"({"output_dir": "from_config",
        "model": {"hidden_dims": [4]},
        "stream": {"num_tasks": 1, "n_per_task": 32, "n_eval": 16, "n_probe": 16, "input_dim": 4, "num_classes": 2}})");
    write_config("no_out.json", R"({"model": {"hidden_dims": [4]},
        "stream": {"num_tasks": 1, "n_per_task": 32, "n_eval": 16, "n_probe": 16, "input_dim": 4, "num_classes": 2}})");
    CHECK(cli("run --config with_out.json", "FGGM_OUT=from_env").code == 0);
    CHECK(fs::exists(root() / "from_config/summary.csv"));
    CHECK(cli("run --config no_out.json", "FGGM_OUT=from_env").code == 0);
    CHECK(fs::exists(root() / "from_env/summary.csv"));
    CHECK(cli("run --config with_out.json --out from_flag", "FGGM_OUT=from_env").code == 0);
    CHECK(fs::exists(root() / "from_flag/summary.csv"));
}

TEST_CASE("sweep without overrides is the same as run") {
    write_config("minimal.json", kMinimal);
    REQUIRE(cli("sweep --config minimal.json --out sw_plain").code == 0);
    REQUIRE(cli("run --config minimal.json --out run_plain").code == 0);
    CHECK(slurp(root() / "sw_plain/fggm_a0.7_IA_s0/run.jsonl") == slurp(root() / "run_plain/fggm_a0.7_IA_s0/run.jsonl"));
}

TEST_CASE("sweep over strategies prints a three-way table") {
    write_config("minimal.json", kMinimal);
    const Result r = cli("sweep --config minimal.json --strategies fggm,sft,migu --seeds 0,1 --jobs 2 --out sw_three");
    REQUIRE(r.code == 0);
    for (const char* label : {"FGGM", "SFT", "MIGU-style"}) CHECK(r.out.find(label) != std::string::npos);
    const std::string csv = slurp(root() / "sw_three/summary.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 3 strategies x 2 seeds
}

TEST_CASE("report: single run has zero std; mean is the exact per-seed mean") {
    write_config("minimal.json", kMinimal);
    REQUIRE(cli("run --config minimal.json --out rep_one").code == 0);
    Result r = cli("report rep_one");
    REQUIRE(r.code == 0);
    const std::string csv1 = slurp(root() / "rep_one/report.csv");
    CHECK(csv1.find(",1,") != std::string::npos);
    {
        std::istringstream is(csv1);
        std::string header, row;
        std::getline(is, header);
        std::getline(is, row);
        std::vector<std::string> cells;
        std::stringstream rs(row);
        for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 10);
        CHECK(cells[5] == "0");
        CHECK(cells[7] == "0");
        CHECK(cells[9] == "0");
    }

    REQUIRE(cli("run --config minimal.json --seeds 0,1,2,3,4 --out rep_five").code == 0);
    r = cli("report rep_five");
    REQUIRE(r.code == 0);
    // independent recomputation from the raw records
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root() / "rep_five"))
        if (e.path().filename() == "run.jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    REQUIRE(files.size() == 5);
    double sum = 0;
    for (const auto& f : files) {
        std::ifstream is(f);
        std::map<int, double> op;
        int last = 0;
        for (std::string line; std::getline(is, line);) {
            const auto j = nlohmann::json::parse(line);
            op[j["t"].get<int>()] = j["op_t"].get<double>();
            last = std::max(last, j["t"].get<int>());
        }
        double s = 0;
        for (int t = 1; t <= last; ++t) s += op[t];
        sum += s / last;
    }
    const std::string csv = slurp(root() / "rep_five/report.csv");
    std::istringstream is(csv);
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 10);
    CHECK(cells[3] == "5");
    CHECK(std::stod(cells[4]) == sum / 5.0);
}

TEST_CASE("report: empty directory exits 2, malformed line is named") {
    fs::create_directories(root() / "rep_empty");
    CHECK(cli("report rep_empty").code == 2);
    CHECK(cli("report does_not_exist").code == 2);

    write_config("minimal.json", kMinimal);
    REQUIRE(cli("run --config minimal.json --out rep_bad").code == 0);
    std::ofstream(root() / "rep_bad/fggm_a0.7_IA_s0/run.jsonl", std::ios::app) << "this is not json\n";
    const Result r = cli("report rep_bad");
    CHECK(r.code == 2);
    CHECK(r.err.find("run.jsonl:4") != std::string::npos);
}
