// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "doctest.h"
#include "fggm/config.hpp"

using namespace fggm;

namespace {

std::string config_error(const std::string& text) {
    try {
        parse_run_config_text(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        return e.what();
    }
    FAIL("expected a config error for " << text);
    return {};
}

}  // namespace

TEST_CASE("defaults") {
    const RunConfig c = parse_run_config_text("{}");
    CHECK(c.strategy.kind == StrategyKind::Fggm);
    CHECK(c.strategy.alpha == 0.7);
    CHECK(c.hidden_dims == std::vector<std::size_t>{64, 64});
    CHECK(c.seeds == std::vector<std::uint64_t>{0});
    CHECK(c.model_spec().layer_dims() == std::vector<std::size_t>{32, 64, 64, 4});
}

TEST_CASE("fields are read") {
    const RunConfig c = parse_run_config_text(R"({
        "strategy": {"kind": "ewc", "ewc_lambda": 5, "fisher_mode": "per_batch", "fisher_batch": 8},
        "model": {"hidden_dims": [16]},
        "stream": {"family": "split", "num_tasks": 2, "num_classes": 4, "epochs": [1, 2]},
        "optimizer": {"kind": "sgd", "lr": 0.1, "batch_size": 8, "schedule": "constant"},
        "epochs": 3, "seeds": [4, 5], "output_dir": "out",
        "harness": {"mode": "ori", "save_masks": true}
    })");
    CHECK(c.strategy.kind == StrategyKind::Ewc);
    CHECK(c.strategy.ewc_lambda == 5.0);
    CHECK(c.strategy.fisher_mode.kind == FisherMode::Kind::PerBatch);
    CHECK(c.strategy.fisher_mode.batch_size == 8);
    CHECK(c.stream.family == StreamFamily::Split);
    CHECK(c.train.optimizer == OptimizerKind::Sgd);
    CHECK_FALSE(c.train.linear_decay);
    CHECK(c.effective_stream().epochs == std::vector<std::size_t>{3});
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
    CHECK(c.output_dir == "out");
    CHECK(c.harness.original_only);
    CHECK(c.harness.save_masks);
}

TEST_CASE("unknown keys are named with their path") {
    CHECK(config_error(R"({"strategy": {"alhpa": 0.3}})").find("strategy.alhpa") != std::string::npos);
    CHECK(config_error(R"({"learning_rate": 1})").find("learning_rate") != std::string::npos);
    CHECK(config_error(R"({"stream": {"family": "permuted", "noise": 1}})").find("stream.noise") != std::string::npos);
}

TEST_CASE("bad values are rejected before any compute") {
    CHECK(config_error(R"({"strategy": {"alpha": 1.0}})").find("alpha") != std::string::npos);
    CHECK(config_error(R"({"strategy": {"alpha": "high"}})").find("strategy.alpha") != std::string::npos);
    CHECK(config_error(R"({"strategy": {"kind": "lora"}})").find("lora") != std::string::npos);
    CHECK(config_error(R"({"optimizer": {"batch_size": -1}})").find("optimizer.batch_size") != std::string::npos);
    CHECK(config_error(R"({"seeds": []})").find("seeds") != std::string::npos);
    CHECK(config_error(R"({"model": {"hidden_dims": [0]}})").find("hidden") != std::string::npos);
    CHECK(config_error(R"({"stream": {"family": "split", "num_tasks": 4, "num_classes": 4}})").size() > 0);
    CHECK(config_error("{not json").find("JSON") != std::string::npos);
    CHECK(config_error("[1, 2]").size() > 0);
}

TEST_CASE("overrides") {
    nlohmann::json doc = nlohmann::json::parse(R"({"strategy": {"kind": "fggm"}})");
    apply_override(doc, "strategy.alpha=0.8");
    apply_override(doc, "strategy.aggregation=OA");
    apply_override(doc, "stream.num_tasks=2");
    const RunConfig c = parse_run_config(doc);
    CHECK(c.strategy.alpha == 0.8);
    CHECK(c.strategy.aggregation == Aggregation::Output);
    CHECK(c.stream.num_tasks == 2);
    CHECK_THROWS_AS(apply_override(doc, "noequals"), Error);
    CHECK_THROWS_AS(apply_override(doc, "strategy..alpha=1"), Error);
    CHECK_THROWS_AS(apply_override(doc, "strategy.kind.x=1"), Error);
}

TEST_CASE("the normalised form parses back to the same config") {
    const RunConfig c = parse_run_config_text(R"({"strategy": {"kind": "replay", "buffer_size": 7}, "seeds": [1, 2]})");
    const RunConfig back = parse_run_config(nlohmann::json::parse(c.to_json().dump()));
    CHECK(back.to_json() == c.to_json());
}
