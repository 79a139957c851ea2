// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fggm/harness.hpp"
#include "fggm/strategies.hpp"

namespace fggm {

struct HarnessOptions {
    bool original_only = false;  // "mode": "ori"
    bool eval_every_epoch = false;
    bool record_wall_ms = false;
    bool save_checkpoints = true;
    bool save_masks = false;
};

/// Everything a run needs. Parsed strictly: unknown keys and out-of-range values
/// are rejected before any compute, with the offending key path in the message.
struct RunConfig {
    StrategyConfig strategy;
    std::vector<std::size_t> hidden_dims{64, 64};
    StreamConfig stream;
    TrainConfig train;
    std::optional<std::size_t> epochs_override;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir;  // empty: caller decides
    HarnessOptions harness;

    ModelSpec model_spec() const;
    StreamConfig effective_stream() const;
    nlohmann::ordered_json to_json() const;
};

/// Throws Error(Config) naming the offending key.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig parse_run_config_text(std::string_view text);
RunConfig load_run_config(const std::string& path);

/// Applies "a.b.c=VALUE" to a raw config document. VALUE is parsed as JSON when it
/// can be, otherwise taken as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

}  // namespace fggm
