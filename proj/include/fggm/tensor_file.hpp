// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string_view>

#include "json.hpp"

#include "fggm/model.hpp"

namespace fggm {

/// Named-tensor container shared by checkpoints, Fisher scores and masks:
///
///   "FGGM0001"                       8 ASCII bytes
///   u64 little-endian                length of the JSON header
///   {"tensors":[{"name","shape"}..], ...extra header fields}
///   f64 little-endian payload        tensors concatenated in header order
inline constexpr std::string_view kTensorFileMagic = "FGGM0001";

struct TensorFile {
    nlohmann::ordered_json header;  // full header, "tensors" included
    NamedTensors tensors;
};

/// `extra` must be an object; its fields are merged into the header after "tensors".
void write_tensor_file(const std::filesystem::path& path, const NamedTensors& tensors,
                       const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace fggm
