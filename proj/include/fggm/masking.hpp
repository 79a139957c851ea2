// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fggm/fisher.hpp"
#include "fggm/model.hpp"

namespace fggm {

/// How a weight matrix's scores are pooled before thresholding.
///   Input  (IA): one score per output neuron (row sums), mask is row-constant.
///   Output (OA): one score per input feature (column sums), mask is column-constant.
///   None       : elementwise.
enum class Aggregation { Input, Output, None };

/// Hard masks hold {0,1}. Soft masks keep 1 above the threshold and scale the
/// rest by score / threshold, so low-importance entries are damped, not frozen.
enum class MaskMode { Hard, Soft };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);
std::string to_string(MaskMode m);
MaskMode parse_mask_mode(std::string_view s);

/// mask = 1 marks a parameter that is allowed to change.
struct MaskSet {
    NamedTensors masks;
    double alpha = 0.0;
    Aggregation aggregation = Aggregation::Input;
    MaskMode mode = MaskMode::Hard;

    /// Fraction of entries with a nonzero mask, per tensor in ParamSet order.
    std::vector<std::pair<std::string, double>> retained_fractions() const;
    bool empty_support() const;
};

Tensor aggregate_input_dim(const Tensor& fim);
Tensor aggregate_output_dim(const Tensor& fim);

/// Linear-interpolation quantile of the sorted values at rank q*(n-1).
double quantile(std::span<const double> values, double q);

/// Indicator of scores strictly above the alpha-quantile of `scores`, so that a
/// fraction (1 - alpha) of distinct scores survives.
std::vector<double> threshold_scores(std::span<const double> scores, double alpha);

/// Per-tensor selection: 2-D tensors are pooled per `aggregation` and the indicator is
/// broadcast back across the pooled axis; 1-D tensors are thresholded elementwise.
MaskSet build_mask(const FisherDiag& fisher, double alpha, Aggregation aggregation, MaskMode mode = MaskMode::Hard);

void save_mask(const MaskSet& mask, const std::filesystem::path& path);
MaskSet load_mask(const std::filesystem::path& path);

}  // namespace fggm
