// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/masking.hpp"

#include <algorithm>
#include <cmath>

#include "fggm/tensor_file.hpp"

namespace fggm {

std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::Input: return "IA";
        case Aggregation::Output: return "OA";
        case Aggregation::None: return "None";
    }
    return "?";
}

Aggregation parse_aggregation(std::string_view s) {
    if (s == "IA" || s == "ia" || s == "input") return Aggregation::Input;
    if (s == "OA" || s == "oa" || s == "output") return Aggregation::Output;
    if (s == "None" || s == "none") return Aggregation::None;
    fail(ErrorKind::Validation, "unknown aggregation '" + std::string(s) + "' (expected IA, OA or None)");
}

std::string to_string(MaskMode m) { return m == MaskMode::Hard ? "hard" : "soft"; }

MaskMode parse_mask_mode(std::string_view s) {
    if (s == "hard") return MaskMode::Hard;
    if (s == "soft") return MaskMode::Soft;
    fail(ErrorKind::Validation, "unknown mask mode '" + std::string(s) + "' (expected hard or soft)");
}

std::vector<std::pair<std::string, double>> MaskSet::retained_fractions() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : masks) {
        const auto d = e.tensor.data();
        const auto kept = std::count_if(d.begin(), d.end(), [](double v) { return v != 0.0; });
        out.emplace_back(e.name, static_cast<double>(kept) / static_cast<double>(d.size()));
    }
    return out;
}

bool MaskSet::empty_support() const {
    for (const auto& e : masks)
        for (double v : e.tensor.data())
            if (v != 0.0) return false;
    return true;
}

Tensor aggregate_input_dim(const Tensor& fim) {
    if (fim.rank() != 2) fail(ErrorKind::Contract, "aggregate_input_dim: expected a 2-D tensor, got " + shape_str(fim.shape()));
    const std::size_t rows = fim.rows(), cols = fim.cols();
    Tensor out({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += fim.at(r, c);
        out[r] = s;
    }
    return out;
}

Tensor aggregate_output_dim(const Tensor& fim) {
    if (fim.rank() != 2) fail(ErrorKind::Contract, "aggregate_output_dim: expected a 2-D tensor, got " + shape_str(fim.shape()));
    const std::size_t rows = fim.rows(), cols = fim.cols();
    Tensor out({cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c] += fim.at(r, c);
    return out;
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) fail(ErrorKind::Validation, "quantile of an empty list");
    if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::Validation, "quantile level must lie in [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        fail(ErrorKind::Validation, "masking rate alpha must lie in [0, 1), got " + std::to_string(alpha));
}

std::vector<double> select(std::span<const double> scores, double alpha, MaskMode mode) {
    const double thr = quantile(scores, alpha);
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > thr)
            out[i] = 1.0;
        else if (mode == MaskMode::Soft && thr > 0.0)
            out[i] = std::max(0.0, scores[i] / thr);
        else
            out[i] = 0.0;
    }
    return out;
}

}  // namespace

std::vector<double> threshold_scores(std::span<const double> scores, double alpha) {
    check_alpha(alpha);
    return select(scores, alpha, MaskMode::Hard);
}

MaskSet build_mask(const FisherDiag& fisher, double alpha, Aggregation aggregation, MaskMode mode) {
    check_alpha(alpha);
    MaskSet out;
    out.alpha = alpha;
    out.aggregation = aggregation;
    out.mode = mode;
    for (const auto& e : fisher.scores) {
        const Tensor& f = e.tensor;
        if (!f.all_finite()) fail(ErrorKind::Validation, "fisher scores for '" + e.name + "' are not finite");
        Tensor m(f.shape());
        if (f.rank() == 2 && aggregation != Aggregation::None) {
            const std::size_t rows = f.rows(), cols = f.cols();
            if (aggregation == Aggregation::Input) {
                const auto keep = select(aggregate_input_dim(f).data(), alpha, mode);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = keep[r];
            } else {
                const auto keep = select(aggregate_output_dim(f).data(), alpha, mode);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = keep[c];
            }
        } else {
            const auto keep = select(f.data(), alpha, mode);
            std::copy(keep.begin(), keep.end(), m.data().begin());
        }
        out.masks.insert(e.name, std::move(m));
    }
    return out;
}

void save_mask(const MaskSet& mask, const std::filesystem::path& path) {
    nlohmann::ordered_json extra;
    extra["kind"] = "mask";
    extra["alpha"] = mask.alpha;
    extra["aggregation"] = to_string(mask.aggregation);
    extra["mode"] = to_string(mask.mode);
    write_tensor_file(path, mask.masks, extra);
}

MaskSet load_mask(const std::filesystem::path& path) {
    TensorFile f = read_tensor_file(path);
    if (f.header.value("kind", "") != "mask") fail(ErrorKind::Validation, path.string() + ": not a mask file");
    MaskSet m;
    m.masks = std::move(f.tensors);
    m.alpha = f.header.value("alpha", 0.0);
    m.aggregation = parse_aggregation(f.header.value("aggregation", "IA"));
    m.mode = parse_mask_mode(f.header.value("mode", "hard"));
    for (const auto& e : m.masks)
        for (double v : e.tensor.data())
            if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::Validation, path.string() + ": mask values must lie in [0, 1]");
    return m;
}

}  // namespace fggm
