// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/fisher.hpp"

#include <algorithm>

#include "fggm/tensor_file.hpp"

namespace fggm {

FisherAccumulator::FisherAccumulator(const ParamSet& like) : sum_(NamedTensors::zeros_like(like)) {}

void FisherAccumulator::add_squared(const Gradients& grads) {
    sum_.require_same_layout(grads, "fisher accumulate");
    for (std::size_t t = 0; t < sum_.size(); ++t) {
        auto acc = sum_[t].tensor.data();
        const auto g = grads[t].tensor.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i] * g[i];
    }
    ++steps_;
}

void FisherAccumulator::merge(const FisherAccumulator& other) {
    sum_.require_same_layout(other.sum_, "fisher merge");
    for (std::size_t t = 0; t < sum_.size(); ++t) {
        auto acc = sum_[t].tensor.data();
        const auto o = other.sum_[t].tensor.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += o[i];
    }
    steps_ += other.steps_;
}

FisherDiag FisherAccumulator::finalize(std::size_t sample_count) const {
    if (steps_ == 0) fail(ErrorKind::Validation, "fisher: no samples accumulated");
    FisherDiag out{sum_, sample_count};
    const double inv = 1.0 / static_cast<double>(steps_);
    for (auto& e : out.scores)
        for (auto& v : e.tensor.data()) v *= inv;
    return out;
}

FisherAccumulator accumulate_fim(const ParamSet& params, const Dataset& data, FisherMode mode, std::size_t begin,
                                 std::size_t end) {
    if (end > data.size() || begin > end) fail(ErrorKind::Validation, "fisher: sample range out of bounds");
    const std::size_t step = mode.kind == FisherMode::Kind::PerSample ? 1 : mode.batch_size;
    if (step == 0) fail(ErrorKind::Validation, "fisher: per_batch size must be >= 1");
    FisherAccumulator acc(params);
    for (std::size_t i = begin; i < end; i += step) {
        const std::size_t stop = std::min(end, i + step);
        acc.add_squared(loss_and_grads(params, data.slice(i, stop)).grads);
    }
    return acc;
}

FisherDiag estimate_diag_fim(const ParamSet& params, const Dataset& data, FisherMode mode) {
    if (data.size() == 0) fail(ErrorKind::Validation, "fisher: empty dataset");
    return accumulate_fim(params, data, mode, 0, data.size()).finalize(data.size());
}

void save_fisher(const FisherDiag& fisher, const std::filesystem::path& path) {
    nlohmann::ordered_json extra;
    extra["kind"] = "fisher";
    extra["sample_count"] = fisher.sample_count;
    write_tensor_file(path, fisher.scores, extra);
}

FisherDiag load_fisher(const std::filesystem::path& path) {
    TensorFile f = read_tensor_file(path);
    if (f.header.value("kind", "") != "fisher")
        fail(ErrorKind::Validation, path.string() + ": not a fisher file");
    if (!f.header.contains("sample_count") || !f.header["sample_count"].is_number_unsigned())
        fail(ErrorKind::Validation, path.string() + ": fisher header lacks sample_count");
    return FisherDiag{std::move(f.tensors), f.header["sample_count"].get<std::size_t>()};
}

}  // namespace fggm
