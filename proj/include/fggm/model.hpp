// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fggm/tensor.hpp"

namespace fggm {

/// Insertion-ordered name -> Tensor map. Parameters, gradients, Fisher scores and
/// masks all use this layout so they line up by name.
class NamedTensors {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    void insert(std::string name, Tensor t);
    bool contains(std::string_view name) const noexcept;
    const Tensor& at(std::string_view name) const;
    Tensor& at(std::string_view name);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t numel() const noexcept;
    std::vector<std::string> names() const;

    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }
    Entry& operator[](std::size_t i) { return entries_[i]; }

    /// Same names in the same order with the same shapes.
    bool same_layout(const NamedTensors& other) const noexcept;
    /// Throws a Contract error naming the first disagreeing tensor.
    void require_same_layout(const NamedTensors& other, std::string_view what) const;
    bool bit_equal(const NamedTensors& other) const noexcept;

    static NamedTensors zeros_like(const NamedTensors& like);
    static NamedTensors full_like(const NamedTensors& like, double v);

private:
    std::vector<Entry> entries_;
};

using ParamSet = NamedTensors;
using Gradients = NamedTensors;

std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

enum class Activation { Relu };

struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t num_classes = 0;
    Activation activation = Activation::Relu;

    void validate() const;
    std::size_t num_layers() const noexcept { return hidden_dims.size() + 1; }
    /// input_dim, hidden..., num_classes
    std::vector<std::size_t> layer_dims() const;
};

/// Inputs [N x D] with one integer label per row. Used both for minibatches and
/// whole splits.
struct Dataset {
    Tensor inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const { return inputs.cols(); }
    void validate(std::size_t input_dim, std::size_t num_classes) const;
    Dataset gather(std::span<const std::size_t> rows) const;
    Dataset slice(std::size_t begin, std::size_t end) const;
    static Dataset concat(const Dataset& a, const Dataset& b);
};

using Batch = Dataset;

/// Glorot-uniform weights, zero biases.
ParamSet init_params(const ModelSpec& spec, std::uint64_t seed);

/// Number of affine layers described by a ParamSet; checks the layer chain.
std::size_t count_layers(const ParamSet& params);

Tensor forward(const ParamSet& params, const Tensor& inputs);

struct ForwardTrace {
    Tensor logits;
    /// Affine outputs (before the activation) for every layer, the last one being the logits.
    std::vector<Tensor> pre_activations;
};

ForwardTrace forward_trace(const ParamSet& params, const Tensor& inputs);

struct LossAndGrads {
    double loss = 0.0;
    Gradients grads;
};

/// Mean cross-entropy over the batch and its exact gradient.
LossAndGrads loss_and_grads(const ParamSet& params, const Batch& batch);
double loss(const ParamSet& params, const Batch& batch);

/// argmax per row, ties toward the lowest class index.
std::vector<int> predict(const ParamSet& params, const Tensor& inputs);

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace fggm
