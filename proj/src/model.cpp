// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/model.hpp"

#include <cmath>

#include "fggm/autodiff.hpp"
#include "fggm/random.hpp"
#include "fggm/tensor_file.hpp"

namespace fggm {

void NamedTensors::insert(std::string name, Tensor t) {
    if (contains(name)) fail(ErrorKind::Contract, "duplicate tensor name '" + name + "'");
    entries_.push_back(Entry{std::move(name), std::move(t)});
}

bool NamedTensors::contains(std::string_view name) const noexcept {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const Tensor& NamedTensors::at(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.tensor;
    fail(ErrorKind::Contract, "no tensor named '" + std::string(name) + "'");
}

Tensor& NamedTensors::at(std::string_view name) {
    for (auto& e : entries_)
        if (e.name == name) return e.tensor;
    fail(ErrorKind::Contract, "no tensor named '" + std::string(name) + "'");
}

std::size_t NamedTensors::numel() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

std::vector<std::string> NamedTensors::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

bool NamedTensors::same_layout(const NamedTensors& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name != other.entries_[i].name || !entries_[i].tensor.same_shape(other.entries_[i].tensor))
            return false;
    return true;
}

void NamedTensors::require_same_layout(const NamedTensors& other, std::string_view what) const {
    const std::size_t n = std::max(entries_.size(), other.entries_.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= entries_.size())
            fail(ErrorKind::Contract, std::string(what) + ": unexpected tensor '" + other.entries_[i].name + "'");
        if (i >= other.entries_.size())
            fail(ErrorKind::Contract, std::string(what) + ": missing tensor '" + entries_[i].name + "'");
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name)
            fail(ErrorKind::Contract, std::string(what) + ": expected tensor '" + a.name + "', found '" + b.name + "'");
        if (!a.tensor.same_shape(b.tensor))
            fail(ErrorKind::Contract, std::string(what) + ": tensor '" + a.name + "' has shape " +
                                          shape_str(b.tensor.shape()) + ", expected " + shape_str(a.tensor.shape()));
    }
}

bool NamedTensors::bit_equal(const NamedTensors& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name != other.entries_[i].name || !entries_[i].tensor.bit_equal(other.entries_[i].tensor))
            return false;
    return true;
}

NamedTensors NamedTensors::zeros_like(const NamedTensors& like) { return full_like(like, 0.0); }

NamedTensors NamedTensors::full_like(const NamedTensors& like, double v) {
    NamedTensors out;
    for (const auto& e : like) out.insert(e.name, Tensor::full(e.tensor.shape(), v));
    return out;
}

std::string weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
std::string bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

void ModelSpec::validate() const {
    if (input_dim < 1) fail(ErrorKind::Validation, "model input_dim must be >= 1");
    if (num_classes < 1) fail(ErrorKind::Validation, "model num_classes must be >= 1");
    for (auto h : hidden_dims)
        if (h < 1) fail(ErrorKind::Validation, "model hidden dims must be >= 1");
}

std::vector<std::size_t> ModelSpec::layer_dims() const {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(num_classes);
    return dims;
}

void Dataset::validate(std::size_t input_dim, std::size_t num_classes) const {
    if (labels.empty()) fail(ErrorKind::Validation, "empty dataset");
    if (inputs.rank() != 2 || inputs.rows() != labels.size())
        fail(ErrorKind::Dimension, "dataset inputs " + shape_str(inputs.shape()) + " do not match " +
                                       std::to_string(labels.size()) + " labels");
    if (inputs.cols() != input_dim)
        fail(ErrorKind::Dimension, "dataset width " + std::to_string(inputs.cols()) + " != model input_dim " +
                                       std::to_string(input_dim));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
            fail(ErrorKind::Validation, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                            " outside [0, " + std::to_string(num_classes) + ")");
}

Dataset Dataset::gather(std::span<const std::size_t> rows) const {
    const std::size_t d = inputs.cols();
    std::vector<double> data;
    data.reserve(rows.size() * d);
    std::vector<int> lab;
    lab.reserve(rows.size());
    for (auto r : rows) {
        const auto row = inputs.data().subspan(r * d, d);
        data.insert(data.end(), row.begin(), row.end());
        lab.push_back(labels.at(r));
    }
    return Dataset{Tensor({rows.size(), d}, std::move(data)), std::move(lab)};
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    const std::size_t d = inputs.cols();
    const auto span = inputs.data().subspan(begin * d, (end - begin) * d);
    return Dataset{Tensor({end - begin, d}, std::vector<double>(span.begin(), span.end())),
                   std::vector<int>(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                    labels.begin() + static_cast<std::ptrdiff_t>(end))};
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
    if (a.inputs.cols() != b.inputs.cols()) fail(ErrorKind::Dimension, "concat: datasets differ in width");
    std::vector<double> data(a.inputs.values());
    data.insert(data.end(), b.inputs.values().begin(), b.inputs.values().end());
    std::vector<int> lab(a.labels);
    lab.insert(lab.end(), b.labels.begin(), b.labels.end());
    return Dataset{Tensor({lab.size(), a.inputs.cols()}, std::move(data)), std::move(lab)};
}

ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const auto dims = spec.layer_dims();
    ParamSet params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t din = dims[l], dout = dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(din + dout));
        Tensor w({dout, din});
        for (auto& v : w.data()) v = rng.uniform(-bound, bound);
        params.insert(weight_name(l), std::move(w));
        params.insert(bias_name(l), Tensor({dout}));
    }
    return params;
}

std::size_t count_layers(const ParamSet& params) {
    if (params.size() == 0 || params.size() % 2 != 0)
        fail(ErrorKind::Dimension, "parameter set must hold weight/bias pairs, got " + std::to_string(params.size()) +
                                       " tensors");
    const std::size_t layers = params.size() / 2;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& w = params[2 * l];
        const auto& b = params[2 * l + 1];
        if (w.name != weight_name(l) || b.name != bias_name(l))
            fail(ErrorKind::Dimension, "expected " + weight_name(l) + "/" + bias_name(l) + " at position " +
                                           std::to_string(2 * l) + ", found " + w.name + "/" + b.name);
        if (w.tensor.rank() != 2 || b.tensor.rank() != 1 || b.tensor.numel() != w.tensor.rows())
            fail(ErrorKind::Dimension, "layer " + std::to_string(l) + " has inconsistent shapes " +
                                           shape_str(w.tensor.shape()) + " / " + shape_str(b.tensor.shape()));
        if (l > 0 && w.tensor.cols() != params[2 * l - 2].tensor.rows())
            fail(ErrorKind::Dimension, "layer " + std::to_string(l) + " expects input width " +
                                           std::to_string(w.tensor.cols()) + " but layer " + std::to_string(l - 1) +
                                           " produces " + std::to_string(params[2 * l - 2].tensor.rows()));
    }
    return layers;
}

ForwardTrace forward_trace(const ParamSet& params, const Tensor& inputs) {
    const std::size_t layers = count_layers(params);
    if (inputs.rank() != 2 || inputs.cols() != params[0].tensor.cols())
        fail(ErrorKind::Dimension, "forward: input " + shape_str(inputs.shape()) + " does not match " +
                                       weight_name(0) + " " + shape_str(params[0].tensor.shape()));
    ForwardTrace out;
    Tensor h = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
        Tensor z = ops::add_bias(ops::matmul(h, ops::transpose(params[2 * l].tensor)), params[2 * l + 1].tensor);
        out.pre_activations.push_back(z);
        h = (l + 1 < layers) ? ops::relu(z) : std::move(z);
    }
    out.logits = std::move(h);
    return out;
}

Tensor forward(const ParamSet& params, const Tensor& inputs) {
    const std::size_t layers = count_layers(params);
    if (inputs.rank() != 2 || inputs.cols() != params[0].tensor.cols())
        fail(ErrorKind::Dimension, "forward: input " + shape_str(inputs.shape()) + " does not match " +
                                       weight_name(0) + " " + shape_str(params[0].tensor.shape()));
    Tensor h = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
        h = ops::add_bias(ops::matmul(h, ops::transpose(params[2 * l].tensor)), params[2 * l + 1].tensor);
        if (l + 1 < layers) h = ops::relu(h);
    }
    return h;
}

LossAndGrads loss_and_grads(const ParamSet& params, const Batch& batch) {
    const std::size_t layers = count_layers(params);
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& e : params) leaves.push_back(tape.leaf(e.tensor));

    if (batch.inputs.rank() != 2 || batch.inputs.cols() != params[0].tensor.cols())
        fail(ErrorKind::Dimension, "loss_and_grads: input " + shape_str(batch.inputs.shape()) + " does not match " +
                                       weight_name(0) + " " + shape_str(params[0].tensor.shape()));
    Var h = tape.constant(batch.inputs);
    for (std::size_t l = 0; l < layers; ++l) {
        h = add_bias(matmul(h, transpose(leaves[2 * l])), leaves[2 * l + 1]);
        if (l + 1 < layers) h = relu(h);
    }
    Var loss = log_softmax_nll(h, batch.labels);
    LossAndGrads out;
    out.loss = loss.value().item();
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) out.grads.insert(params[i].name, tape.grad(leaves[i]));
    return out;
}

double loss(const ParamSet& params, const Batch& batch) {
    return ops::log_softmax_nll(forward(params, batch.inputs), batch.labels);
}

std::vector<int> predict(const ParamSet& params, const Tensor& inputs) {
    const Tensor logits = forward(params, inputs);
    const std::size_t rows = logits.rows(), cols = logits.cols();
    std::vector<int> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cols; ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) { write_tensor_file(path, params); }

ParamSet load_checkpoint(const std::filesystem::path& path) {
    TensorFile f = read_tensor_file(path);
    if (f.header.contains("kind") && f.header["kind"] != "params")
        fail(ErrorKind::Validation, path.string() + ": not a parameter checkpoint (kind " + f.header["kind"].dump() + ")");
    count_layers(f.tensors);
    return std::move(f.tensors);
}

}  // namespace fggm
