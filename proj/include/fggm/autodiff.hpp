// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fggm/tensor.hpp"

namespace fggm {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so reverse
/// insertion order is a valid reverse topological order.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input (a parameter). Its gradient survives backward().
    Var leaf(Tensor value);
    /// Non-differentiable input.
    Var constant(Tensor value);

    /// Records an op. `backward` is only kept when some input requires a gradient.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    /// Seeds d(loss)/d(loss) = 1 and propagates. Frees every intermediate value and
    /// gradient except those of leaves. May be called once per tape.
    void backward(Var loss);

    /// Gradient of a leaf after backward(); zeros if the loss did not depend on it.
    const Tensor& grad(Var leaf);

    const Tensor& value(std::size_t id) const;
    const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
    /// Accumulates into the gradient of node `id` (allocating zeros on first use).
    Tensor& grad_slot(std::size_t id);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Number of recorded backward functions executed by the last backward().
    std::size_t backward_visits() const noexcept { return visits_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    std::vector<Node> nodes_;
    std::size_t visits_ = 0;
    bool consumed_ = false;
};

// Traced primitives. All inputs must live on the same tape.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add_bias(Var x, Var bias);
/// Subgradient at exactly 0 is 0.
Var relu(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Sum of all elements, as a scalar.
Var sum(Var a);
/// Mean negative log-likelihood of `labels` under row-wise softmax(logits); a scalar.
Var log_softmax_nll(Var logits, std::span<const int> labels);

}  // namespace fggm
