// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace fggm {

const Tensor& Var::value() const {
    if (!tape_) fail(ErrorKind::Contract, "use of an unbound Var");
    return tape_->value(id_);
}

Var Tape::leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, {}, true, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, {}, false, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
    if (consumed_) fail(ErrorKind::Contract, "recording on a tape after backward()");
    const bool rg = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].requires_grad; });
    Node n{std::move(value), {}, std::move(inputs), rg ? std::move(backward) : BackwardFn{}, rg, false};
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    if (consumed_ && !n.is_leaf) fail(ErrorKind::Contract, "intermediate value read after backward()");
    return n.value;
}

Tensor& Tape::grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape() != this) fail(ErrorKind::Contract, "backward: loss belongs to a different tape");
    if (consumed_) fail(ErrorKind::Contract, "backward: tape already consumed");
    const Tensor& lv = nodes_[loss.id()].value;
    if (lv.numel() != 1)
        fail(ErrorKind::Contract, "backward: loss must be a scalar, got shape " + shape_str(lv.shape()));

    visits_ = 0;
    grad_slot(loss.id())[0] = 1.0;
    for (std::size_t k = loss.id() + 1; k-- > 0;) {
        Node& n = nodes_[k];
        if (n.backward && n.grad.numel() != 0) {
            n.backward(*this, k);
            ++visits_;
        }
    }
    consumed_ = true;
    for (auto& n : nodes_) {
        if (n.is_leaf) continue;
        n.value = Tensor();
        n.grad = Tensor();
        n.backward = nullptr;
    }
}

const Tensor& Tape::grad(Var leaf) {
    Node& n = nodes_.at(leaf.id());
    if (!n.is_leaf || !n.requires_grad) fail(ErrorKind::Contract, "grad() is only defined for differentiable leaves");
    if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
}

namespace {

Tape& same_tape(Var a, Var b) {
    if (!a.tape() || a.tape() != b.tape()) fail(ErrorKind::Contract, "operands recorded on different tapes");
    return *a.tape();
}

void accumulate(Tape& t, std::size_t id, const Tensor& g) {
    if (!t.requires_grad(id)) return;
    Tensor& slot = t.grad_slot(id);
    for (std::size_t i = 0; i < slot.numel(); ++i) slot[i] += g[i];
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(ops::matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        if (tp.requires_grad(ia)) accumulate(tp, ia, ops::matmul(g, ops::transpose(tp.value(ib))));
        if (tp.requires_grad(ib)) accumulate(tp, ib, ops::matmul(ops::transpose(tp.value(ia)), g));
    });
}

Var transpose(Var a) {
    Tape& t = *a.tape();
    const std::size_t ia = a.id();
    return t.record(ops::transpose(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
        accumulate(tp, ia, ops::transpose(tp.grad_of(self)));
    });
}

Var add_bias(Var x, Var bias) {
    Tape& t = same_tape(x, bias);
    const std::size_t ix = x.id(), ib = bias.id();
    return t.record(ops::add_bias(x.value(), bias.value()), {ix, ib}, [ix, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        accumulate(tp, ix, g);
        if (tp.requires_grad(ib)) {
            Tensor& gb = tp.grad_slot(ib);
            const std::size_t n = gb.numel();
            for (std::size_t i = 0; i < g.numel(); ++i) gb[i % n] += g[i];
        }
    });
}

Var relu(Var x) {
    Tape& t = *x.tape();
    const std::size_t ix = x.id();
    return t.record(ops::relu(x.value()), {ix}, [ix](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        const Tensor& in = tp.value(ix);
        Tensor d(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) d[i] = in[i] > 0.0 ? g[i] : 0.0;
        accumulate(tp, ix, d);
    });
}

Var add(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(ops::add(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        accumulate(tp, ia, g);
        accumulate(tp, ib, g);
    });
}

Var sub(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(ops::sub(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        accumulate(tp, ia, g);
        if (tp.requires_grad(ib)) accumulate(tp, ib, ops::scale(g, -1.0));
    });
}

Var mul(Var a, Var b) {
    Tape& t = same_tape(a, b);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(ops::mul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        if (tp.requires_grad(ia)) accumulate(tp, ia, ops::mul(g, tp.value(ib)));
        if (tp.requires_grad(ib)) accumulate(tp, ib, ops::mul(g, tp.value(ia)));
    });
}

Var scale(Var a, double s) {
    Tape& t = *a.tape();
    const std::size_t ia = a.id();
    return t.record(ops::scale(a.value(), s), {ia}, [ia, s](Tape& tp, std::size_t self) {
        accumulate(tp, ia, ops::scale(tp.grad_of(self), s));
    });
}

Var sum(Var a) {
    Tape& t = *a.tape();
    const std::size_t ia = a.id();
    return t.record(Tensor::scalar(ops::sum(a.value())), {ia}, [ia](Tape& tp, std::size_t self) {
        const double g = tp.grad_of(self)[0];
        accumulate(tp, ia, Tensor::full(tp.value(ia).shape(), g));
    });
}

Var log_softmax_nll(Var logits, std::span<const int> labels) {
    Tape& t = *logits.tape();
    const std::size_t il = logits.id();
    const double loss = ops::log_softmax_nll(logits.value(), labels);
    std::vector<int> lab(labels.begin(), labels.end());
    return t.record(Tensor::scalar(loss), {il}, [il, lab = std::move(lab)](Tape& tp, std::size_t self) {
        const double g = tp.grad_of(self)[0];
        // d/dz mean_r(-log softmax(z_r)[y_r]) = (softmax(z_r) - onehot(y_r)) / B
        Tensor d = ops::log_softmax(tp.value(il));
        const std::size_t rows = d.shape()[0], cols = d.shape()[1];
        const double inv_b = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                double p = std::exp(d.at(r, c));
                if (static_cast<int>(c) == lab[r]) p -= 1.0;
                d.at(r, c) = p * inv_b * g;
            }
        }
        accumulate(tp, il, d);
    });
}

}  // namespace fggm
