// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fggm/error.hpp"

namespace fggm {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major tensor of doubles. A value type: copies are deep.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({}, {v}); }
    static Tensor vector(std::vector<double> v);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor full(Shape shape, double v);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t numel() const noexcept { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    double item() const;
    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    bool all_finite() const noexcept;

    /// Bitwise equality of shape and payload (distinguishes -0.0 from 0.0, NaN payloads).
    bool bit_equal(const Tensor& other) const noexcept;

private:
    Shape shape_;
    std::vector<double> data_;
};

namespace ops {

// Eager primitives. The traced counterparts in autodiff.hpp reuse these for the forward pass.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// x[B×N] + b[N], broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double sum(const Tensor& a);

/// Row-wise log-softmax (max-shifted).
Tensor log_softmax(const Tensor& logits);
/// Mean over rows of -log softmax(logits)[label].
double log_softmax_nll(const Tensor& logits, std::span<const int> labels);

}  // namespace ops

}  // namespace fggm
