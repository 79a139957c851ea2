// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace fggm {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Io: return "io";
        case ErrorKind::BadMagic: return "bad-magic";
        case ErrorKind::Length: return "length";
        case ErrorKind::Config: return "config";
        case ErrorKind::Runtime: return "runtime";
    }
    return "unknown";
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {
    for (auto d : shape_)
        if (d == 0) fail(ErrorKind::Dimension, "tensor dimensions must be positive, got " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_)
        if (d == 0) fail(ErrorKind::Dimension, "tensor dimensions must be positive, got " + shape_str(shape_));
    if (shape_numel(shape_) != data_.size())
        fail(ErrorKind::Dimension, "shape " + shape_str(shape_) + " needs " + std::to_string(shape_numel(shape_)) +
                                       " elements, got " + std::to_string(data_.size()));
}

Tensor Tensor::vector(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) fail(ErrorKind::Dimension, "ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) fail(ErrorKind::Dimension, "rows() on non-matrix " + shape_str(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) fail(ErrorKind::Dimension, "cols() on non-matrix " + shape_str(shape_));
    return shape_[1];
}

double Tensor::item() const {
    if (data_.size() != 1) fail(ErrorKind::Contract, "item() on tensor of shape " + shape_str(shape_));
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::bit_equal(const Tensor& other) const noexcept {
    return shape_ == other.shape_ &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

namespace ops {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        fail(ErrorKind::Dimension,
             std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_matrix(const Tensor& a, const char* op) {
    if (a.rank() != 2) fail(ErrorKind::Dimension, std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        fail(ErrorKind::Dimension, "matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out({m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
    return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require_matrix(x, "add_bias");
    if (bias.rank() != 1 || bias.numel() != x.shape()[1])
        fail(ErrorKind::Dimension,
             "add_bias: bias " + shape_str(bias.shape()) + " does not match input " + shape_str(x.shape()));
    Tensor out = x;
    const std::size_t n = x.shape()[1];
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bias[i % n];
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (auto& v : out.data()) v *= s;
    return out;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

Tensor log_softmax(const Tensor& logits) {
    require_matrix(logits, "log_softmax");
    const std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
    Tensor out = logits;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data().data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(row[c] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t c = 0; c < cols; ++c) row[c] -= lse;
    }
    return out;
}

double log_softmax_nll(const Tensor& logits, std::span<const int> labels) {
    require_matrix(logits, "log_softmax_nll");
    const std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
    if (labels.size() != rows)
        fail(ErrorKind::Dimension, "log_softmax_nll: " + std::to_string(labels.size()) + " labels for " +
                                       std::to_string(rows) + " rows");
    for (std::size_t r = 0; r < rows; ++r)
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= cols)
            fail(ErrorKind::Validation, "log_softmax_nll: label " + std::to_string(labels[r]) + " at row " +
                                            std::to_string(r) + " outside [0, " + std::to_string(cols) + ")");
    const Tensor lsm = log_softmax(logits);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) total -= lsm.at(r, static_cast<std::size_t>(labels[r]));
    return total / static_cast<double>(rows);
}

}  // namespace ops

}  // namespace fggm
