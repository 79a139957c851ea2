// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "fggm/autodiff.hpp"
#include "oracles.hpp"

using namespace fggm;

TEST_CASE("matmul and sum gradients") {
    Tape tape;
    const Var a = tape.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
    const Var b = tape.leaf(Tensor::matrix({{5, 6}, {7, 8}}));
    tape.backward(sum(matmul(a, b)));
    // d/dA sum(AB) = 1 B^T, d/dB = A^T 1
    const Tensor ga = tape.grad(a);
    const Tensor gb = tape.grad(b);
    CHECK(ga.at(0, 0) == 11.0);
    CHECK(ga.at(1, 1) == 15.0);
    CHECK(gb.at(0, 0) == 4.0);
    CHECK(gb.at(1, 1) == 6.0);
}

TEST_CASE("relu subgradient at zero is zero") {
    Tape tape;
    const Var x = tape.leaf(Tensor::vector({-1.0, 0.0, 2.0}));
    tape.backward(sum(relu(x)));
    const Tensor g = tape.grad(x);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 1.0);
}

TEST_CASE("shared subexpressions accumulate") {
    Tape tape;
    const Var x = tape.leaf(Tensor::vector({3.0}));
    const Var y = mul(x, x);
    tape.backward(sum(add(y, scale(x, 2.0))));
    CHECK(tape.grad(x)[0] == 8.0);
}

TEST_CASE("sub and transpose") {
    Tape tape;
    const Var a = tape.leaf(Tensor::matrix({{1, 2, 3}}));
    const Var b = tape.leaf(Tensor::matrix({{1}, {1}, {1}}));
    tape.backward(sum(sub(transpose(a), b)));
    CHECK(tape.grad(a).at(0, 2) == 1.0);
    CHECK(tape.grad(b).at(1, 0) == -1.0);
}

TEST_CASE("cross-entropy gradient is (softmax - onehot) / B") {
    Tape tape;
    const Var z = tape.leaf(Tensor::matrix({{0.0, 0.0}, {std::log(3.0), 0.0}}));
    const int labels[] = {0, 1};
    tape.backward(log_softmax_nll(z, labels));
    const Tensor g = tape.grad(z);
    CHECK(g.at(0, 0) == doctest::Approx(-0.25));
    CHECK(g.at(0, 1) == doctest::Approx(0.25));
    CHECK(g.at(1, 0) == doctest::Approx(0.375));
    CHECK(g.at(1, 1) == doctest::Approx(-0.375));
}

TEST_CASE("constants receive no gradient and no backward work") {
    Tape tape;
    const Var c = tape.constant(Tensor::vector({1.0, 2.0}));
    const Var d = tape.constant(Tensor::vector({3.0, 4.0}));
    const Var x = tape.leaf(Tensor::vector({1.0, 1.0}));
    const Var cd = mul(c, d);  // constant-only subgraph
    tape.backward(sum(mul(x, cd)));
    CHECK(tape.grad(x)[1] == 8.0);
    CHECK(tape.backward_visits() == 2);
}

TEST_CASE("backward contract violations") {
    SUBCASE("non-scalar loss") {
        Tape tape;
        const Var x = tape.leaf(Tensor::vector({1.0, 2.0}));
        CHECK_THROWS_AS(tape.backward(x), Error);
    }
    SUBCASE("second backward") {
        Tape tape;
        const Var x = tape.leaf(Tensor::vector({1.0}));
        const Var s = sum(x);
        tape.backward(s);
        try {
            tape.backward(s);
            FAIL("expected a contract error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Contract);
        }
    }
    SUBCASE("intermediates are freed after backward") {
        Tape tape;
        const Var x = tape.leaf(Tensor::vector({1.0, 2.0}));
        const Var y = scale(x, 2.0);
        tape.backward(sum(y));
        CHECK_THROWS_AS(y.value(), Error);
        CHECK(x.value()[1] == 2.0);
    }
}

TEST_CASE("traced MLP gradient equals hand-written backprop") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelSpec spec = oracle::random_spec(rng, 3, 8);
        const ParamSet p = oracle::random_params(rng, spec);
        const Dataset d = oracle::random_dataset(rng, 1 + rng.below(6), spec.input_dim, spec.num_classes);
        const auto [l, g] = loss_and_grads(p, d);
        CHECK(l == doctest::Approx(static_cast<double>(oracle::loss(p, d))).epsilon(1e-13));
        const ParamSet ref = oracle::grads(p, d);
        for (std::size_t k = 0; k < g.size(); ++k)
            for (std::size_t j = 0; j < g[k].tensor.numel(); ++j)
                CHECK(std::fabs(g[k].tensor[j] - ref[k].tensor[j]) <= 1e-13 * std::max(1.0, std::fabs(ref[k].tensor[j])));
    }
}
