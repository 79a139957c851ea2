// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "fggm/optimize.hpp"
#include "oracles.hpp"

using namespace fggm;

namespace {

ParamSet one(double v) {
    ParamSet p;
    p.insert("w", Tensor::vector({v}));
    return p;
}

}  // namespace

TEST_CASE("linear decay") {
    const LinearDecay s(0.1, 4);
    CHECK(s.lr(0) == 0.1);
    CHECK(s.lr(2) == doctest::Approx(0.05));
    CHECK(s.lr(4) == 0.0);
    CHECK(s.lr(10) == 0.0);
}

TEST_CASE("AdamW matches a hand-unrolled reference") {
    const AdamWConfig cfg{0.9, 0.999, 1e-8, 0.01};
    ParamSet p = one(1.0);
    AdamWState st;
    const double gs[] = {0.5, -0.2, 0.1};
    double theta = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 3; ++t) {
        const double g = gs[t - 1], lr = 0.01;
        adamw_step(p, one(g), st, cfg, lr);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
        theta = theta * (1 - lr * 0.01) - lr * mh / (std::sqrt(vh) + 1e-8);
        CHECK(p.at("w")[0] == doctest::Approx(theta).epsilon(1e-14));
    }
    CHECK(st.step_count() == 3);
}

TEST_CASE("masked entries are untouched, including weight decay and moments") {
    Rng rng(300);
    ParamSet p = oracle::random_params(rng, ModelSpec{4, {5}, 3});
    NamedTensors mask = NamedTensors::zeros_like(p);
    for (auto& e : mask)
        for (std::size_t j = 0; j < e.tensor.numel(); j += 2) e.tensor[j] = 1.0;
    const ParamSet before = p;
    AdamWState st(p);
    const AdamWConfig cfg{0.9, 0.999, 1e-8, 0.1};
    for (int step = 0; step < 20; ++step) {
        NamedTensors g = NamedTensors::zeros_like(p);
        for (auto& e : g)
            for (double& v : e.tensor.data()) v = rng.normal();
        adamw_step(p, g, st, cfg, 0.05, &mask);
    }
    for (std::size_t k = 0; k < p.size(); ++k)
        for (std::size_t j = 0; j < p[k].tensor.numel(); ++j) {
            if (j % 2 == 1) {
                CHECK(std::memcmp(&p[k].tensor.data()[j], &before[k].tensor.data()[j], sizeof(double)) == 0);
                CHECK(st.first_moment()[k].tensor[j] == 0.0);
                CHECK(st.second_moment()[k].tensor[j] == 0.0);
            } else {
                CHECK(p[k].tensor[j] != before[k].tensor[j]);
            }
        }
}

TEST_CASE("an all-ones mask reproduces the unmasked trajectory bit for bit") {
    Rng rng(301);
    const ParamSet init = oracle::random_params(rng, ModelSpec{4, {5}, 3});
    ParamSet a = init, b = init;
    const NamedTensors ones = NamedTensors::full_like(init, 1.0);
    AdamWState sa, sb;
    const AdamWConfig cfg{0.9, 0.999, 1e-8, 0.01};
    for (int step = 0; step < 25; ++step) {
        NamedTensors g = NamedTensors::zeros_like(init);
        for (auto& e : g)
            for (double& v : e.tensor.data()) v = rng.normal();
        adamw_step(a, g, sa, cfg, 0.01);
        adamw_step(b, g, sb, cfg, 0.01, &ones);
        sgd_step(a, g, 0.001);
        sgd_step(b, g, 0.001, &ones);
    }
    CHECK(a.bit_equal(b));
}

TEST_CASE("sgd and projection") {
    ParamSet p = one(1.0);
    sgd_step(p, one(2.0), 0.1);
    CHECK(p.at("w")[0] == doctest::Approx(0.8));
    NamedTensors m;
    m.insert("w", Tensor::vector({0.25}));
    CHECK(project_gradients(one(4.0), m).at("w")[0] == 1.0);
    NamedTensors wrong;
    wrong.insert("v", Tensor::vector({1.0}));
    CHECK_THROWS_AS(project_gradients(one(4.0), wrong), Error);
    CHECK_THROWS_AS(sgd_step(p, wrong, 0.1), Error);
}
