// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "fggm/fisher.hpp"
#include "fggm/masking.hpp"
#include "oracles.hpp"

using namespace fggm;

namespace {

FisherDiag random_fisher(Rng& rng, bool distinct = true) {
    const ModelSpec spec = oracle::random_spec(rng, 3, 12);
    FisherDiag f{NamedTensors::zeros_like(init_params(spec, 0)), 1};
    for (auto& e : f.scores)
        for (double& v : e.tensor.data()) v = distinct ? rng.uniform() : static_cast<double>(rng.below(3));
    return f;
}

}  // namespace

TEST_CASE("quantile matches the sort oracle exactly") {
    Rng rng(200);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(1 + rng.below(40));
        for (auto& x : v) x = trial % 3 == 0 ? static_cast<double>(rng.below(5)) : rng.normal();
        const double q = trial % 4 == 0 ? 0.1 * static_cast<double>(rng.below(11)) : rng.uniform();
        CHECK(quantile(v, q) == oracle::quantile(v, q));
    }
}

TEST_CASE("quantile endpoints and errors") {
    const std::vector<double> v{3, 1, 2};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 3.0);
    CHECK(quantile(v, 0.5) == 2.0);
    CHECK(quantile(v, 0.25) == 1.5);
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(quantile(v, 1.5), Error);
    CHECK_THROWS_AS(quantile(v, -0.1), Error);
}

TEST_CASE("aggregation sums the right axis") {
    const Tensor f = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    CHECK(aggregate_input_dim(f).values() == std::vector<double>{6, 15});
    CHECK(aggregate_output_dim(f).values() == std::vector<double>{5, 7, 9});
    CHECK_THROWS_AS(aggregate_input_dim(Tensor::vector({1, 2})), Error);
}

TEST_CASE("IA masks are row-constant, OA masks column-constant") {
    Rng rng(201);
    for (int trial = 0; trial < 50; ++trial) {
        const FisherDiag f = random_fisher(rng, trial % 2 == 0);
        const double alpha = rng.uniform(0.0, 0.99);
        const MaskSet ia = build_mask(f, alpha, Aggregation::Input);
        const MaskSet oa = build_mask(f, alpha, Aggregation::Output);
        for (std::size_t k = 0; k < ia.masks.size(); ++k) {
            const Tensor& m = ia.masks[k].tensor;
            if (m.rank() != 2) continue;
            for (std::size_t r = 0; r < m.rows(); ++r)
                for (std::size_t c = 1; c < m.cols(); ++c) CHECK(m.at(r, c) == m.at(r, 0));
            const Tensor& o = oa.masks[k].tensor;
            for (std::size_t r = 1; r < o.rows(); ++r)
                for (std::size_t c = 0; c < o.cols(); ++c) CHECK(o.at(r, c) == o.at(0, c));
        }
    }
}

TEST_CASE("IA keeps exactly the rows whose summed score beats the tensor quantile") {
    FisherDiag f{{}, 1};
    f.scores.insert("layer0.weight", Tensor::matrix({{1, 1}, {5, 5}, {2, 2}, {9, 0}}));
    f.scores.insert("layer0.bias", Tensor::vector({0.1, 0.4, 0.3, 0.2}));
    const MaskSet m = build_mask(f, 0.5, Aggregation::Input);
    // row sums 2, 10, 4, 9 -> median 6.5
    const Tensor& w = m.masks.at("layer0.weight");
    CHECK(w.at(0, 0) == 0.0);
    CHECK(w.at(1, 1) == 1.0);
    CHECK(w.at(2, 0) == 0.0);
    CHECK(w.at(3, 1) == 1.0);
    // bias elementwise, median 0.25
    CHECK(m.masks.at("layer0.bias").values() == std::vector<double>{0, 1, 1, 0});
}

TEST_CASE("raising alpha only shrinks the mask") {
    Rng rng(202);
    for (int trial = 0; trial < 100; ++trial) {
        const FisherDiag f = random_fisher(rng, trial % 2 == 0);
        const Aggregation agg = std::array{Aggregation::Input, Aggregation::Output, Aggregation::None}[trial % 3];
        double a1 = rng.uniform(0.0, 0.99), a2 = rng.uniform(0.0, 0.99);
        if (a1 > a2) std::swap(a1, a2);
        const MaskSet m1 = build_mask(f, a1, agg), m2 = build_mask(f, a2, agg);
        for (std::size_t k = 0; k < m1.masks.size(); ++k)
            for (std::size_t j = 0; j < m1.masks[k].tensor.numel(); ++j)
                CHECK(m2.masks[k].tensor[j] <= m1.masks[k].tensor[j]);
    }
}

TEST_CASE("alpha 0.7 with distinct scores keeps the top 30 percent") {
    Rng rng(203);
    for (int trial = 0; trial < 50; ++trial) {
        const FisherDiag f = random_fisher(rng);
        const MaskSet m = build_mask(f, 0.7, Aggregation::None);
        for (std::size_t k = 0; k < m.masks.size(); ++k) {
            const std::size_t n = m.masks[k].tensor.numel();
            std::size_t kept = 0;
            for (double v : m.masks[k].tensor.data()) kept += v == 1.0;
            const auto expected = n - 1 - static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n - 1)));
            CHECK(kept == expected);
            CHECK(std::fabs(static_cast<double>(kept) / static_cast<double>(n) - 0.3) <= 1.0 / static_cast<double>(n));
            // the kept entries are the largest ones
            std::vector<double> s(f.scores[k].tensor.data().begin(), f.scores[k].tensor.data().end());
            std::sort(s.rbegin(), s.rend());
            for (std::size_t j = 0; j < n; ++j)
                if (m.masks[k].tensor[j] == 1.0) CHECK(f.scores[k].tensor[j] >= s[kept - 1]);
        }
    }
}

TEST_CASE("alpha 0 keeps everything above the minimum") {
    FisherDiag f{{}, 1};
    f.scores.insert("b", Tensor::vector({0.3, 0.1, 0.2, 0.1}));
    CHECK(build_mask(f, 0.0, Aggregation::None).masks.at("b").values() == std::vector<double>{1, 0, 1, 0});
}

TEST_CASE("fully tied scores give an empty mask") {
    FisherDiag f{{}, 1};
    f.scores.insert("w", Tensor::full({3, 3}, 0.5));
    const MaskSet m = build_mask(f, 0.7, Aggregation::Input);
    CHECK(m.empty_support());
    CHECK(m.retained_fractions()[0].second == 0.0);
}

TEST_CASE("soft masks scale sub-threshold scores") {
    Rng rng(204);
    const FisherDiag f = random_fisher(rng);
    const MaskSet hard = build_mask(f, 0.6, Aggregation::None);
    const MaskSet soft = build_mask(f, 0.6, Aggregation::None, MaskMode::Soft);
    for (std::size_t k = 0; k < hard.masks.size(); ++k)
        for (std::size_t j = 0; j < hard.masks[k].tensor.numel(); ++j) {
            const double h = hard.masks[k].tensor[j], s = soft.masks[k].tensor[j];
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            if (h == 1.0) CHECK(s == 1.0);
        }
}

TEST_CASE("build_mask validation") {
    Rng rng(205);
    FisherDiag f = random_fisher(rng);
    CHECK_THROWS_AS(build_mask(f, 1.0, Aggregation::Input), Error);
    CHECK_THROWS_AS(build_mask(f, -0.1, Aggregation::Input), Error);
    f.scores[0].tensor[0] = NAN;
    CHECK_THROWS_AS(build_mask(f, 0.5, Aggregation::Input), Error);
}

TEST_CASE("aggregation names") {
    CHECK(to_string(Aggregation::Input) == "IA");
    CHECK(to_string(Aggregation::Output) == "OA");
    CHECK(to_string(Aggregation::None) == "None");
    CHECK(parse_aggregation("oa") == Aggregation::Output);
    CHECK_THROWS_AS(parse_aggregation("sideways"), Error);
}

TEST_CASE("mask files round-trip with their metadata") {
    Rng rng(206);
    const MaskSet m = build_mask(random_fisher(rng), 0.8, Aggregation::Output, MaskMode::Soft);
    const auto path = std::filesystem::temp_directory_path() / "fggm_mask_rt.mask";
    save_mask(m, path);
    const MaskSet r = load_mask(path);
    CHECK(r.masks.bit_equal(m.masks));
    CHECK(r.alpha == 0.8);
    CHECK(r.aggregation == Aggregation::Output);
    CHECK(r.mode == MaskMode::Soft);
}
