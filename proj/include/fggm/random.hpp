// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fggm {

/// mt19937_64 with hand-rolled distributions, so streams are identical on every
/// standard library (std::normal_distribution and friends are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (one draw per call, no caching).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// Seed of the named substream of `seed`. Different names give unrelated streams,
/// so adding a consumer never shifts the draws of an existing one.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline Rng substream(std::uint64_t seed, std::string_view name) { return Rng(substream_seed(seed, name)); }

}  // namespace fggm
