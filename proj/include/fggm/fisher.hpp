// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>

#include "fggm/model.hpp"

namespace fggm {

/// Empirical diagonal Fisher: per-parameter mean of squared log-likelihood gradients.
struct FisherDiag {
    NamedTensors scores;
    std::size_t sample_count = 0;
};

struct FisherMode {
    enum class Kind { PerSample, PerBatch };
    Kind kind = Kind::PerSample;
    std::size_t batch_size = 1;

    static FisherMode per_sample() { return {}; }
    /// Squares minibatch-mean gradients. Approximate unless batch_size == 1.
    static FisherMode per_batch(std::size_t b) { return {Kind::PerBatch, b}; }
};

/// Running sum of squared gradients. Partial accumulators over disjoint chunks
/// of the data can be merged in any order.
class FisherAccumulator {
public:
    explicit FisherAccumulator(const ParamSet& like);

    void add_squared(const Gradients& grads);
    void merge(const FisherAccumulator& other);
    std::size_t steps() const noexcept { return steps_; }
    FisherDiag finalize(std::size_t sample_count) const;

private:
    NamedTensors sum_;
    std::size_t steps_ = 0;
};

/// Gradients of -log p(y|x) are taken with the true labels. In per-sample mode the
/// result is (1/M) sum_j g_j^2; in per-batch mode, the mean of squared batch-mean
/// gradients over ceil(M/B) chunks taken in dataset order.
FisherDiag estimate_diag_fim(const ParamSet& params, const Dataset& data, FisherMode mode = FisherMode::per_sample());

/// Same estimate accumulated over [begin, end) only, for partitioned evaluation.
FisherAccumulator accumulate_fim(const ParamSet& params, const Dataset& data, FisherMode mode, std::size_t begin,
                                 std::size_t end);

void save_fisher(const FisherDiag& fisher, const std::filesystem::path& path);
FisherDiag load_fisher(const std::filesystem::path& path);

}  // namespace fggm
