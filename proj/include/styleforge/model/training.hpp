// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "styleforge/corpus/corpus.hpp"
#include "styleforge/model/optimizer.hpp"
#include "styleforge/model/transformer.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::model {

/// Aborts training once the windowed mean loss exceeds `factor` times the
/// magnitude of the first full window (never less than `floor`), or on a
/// non-finite loss.
class DivergenceGuard {
public:
    explicit DivergenceGuard(double factor = 10.0, std::size_t window = 20, double floor = 1.0);

    /// Throws DivergenceError.
    void observe(double loss);
    bool has_reference() const { return has_ref_; }
    double reference() const { return ref_; }

private:
    double factor_;
    std::size_t window_;
    double floor_;
    std::vector<double> recent_;
    std::size_t next_ = 0;
    bool has_ref_ = false;
    double ref_ = 0.0;
};

/// Step-indexed minibatch order: epoch e uses a permutation seeded by
/// (seed, e), so any step's batch can be recomputed on resume.
class BatchSchedule {
public:
    BatchSchedule(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed);

    std::size_t steps_per_epoch() const { return steps_per_epoch_; }
    std::vector<std::size_t> batch(std::size_t step);

private:
    std::size_t n_, batch_size_, steps_per_epoch_;
    std::uint64_t seed_;
    std::size_t epoch_ = SIZE_MAX;
    std::vector<std::size_t> perm_;
};

/// Independent stream for (seed, step, purpose).
Rng step_rng(std::uint64_t seed, std::size_t step, std::uint64_t stream);

struct StepRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

struct MlmTrainConfig {
    std::size_t epochs = 1;
    /// Overrides `epochs` when non-zero.
    std::size_t max_steps = 0;
    std::size_t batch_size = 16;
    AdamConfig adam{3e-4, 0.9, 0.999, 1e-8, 1.0};
    std::uint64_t seed = 1;

    std::size_t total_steps(std::size_t corpus_size) const;
};

/// Fixed masked copy of `sentences` used to compare losses across runs.
std::vector<corpus::MlmSample> fixed_mlm_batch(std::span<const TokenSequence> sentences,
                                               const corpus::NoiseConfig& noise, std::size_t vocab_size,
                                               std::uint64_t seed);

/// Masked-LM training from `start_step` (0 for a fresh run) up to the
/// configured total. `optimizer` carries the moments across resumes.
/// `on_step` runs after every update.
void pretrain_mlm(LanguageModel<float>& lm, std::span<const TokenSequence> corpus, const corpus::NoiseConfig& noise,
                  const MlmTrainConfig& cfg, Adam<float>& optimizer, std::size_t start_step,
                  const StepCallback& on_step = {});

}  // namespace styleforge::model
