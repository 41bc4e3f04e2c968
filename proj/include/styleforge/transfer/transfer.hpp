// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "styleforge/corpus/corpus.hpp"
#include "styleforge/discriminator/discriminator.hpp"
#include "styleforge/model/generate.hpp"
#include "styleforge/model/optimizer.hpp"
#include "styleforge/model/transformer.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::transfer {

using discriminator::StyleDiscriminator;
using model::EncoderDecoder;
using tokenizer::TokenId;
using tokenizer::TokenSequence;

struct TransferConfig {
    double lambda_dae = 1.0;
    /// One weight per discriminator, in discriminator order.
    std::vector<double> lambdas;
    double sample_temperature = 1.0;
    std::size_t max_len = 32;
    /// Divide each reward by its scored token count.
    bool reward_length_normalize = false;
    /// Sampling support; empty means every non-special id. EOS is added
    /// when `allow_eos` is set.
    std::vector<TokenId> support;
    bool allow_eos = true;

    std::size_t steps = 500;
    /// Leading steps trained on the DAE term alone (style weights held at 0).
    std::size_t warmup_steps = 0;
    std::size_t batch_size = 8;
    std::uint64_t seed = 1;
    model::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8, 1.0};
    corpus::NoiseConfig noise;
    corpus::NoiseConfig inference_noise{0.0, 0.1, 0.15, 0.8, 0.1, 0.1};
    /// Transferred examples kept in each trace row.
    std::size_t trace_samples = 2;
    /// Checkpoint callback period in steps; 0 disables.
    std::size_t checkpoint_every = 0;

    /// Throws ConfigError for negative or all-zero weights, a weight count
    /// different from `num_discriminators`, or bad sampling settings.
    void validate(std::size_t num_discriminators) const;
    /// Sampling policy used for x'.
    model::GenerationOptions policy() const;
};

/// Rewards for one sample under one discriminator.
struct RewardRecord {
    std::string style;
    double r_input = 0.0;   // r(x), the baseline
    double r_sample = 0.0;  // r(x')
    double advantage = 0.0;  // r_sample - r_input
};

struct StyleLoss {
    double loss = 0.0;
    RewardRecord reward;
    TokenSequence sample;
};

/// Gradient accumulation target for the generator.
template <typename T>
struct GradTarget {
    model::ParameterSet<T>* grads = nullptr;
    double scale = 1.0;
};

/// Reward of a sequence, optionally length-normalised.
double reward(const StyleDiscriminator& disc, std::span<const TokenId> tokens, bool length_normalize);

/// advantage * (-log pi(x' | x_noisy)) for a given sample x'. The advantage
/// is a constant; only the log-probability carries gradient.
template <typename T>
StyleLoss reinforce_style_loss_for_sample(const EncoderDecoder<T>& encdec, const StyleDiscriminator& disc,
                                          std::span<const TokenId> x, std::span<const TokenId> x_noisy,
                                          std::span<const TokenId> sample, const TransferConfig& cfg,
                                          GradTarget<T> grad = {});

/// Draws x' ~ pi(. | x_noisy) (one resample when x' is empty) and returns
/// the REINFORCE loss. Throws DegenerateInputError when both draws are empty.
template <typename T>
StyleLoss reinforce_style_loss(const EncoderDecoder<T>& encdec, const StyleDiscriminator& disc,
                               std::span<const TokenId> x, std::span<const TokenId> x_noisy,
                               const TransferConfig& cfg, Rng& rng, GradTarget<T> grad = {});

/// Draws a non-empty sample under the policy of `cfg`.
template <typename T>
TokenSequence draw_sample(const EncoderDecoder<T>& encdec, std::span<const TokenId> x_noisy,
                          const TransferConfig& cfg, Rng& rng);

struct TraceRow {
    std::size_t step = 0;
    double dae = 0.0;
    std::vector<std::string> styles;
    std::vector<double> style_losses;
    std::vector<double> lambdas;
    double lambda_dae = 0.0;
    double total = 0.0;
    std::vector<double> mean_advantage;
    std::vector<double> mean_r_input;
    std::vector<double> mean_r_sample;
    double grad_norm = 0.0;
    // Items whose style terms were skipped because sampling came back empty twice.
    std::size_t degenerate_samples = 0;
    std::vector<TokenSequence> inputs;
    std::vector<TokenSequence> samples;

    /// lambda_dae * dae + sum_i lambdas[i] * style_losses[i].
    double weighted_sum() const;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
};

/// Cached r(x) lookup: (discriminator index, position in batch) -> r(x).
using BaselineFn = std::function<double(std::size_t disc, std::size_t item)>;

/// lambda_dae * L_DAE + sum_i lambda_i * L^{s_i} over one batch. Every sample
/// x' is scored by all discriminators. Components are batch means.
template <typename T>
TraceRow total_loss(const EncoderDecoder<T>& encdec, std::span<const StyleDiscriminator> discs,
                    std::span<const TokenSequence> x, std::span<const TokenSequence> x_noisy,
                    const TransferConfig& cfg, Rng& rng, GradTarget<T> grad = {}, Rng* dropout_rng = nullptr,
                    const BaselineFn& baseline = {});

struct TrainHooks {
    /// After every step.
    std::function<void(const TraceRow&)> on_step;
    /// Every cfg.checkpoint_every steps and after the last one.
    std::function<void(std::size_t step, const EncoderDecoder<float>&, const model::AdamState<float>&)>
        on_checkpoint;
};

/// Joint training on the style-agnostic mixture. Discriminators are only
/// read. Throws DivergenceError if the loss blows up.
TrainingTrace train_transfer(EncoderDecoder<float>& encdec, std::span<const StyleDiscriminator> discs,
                             std::span<const TokenSequence> mixture, const TransferConfig& cfg,
                             const TrainHooks& hooks = {}, model::Adam<float>* optimizer = nullptr,
                             std::size_t start_step = 0);

/// Inference: tokenize, apply the inference noise (seeded from cfg.seed and
/// the sentence), greedy decode, detokenize. Throws DegenerateInputError
/// when the sentence has no tokens.
std::string transfer(const EncoderDecoder<float>& encdec, const std::string& sentence,
                     const tokenizer::Tokenizer& tok, const TransferConfig& cfg);

/// Token-level variant used by evaluation code.
TokenSequence transfer_tokens(const EncoderDecoder<float>& encdec, std::span<const TokenId> framed,
                              const TransferConfig& cfg, std::uint64_t noise_seed);

}  // namespace styleforge::transfer
