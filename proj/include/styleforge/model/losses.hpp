// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "styleforge/corpus/corpus.hpp"
#include "styleforge/model/transformer.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::model {

/// How a loss call runs. With `grads` set, grad_scale * d(loss) is
/// accumulated into it; with `dropout_rng` set, dropout is active.
template <typename T>
struct PassOptions {
    ParameterSet<T>* grads = nullptr;
    Rng* dropout_rng = nullptr;
    double grad_scale = 1.0;
};

struct DaePair {
    std::span<const TokenId> noisy;
    std::span<const TokenId> original;
};

struct NllTotals {
    double nll = 0.0;
    std::size_t tokens = 0;
};

// Causal scoring convention used everywhere: the model always conditions on
// a leading BOS. If a sequence does not start with BOS one is prepended as
// context, and every token after it is scored.

/// Mean NLL over all target positions of the batch. Throws ModeError for a
/// causal model and DegenerateInputError when the batch has no targets.
template <typename T>
double mlm_loss(const LanguageModel<T>& lm, std::span<const corpus::MlmSample> batch, PassOptions<T> opts = {});

/// Token-weighted mean of -log P(x_t | x_<t) over the batch. Throws
/// ModeError for a bidirectional model.
template <typename T>
double clm_loss(const LanguageModel<T>& lm, std::span<const TokenSequence> batch, PassOptions<T> opts = {});

/// r(x) = sum_t log P(x_t | x_<t) (always <= 0). Throws ModeError for a
/// bidirectional model and DegenerateInputError when nothing is scored.
template <typename T>
double sequence_log_prob(const LanguageModel<T>& lm, std::span<const TokenId> tokens);

/// Summed NLL and scored-token count over a corpus (causal model).
template <typename T>
NllTotals corpus_nll(const LanguageModel<T>& lm, std::span<const TokenSequence> corpus);

/// -log P(original | noisy) under teacher forcing, summed per sequence and
/// averaged over the batch.
template <typename T>
double dae_loss(const EncoderDecoder<T>& encdec, std::span<const DaePair> batch, PassOptions<T> opts = {});

template <typename T>
double dae_loss(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy, std::span<const TokenId> original,
                PassOptions<T> opts = {});

}  // namespace styleforge::model
