// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "styleforge/model/losses.hpp"
#include "styleforge/model/transformer.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::model {

enum class DecodeMode { Greedy, Sample };

/// Decoding policy. The support restricts which ids may be emitted; by
/// default every non-special id plus EOS. Sampling draws from
/// softmax(logits / temperature) renormalised over the support.
struct GenerationOptions {
    DecodeMode mode = DecodeMode::Greedy;
    double temperature = 1.0;
    /// Maximum number of generated tokens (EOS included), BOS excluded.
    std::size_t max_len = 32;
    bool allow_eos = true;
    std::vector<TokenId> support;

    /// Throws ConfigError for max_len < 1 or a non-positive sampling temperature.
    void validate() const;
};

std::vector<char> support_mask(const GenerationOptions& opts, std::size_t vocab_size);

/// Autoregressive decoding from BOS until EOS or max_len tokens. Returns
/// BOS followed by the generated tokens.
template <typename T>
TokenSequence generate(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy,
                       const GenerationOptions& opts, Rng& rng);

/// Unconditional decoding from a causal language model.
template <typename T>
TokenSequence sample_lm(const LanguageModel<T>& lm, const GenerationOptions& opts, Rng& rng);

/// -log pi(sequence | noisy) where pi is the sampling policy of `opts`
/// (temperature and support applied). The sequence starts with BOS.
template <typename T>
double policy_nll(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy, std::span<const TokenId> sequence,
                  const GenerationOptions& opts, PassOptions<T> pass = {});

}  // namespace styleforge::model
