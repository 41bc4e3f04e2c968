// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "styleforge/model/config.hpp"
#include "styleforge/model/tensor.hpp"
#include "styleforge/tokenizer/bpe.hpp"

namespace styleforge::model {

using tokenizer::TokenId;
using tokenizer::TokenSequence;

struct AttentionRefs {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
};

struct LayerRefs {
    std::size_t ln1_g, ln1_b;
    AttentionRefs self;
    bool has_cross = false;
    std::size_t lnc_g = 0, lnc_b = 0;
    AttentionRefs cross{};
    std::size_t ln2_g, ln2_b;
    std::size_t w1, b1, w2, b2;
};

/// Indices of one transformer body's tensors inside a ParameterSet.
struct StackRefs {
    std::size_t tok_emb, pos_emb;
    std::vector<LayerRefs> layers;
    std::size_t lnf_g, lnf_b, out_bias;
};

/// Registers (zero-valued) tensors for one body under `prefix`.
template <typename T>
void add_stack_parameters(ParameterSet<T>& params, const std::string& prefix, const TransformerConfig& cfg,
                          bool with_cross);

template <typename T>
StackRefs resolve_stack(const ParameterSet<T>& params, const std::string& prefix, std::size_t num_layers,
                        bool with_cross);

/// One transformer body with tied input/output embeddings, usable either as
/// a bidirectional (MLM) or causal (CLM) language model.
template <typename T>
class LanguageModel {
public:
    LanguageModel(TransformerConfig cfg, AttentionMode mode, ParameterSet<T> params);

    const TransformerConfig& config() const { return cfg_; }
    AttentionMode mode() const { return mode_; }
    void set_mode(AttentionMode mode) { mode_ = mode; }

    ParameterSet<T>& parameters() { return params_; }
    const ParameterSet<T>& parameters() const { return params_; }
    const StackRefs& refs() const { return refs_; }

    /// Per-position log-probabilities over the vocabulary (n x V), eval mode.
    Matrix<T> log_probs(std::span<const TokenId> tokens) const;

    template <typename U>
    LanguageModel<U> cast() const {
        return LanguageModel<U>(cfg_, mode_, params_.template cast<U>());
    }

private:
    TransformerConfig cfg_;
    AttentionMode mode_;
    ParameterSet<T> params_;
    StackRefs refs_;
};

/// Deterministic N(0, 0.02) initialisation of matrices and embeddings;
/// biases zero, norm gains one.
template <typename T>
LanguageModel<T> build_lm(const TransformerConfig& cfg, std::uint64_t seed,
                          AttentionMode mode = AttentionMode::Bidirectional);

/// Generator: bidirectional encoder body, causal decoder body whose layers
/// gain a cross-attention block after self-attention. All tensors live in a
/// single ParameterSet ("encoder.*", "decoder.*").
template <typename T>
class EncoderDecoder {
public:
    EncoderDecoder(TransformerConfig encoder_cfg, TransformerConfig decoder_cfg, ParameterSet<T> params);

    const TransformerConfig& encoder_config() const { return enc_cfg_; }
    const TransformerConfig& decoder_config() const { return dec_cfg_; }
    ParameterSet<T>& parameters() { return params_; }
    const ParameterSet<T>& parameters() const { return params_; }
    const StackRefs& encoder_refs() const { return enc_refs_; }
    const StackRefs& decoder_refs() const { return dec_refs_; }

    /// Encoder output for `noisy` (eval mode).
    Matrix<T> encode(std::span<const TokenId> noisy) const;
    /// Teacher-forced decoder log-probabilities (n x V) given the noisy source.
    Matrix<T> log_probs(std::span<const TokenId> noisy, std::span<const TokenId> target) const;

    template <typename U>
    EncoderDecoder<U> cast() const {
        return EncoderDecoder<U>(enc_cfg_, dec_cfg_, params_.template cast<U>());
    }

private:
    TransformerConfig enc_cfg_;
    TransformerConfig dec_cfg_;
    ParameterSet<T> params_;
    StackRefs enc_refs_;
    StackRefs dec_refs_;
};

/// Copies both bodies bit-for-bit and draws fresh cross-attention weights
/// from `seed`. Throws IncompatibleError if hidden size, heads, positions or
/// vocabulary differ.
template <typename T>
EncoderDecoder<T> build_encoder_decoder(const LanguageModel<T>& encoder_src, const LanguageModel<T>& decoder_src,
                                        std::uint64_t seed);

}  // namespace styleforge::model
