// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace styleforge::model {

enum class AttentionMode { Bidirectional, Causal };

std::string_view to_string(AttentionMode mode);
AttentionMode attention_mode_from_string(std::string_view s);

/// Transformer body hyper-parameters. Defaults are the small desk scale; the
/// full-size setting is 12 layers, 512 hidden, 16 heads.
struct TransformerConfig {
    std::size_t num_layers = 2;
    std::size_t hidden_size = 128;
    std::size_t num_heads = 4;
    double dropout = 0.1;
    std::size_t max_positions = 64;
    std::size_t vocab_size = 0;

    std::size_t head_dim() const { return hidden_size / num_heads; }
    std::size_t ffn_size() const { return 4 * hidden_size; }

    /// Throws ConfigError on zero counts, dropout outside [0, 1) or a hidden
    /// size not divisible by the head count.
    void validate() const;

    bool operator==(const TransformerConfig&) const = default;
};

/// Closed-form parameter count of a LanguageModel with this config:
/// embeddings + positions + per-layer blocks + final norm + output bias.
std::size_t lm_parameter_count(const TransformerConfig& cfg);

/// Additional parameters a decoder layer gains from cross-attention.
std::size_t cross_attention_parameter_count(const TransformerConfig& cfg);

}  // namespace styleforge::model
