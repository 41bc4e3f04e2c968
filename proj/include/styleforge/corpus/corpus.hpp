// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "styleforge/rng.hpp"
#include "styleforge/tokenizer/bpe.hpp"

namespace styleforge::corpus {

using tokenizer::TokenId;
using tokenizer::TokenSequence;

/// Sentences from one style label of one style dimension. Sentences are
/// framed (BOS ... EOS).
struct StyledCorpus {
    std::vector<TokenSequence> sentences;
    std::string dimension;
    std::string label;
};

/// Style-agnostic shuffle of several corpora; labels are discarded on purpose.
struct MixedCorpus {
    std::vector<TokenSequence> sentences;
    std::vector<std::size_t> source_sizes;
};

struct NoiseConfig {
    double p_drop = 0.1;
    double p_mask = 0.1;
    double mlm_select = 0.15;
    double mlm_mask_frac = 0.8;
    double mlm_random_frac = 0.1;
    double mlm_keep_frac = 0.1;

    /// Throws ConfigError when a value leaves [0, 1] or the MLM fractions do
    /// not sum to 1 (within 1e-9).
    void validate() const;
};

struct MaskTarget {
    std::size_t position;
    TokenId original;
};

struct MlmSample {
    TokenSequence corrupted;
    std::vector<MaskTarget> targets;
};

/// Non-blank lines of a UTF-8 text file. Throws IoError if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

/// Tokenizes one sentence per line. Sentences longer than `max_len` framed
/// tokens are truncated (EOS kept). Throws IoError / ConfigError (no lines).
StyledCorpus load_corpus(const std::filesystem::path& path, const std::string& dimension,
                         const std::string& label, const tokenizer::Tokenizer& tok, std::size_t max_len = 64);

StyledCorpus make_corpus(std::span<const std::string> lines, const std::string& dimension, const std::string& label,
                         const tokenizer::Tokenizer& tok, std::size_t max_len = 64);

/// Seed-deterministic permutation of the concatenation.
MixedCorpus mix_corpora(std::span<const StyledCorpus> corpora, std::uint64_t seed);

/// Writes one decoded sentence per line.
void dump_corpus(const std::filesystem::path& path, std::span<const TokenSequence> sentences,
                 const tokenizer::Tokenizer& tok);

/// BERT-style corruption. Special tokens are never selected; random
/// replacements are drawn uniformly from the non-special ids.
MlmSample apply_mlm_mask(std::span<const TokenId> tokens, const NoiseConfig& cfg, std::size_t vocab_size, Rng& rng);

/// Drop each non-special token with p_drop, then mask each survivor with p_mask.
TokenSequence apply_dae_noise(std::span<const TokenId> tokens, const NoiseConfig& cfg, Rng& rng);

/// FNV-1a over the token ids of every sentence; used as corpus provenance.
std::uint64_t corpus_hash(std::span<const TokenSequence> sentences);

}  // namespace styleforge::corpus
