// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace styleforge::tokenizer {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr TokenId kNumSpecial = 5;

/// Appended to the last symbol of every word so decoding can restore spaces.
inline constexpr std::string_view kEndOfWord = "</w>";

inline bool is_special(TokenId id) { return id >= 0 && id < kNumSpecial; }

class Vocabulary {
public:
    /// Starts with the five special tokens at ids 0..4.
    Vocabulary();

    /// Returns the id of `token`, inserting it if new. Empty strings are rejected.
    TokenId add(const std::string& token);
    std::optional<TokenId> find(std::string_view token) const;
    /// Throws InvalidTokenError for ids outside the vocabulary.
    const std::string& token(TokenId id) const;
    std::size_t size() const { return id_to_token_.size(); }
    std::span<const std::string> tokens() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, TokenId> token_to_id_;
};

struct MergePair {
    std::string left;
    std::string right;
    auto operator<=>(const MergePair&) const = default;
};

using MergeTable = std::vector<MergePair>;

/// Vocabulary and merge table from one training run, plus the rank index
/// encoding needs. Immutable once constructed.
class Tokenizer {
public:
    Tokenizer(Vocabulary vocab, MergeTable merges);

    /// Learns `num_merges` merges (fewer if no adjacent pairs remain).
    /// Frequency ties go to the lexicographically smallest (left, right).
    static Tokenizer train(std::span<const std::string> corpus, std::size_t num_merges);

    /// Raw subword ids, no BOS/EOS. Characters outside the training alphabet
    /// become UNK.
    TokenSequence encode(std::string_view text) const;
    /// Subword ids framed as BOS ... EOS.
    TokenSequence encode_framed(std::string_view text) const;
    /// Specials are stripped; throws InvalidTokenError for unknown ids.
    std::string decode(std::span<const TokenId> ids) const;

    const Vocabulary& vocab() const { return vocab_; }
    const MergeTable& merges() const { return merges_; }
    std::size_t vocab_size() const { return vocab_.size(); }

    /// `BPE v1 <num_merges>` header, one token per line, one merge per line.
    std::string serialize() const;
    static Tokenizer parse(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static Tokenizer load(const std::filesystem::path& path);

    /// FNV-1a of serialize(); recorded in checkpoints to tie them to a vocabulary.
    std::uint64_t hash() const;

private:
    std::vector<std::string> word_symbols(std::string_view word) const;

    Vocabulary vocab_;
    MergeTable merges_;
    std::map<std::pair<std::string, std::string>, std::size_t> ranks_;
};

/// Split into UTF-8 code points (malformed bytes pass through one at a time).
std::vector<std::string> utf8_chars(std::string_view text);

/// Whitespace-separated words.
std::vector<std::string_view> split_words(std::string_view text);

/// Free-function surface mirroring the tokenizer operations.
std::pair<Vocabulary, MergeTable> train_bpe(std::span<const std::string> corpus, std::size_t num_merges);
TokenSequence encode(std::string_view text, const Vocabulary& vocab, const MergeTable& merges);
std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);

}  // namespace styleforge::tokenizer
