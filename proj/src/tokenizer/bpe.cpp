// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/tokenizer/bpe.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"

namespace styleforge::tokenizer {

namespace {

constexpr std::string_view kSpecialStrings[] = {"<pad>", "<s>", "</s>", "<mask>", "<unk>"};
constexpr std::string_view kHeaderPrefix = "BPE v1 ";

// Merge every non-overlapping occurrence of (left, right), scanning left to right.
bool merge_in_place(std::vector<std::string>& symbols, const std::string& left, const std::string& right) {
    bool changed = false;
    std::vector<std::string> out;
    out.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
            out.push_back(left + right);
            i += 2;
            changed = true;
        } else {
            out.push_back(std::move(symbols[i]));
            ++i;
        }
    }
    symbols = std::move(out);
    return changed;
}

std::vector<std::string> initial_symbols(std::string_view word) {
    std::vector<std::string> symbols = utf8_chars(word);
    if (!symbols.empty()) symbols.back() += kEndOfWord;
    return symbols;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size();) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) {
            len = 4;
        } else if (lead >= 0xE0) {
            len = 3;
        } else if (lead >= 0xC0) {
            len = 2;
        }
        if (i + len > text.size()) len = 1;
        out.emplace_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

Vocabulary::Vocabulary() {
    for (std::string_view s : kSpecialStrings) add(std::string(s));
}

TokenId Vocabulary::add(const std::string& token) {
    if (token.empty()) throw ConfigError("vocabulary tokens must be non-empty");
    if (auto it = token_to_id_.find(token); it != token_to_id_.end()) return it->second;
    const auto id = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw InvalidTokenError("token id " + std::to_string(id) + " outside vocabulary of size " +
                                std::to_string(id_to_token_.size()));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

Tokenizer::Tokenizer(Vocabulary vocab, MergeTable merges) : vocab_(std::move(vocab)), merges_(std::move(merges)) {
    for (std::size_t r = 0; r < merges_.size(); ++r) {
        ranks_.emplace(std::make_pair(merges_[r].left, merges_[r].right), r);
    }
}

Tokenizer Tokenizer::train(std::span<const std::string> corpus, std::size_t num_merges) {
    std::map<std::string, std::size_t> word_counts;
    for (const auto& line : corpus) {
        for (auto w : split_words(line)) ++word_counts[std::string(w)];
    }
    if (word_counts.empty()) throw ConfigError("cannot train BPE on an empty corpus");

    std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
    std::set<std::string> alphabet;
    for (const auto& [word, count] : word_counts) {
        words.emplace_back(initial_symbols(word), count);
        for (auto& c : utf8_chars(word)) alphabet.insert(c);
    }

    // Both the word-internal and word-final form of every character, so any
    // sentence over the training alphabet can be encoded.
    std::set<std::string> base;
    for (const auto& c : alphabet) {
        base.insert(c);
        base.insert(c + std::string(kEndOfWord));
    }
    Vocabulary vocab;
    for (const auto& s : base) vocab.add(s);

    MergeTable merges;
    while (merges.size() < num_merges) {
        std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
        for (const auto& [symbols, count] : words) {
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) pair_counts[{symbols[i], symbols[i + 1]}] += count;
        }
        if (pair_counts.empty()) break;
        auto best = pair_counts.begin();
        for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
            if (it->second > best->second) best = it;
        }
        const MergePair merge{best->first.first, best->first.second};
        for (auto& [symbols, count] : words) merge_in_place(symbols, merge.left, merge.right);
        vocab.add(merge.left + merge.right);
        merges.push_back(merge);
    }
    return Tokenizer(std::move(vocab), std::move(merges));
}

std::vector<std::string> Tokenizer::word_symbols(std::string_view word) const {
    std::vector<std::string> symbols = initial_symbols(word);
    // Equivalent to applying the merges one after another in learned order:
    // always take the lowest-ranked pair that ranks after the last applied merge.
    std::size_t floor = 0;
    bool first = true;
    while (symbols.size() > 1) {
        std::size_t best = SIZE_MAX;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = ranks_.find({symbols[i], symbols[i + 1]});
            if (it != ranks_.end() && (first || it->second > floor) && it->second < best) best = it->second;
        }
        if (best == SIZE_MAX) break;
        merge_in_place(symbols, merges_[best].left, merges_[best].right);
        floor = best;
        first = false;
    }
    return symbols;
}

TokenSequence Tokenizer::encode(std::string_view text) const {
    TokenSequence ids;
    for (auto word : split_words(text)) {
        for (const auto& sym : word_symbols(word)) {
            auto id = vocab_.find(sym);
            ids.push_back(id ? *id : kUnk);
        }
    }
    return ids;
}

TokenSequence Tokenizer::encode_framed(std::string_view text) const {
    TokenSequence ids{kBos};
    auto body = encode(text);
    ids.insert(ids.end(), body.begin(), body.end());
    ids.push_back(kEos);
    return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        const std::string& tok = vocab_.token(id);
        if (is_special(id)) continue;
        if (tok.size() >= kEndOfWord.size() && tok.ends_with(kEndOfWord)) {
            out.append(tok, 0, tok.size() - kEndOfWord.size());
            out.push_back(' ');
        } else {
            out += tok;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string Tokenizer::serialize() const {
    std::ostringstream os;
    os << kHeaderPrefix << merges_.size() << '\n';
    for (const auto& tok : vocab_.tokens()) os << tok << '\n';
    for (const auto& m : merges_) os << m.left << ' ' << m.right << '\n';
    return os.str();
}

Tokenizer Tokenizer::parse(std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream is{std::string(text)};
    for (std::string line; std::getline(is, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    if (lines.empty() || !lines[0].starts_with(kHeaderPrefix)) throw ConfigError("not a BPE v1 file");
    std::size_t num_merges = 0;
    try {
        num_merges = std::stoul(lines[0].substr(kHeaderPrefix.size()));
    } catch (const std::exception&) {
        throw ConfigError("malformed BPE header: " + lines[0]);
    }
    if (lines.size() < 1 + kNumSpecial + num_merges) throw ConfigError("truncated BPE file");
    const std::size_t num_tokens = lines.size() - 1 - num_merges;

    Vocabulary vocab;
    for (std::size_t i = 0; i < num_tokens; ++i) {
        const std::string& tok = lines[1 + i];
        if (i < static_cast<std::size_t>(kNumSpecial)) {
            if (tok != kSpecialStrings[i]) throw ConfigError("BPE file special token mismatch at line " + std::to_string(i + 2));
            continue;
        }
        if (vocab.add(tok) != static_cast<TokenId>(i)) throw ConfigError("duplicate token in BPE file: " + tok);
    }
    MergeTable merges;
    for (std::size_t i = 0; i < num_merges; ++i) {
        const std::string& line = lines[1 + num_tokens + i];
        const auto sp = line.find(' ');
        if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
            throw ConfigError("malformed merge line: " + line);
        }
        merges.push_back({line.substr(0, sp), line.substr(sp + 1)});
    }
    return Tokenizer(std::move(vocab), std::move(merges));
}

void Tokenizer::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << serialize();
    if (!os) throw IoError("write failed: " + path.string());
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::uint64_t Tokenizer::hash() const { return fnv1a(serialize()); }

std::pair<Vocabulary, MergeTable> train_bpe(std::span<const std::string> corpus, std::size_t num_merges) {
    Tokenizer t = Tokenizer::train(corpus, num_merges);
    return {t.vocab(), t.merges()};
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, const MergeTable& merges) {
    return Tokenizer(vocab, merges).encode(text);
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
    return Tokenizer(vocab, {}).decode(ids);
}

}  // namespace styleforge::tokenizer
