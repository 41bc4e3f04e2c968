// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"

namespace styleforge::corpus {

using tokenizer::is_special;

void NoiseConfig::validate() const {
    const std::pair<const char*, double> values[] = {
        {"p_drop", p_drop},           {"p_mask", p_mask},
        {"mlm_select", mlm_select},   {"mlm_mask_frac", mlm_mask_frac},
        {"mlm_random_frac", mlm_random_frac}, {"mlm_keep_frac", mlm_keep_frac},
    };
    for (const auto& [name, v] : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("noise.") + name + " must lie in [0, 1]");
    }
    if (std::abs(mlm_mask_frac + mlm_random_frac + mlm_keep_frac - 1.0) > 1e-9) {
        throw ConfigError("MLM mask/random/keep fractions must sum to 1");
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    for (const auto& l : lines) os << l << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

StyledCorpus make_corpus(std::span<const std::string> lines, const std::string& dimension, const std::string& label,
                         const tokenizer::Tokenizer& tok, std::size_t max_len) {
    if (max_len < 3) throw ConfigError("max sequence length must allow at least one token");
    StyledCorpus corpus{{}, dimension, label};
    for (const auto& line : lines) {
        TokenSequence ids = tok.encode_framed(line);
        if (ids.size() <= 2) continue;
        if (ids.size() > max_len) {
            ids.resize(max_len);
            ids.back() = tokenizer::kEos;
        }
        corpus.sentences.push_back(std::move(ids));
    }
    if (corpus.sentences.empty()) throw ConfigError("corpus " + dimension + "/" + label + " has no usable lines");
    return corpus;
}

StyledCorpus load_corpus(const std::filesystem::path& path, const std::string& dimension, const std::string& label,
                         const tokenizer::Tokenizer& tok, std::size_t max_len) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ConfigError("corpus file " + path.string() + " has no usable lines");
    return make_corpus(lines, dimension, label, tok, max_len);
}

MixedCorpus mix_corpora(std::span<const StyledCorpus> corpora, std::uint64_t seed) {
    if (corpora.empty()) throw ConfigError("mix_corpora needs at least one corpus");
    MixedCorpus mixed;
    for (const auto& c : corpora) {
        mixed.source_sizes.push_back(c.sentences.size());
        mixed.sentences.insert(mixed.sentences.end(), c.sentences.begin(), c.sentences.end());
    }
    Rng rng(seed);
    std::shuffle(mixed.sentences.begin(), mixed.sentences.end(), rng.engine());
    return mixed;
}

void dump_corpus(const std::filesystem::path& path, std::span<const TokenSequence> sentences,
                 const tokenizer::Tokenizer& tok) {
    std::vector<std::string> lines;
    lines.reserve(sentences.size());
    for (const auto& s : sentences) lines.push_back(tok.decode(s));
    write_lines(path, lines);
}

MlmSample apply_mlm_mask(std::span<const TokenId> tokens, const NoiseConfig& cfg, std::size_t vocab_size, Rng& rng) {
    MlmSample out{TokenSequence(tokens.begin(), tokens.end()), {}};
    const auto num_regular = vocab_size - static_cast<std::size_t>(tokenizer::kNumSpecial);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (is_special(tokens[i])) continue;
        if (!rng.bernoulli(cfg.mlm_select)) continue;
        out.targets.push_back({i, tokens[i]});
        const double action = rng.uniform();
        if (action < cfg.mlm_mask_frac) {
            out.corrupted[i] = tokenizer::kMask;
        } else if (action < cfg.mlm_mask_frac + cfg.mlm_random_frac && num_regular > 0) {
            out.corrupted[i] = tokenizer::kNumSpecial + static_cast<TokenId>(rng.below(num_regular));
        }
    }
    return out;
}

TokenSequence apply_dae_noise(std::span<const TokenId> tokens, const NoiseConfig& cfg, Rng& rng) {
    TokenSequence out;
    out.reserve(tokens.size());
    for (TokenId t : tokens) {
        if (is_special(t)) {
            out.push_back(t);
            continue;
        }
        if (rng.bernoulli(cfg.p_drop)) continue;
        out.push_back(rng.bernoulli(cfg.p_mask) ? tokenizer::kMask : t);
    }
    return out;
}

std::uint64_t corpus_hash(std::span<const TokenSequence> sentences) {
    Fnv1a h;
    for (const auto& s : sentences) {
        h.update(std::as_bytes(std::span(s)));
        h.update(std::string_view("\n"));
    }
    return h.digest();
}

}  // namespace styleforge::corpus
