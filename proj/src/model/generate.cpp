// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scoring.hpp"
#include "stack.hpp"
#include "styleforge/error.hpp"

namespace styleforge::model {

namespace {

// Picks the next id from raw logits under the policy.
template <typename T>
TokenId choose(const std::vector<T>& logits, const std::vector<char>& allowed, const GenerationOptions& opts,
               Rng& rng) {
    const std::size_t V = logits.size();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = V;
    for (std::size_t j = 0; j < V; ++j) {
        if (allowed[j] && static_cast<double>(logits[j]) > best) {
            best = static_cast<double>(logits[j]);
            arg = j;
        }
    }
    if (arg == V) throw ConfigError("decoding support is empty");
    if (opts.mode == DecodeMode::Greedy) return static_cast<TokenId>(arg);

    const double inv_t = 1.0 / opts.temperature;
    std::vector<double> w(V, 0.0);
    double z = 0.0;
    for (std::size_t j = 0; j < V; ++j) {
        if (!allowed[j]) continue;
        w[j] = std::exp((static_cast<double>(logits[j]) - best) * inv_t);
        z += w[j];
    }
    double u = rng.uniform() * z;
    std::size_t last = arg;
    for (std::size_t j = 0; j < V; ++j) {
        if (w[j] == 0.0) continue;
        last = j;
        if (u < w[j]) return static_cast<TokenId>(j);
        u -= w[j];
    }
    return static_cast<TokenId>(last);
}

template <typename T>
TokenSequence run_decoder(detail::IncrementalDecoder<T>& dec, const TransformerConfig& cfg,
                          const GenerationOptions& opts, Rng& rng) {
    opts.validate();
    const auto allowed = support_mask(opts, cfg.vocab_size);
    const std::size_t cap = std::min(opts.max_len, cfg.max_positions);
    TokenSequence out{tokenizer::kBos};
    TokenId next = tokenizer::kBos;
    while (out.size() - 1 < cap) {
        const std::vector<T> logits = dec.step(next);
        next = choose(logits, allowed, opts, rng);
        out.push_back(next);
        if (next == tokenizer::kEos) break;
    }
    return out;
}

}  // namespace

void GenerationOptions::validate() const {
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (mode == DecodeMode::Sample && !(temperature > 0.0 && std::isfinite(temperature))) {
        throw ConfigError("sampling temperature must be > 0");
    }
}

std::vector<char> support_mask(const GenerationOptions& opts, std::size_t vocab_size) {
    std::vector<char> mask(vocab_size, 0);
    if (opts.support.empty()) {
        for (std::size_t j = tokenizer::kNumSpecial; j < vocab_size; ++j) mask[j] = 1;
    } else {
        for (TokenId id : opts.support) {
            if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
                throw InvalidTokenError("support id " + std::to_string(id) + " outside vocabulary");
            }
            mask[static_cast<std::size_t>(id)] = 1;
        }
    }
    if (opts.allow_eos && static_cast<std::size_t>(tokenizer::kEos) < vocab_size) mask[tokenizer::kEos] = 1;
    return mask;
}

template <typename T>
TokenSequence generate(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy, const GenerationOptions& opts,
                       Rng& rng) {
    opts.validate();
    const Matrix<T> memory = encdec.encode(noisy);
    detail::IncrementalDecoder<T> dec(encdec.parameters(), encdec.decoder_refs(), encdec.decoder_config(), &memory);
    return run_decoder(dec, encdec.decoder_config(), opts, rng);
}

template <typename T>
TokenSequence sample_lm(const LanguageModel<T>& lm, const GenerationOptions& opts, Rng& rng) {
    if (lm.mode() != AttentionMode::Causal) throw ModeError("sampling needs a causal model");
    detail::IncrementalDecoder<T> dec(lm.parameters(), lm.refs(), lm.config(), nullptr);
    return run_decoder(dec, lm.config(), opts, rng);
}

template <typename T>
double policy_nll(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy, std::span<const TokenId> sequence,
                  const GenerationOptions& opts, PassOptions<T> pass) {
    if (!(opts.temperature > 0.0)) throw ConfigError("policy temperature must be > 0");
    const auto allowed = support_mask(opts, encdec.decoder_config().vocab_size);
    detail::LogitPolicy policy{1.0 / opts.temperature, &allowed};
    return detail::encdec_nll<T>(encdec, noisy, sequence, pass.grads, pass.dropout_rng, pass.grad_scale, policy);
}

#define STYLEFORGE_INSTANTIATE(T)                                                                                \
    template TokenSequence generate<T>(const EncoderDecoder<T>&, std::span<const TokenId>,                      \
                                       const GenerationOptions&, Rng&);                                         \
    template TokenSequence sample_lm<T>(const LanguageModel<T>&, const GenerationOptions&, Rng&);              \
    template double policy_nll<T>(const EncoderDecoder<T>&, std::span<const TokenId>, std::span<const TokenId>, \
                                  const GenerationOptions&, PassOptions<T>);

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::model
