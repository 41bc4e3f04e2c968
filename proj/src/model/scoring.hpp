// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

// Teacher-forced scoring with optional backward pass. Shared by the losses
// and the generation policy.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "stack.hpp"
#include "styleforge/error.hpp"
#include "styleforge/model/transformer.hpp"

namespace styleforge::model::detail {

using ScoredTarget = std::pair<std::size_t, TokenId>;  // (input row, target id)

/// Optional reshaping of the output distribution: logits are divided by the
/// temperature and ids outside `allowed` are removed.
struct LogitPolicy {
    double inv_temperature = 1.0;
    const std::vector<char>* allowed = nullptr;
};

template <typename T>
struct ScoreSpec {
    const Matrix<T>* memory = nullptr;
    Matrix<T>* d_memory = nullptr;
    ParameterSet<T>* grads = nullptr;
    Rng* dropout_rng = nullptr;
    double weight = 1.0;  // gradient multiplier
    LogitPolicy policy;
};

/// Sum over targets of -log p(target | input). Accumulates weight * gradient
/// when spec.grads is set.
template <typename T>
double scored_nll(const ParameterSet<T>& P, const StackRefs& R, const TransformerConfig& cfg, AttentionMode mode,
                  std::span<const TokenId> input, std::span<const ScoredTarget> targets, const ScoreSpec<T>& spec) {
    const bool backward = spec.grads != nullptr;
    StackCache<T> cache;
    const Matrix<T> hidden =
        stack_forward<T>(P, R, cfg, mode, input, spec.memory, backward ? &cache : nullptr, spec.dropout_rng);
    std::vector<std::size_t> rows;
    rows.reserve(targets.size());
    for (const auto& [row, id] : targets) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
            throw InvalidTokenError("target id " + std::to_string(id) + " outside vocabulary");
        }
        rows.push_back(row);
    }
    const Matrix<T> h = gather_rows(hidden, std::span<const std::size_t>(rows));
    Matrix<T> lp = output_logits(P, R, h);
    const T inv_t = static_cast<T>(spec.policy.inv_temperature);
    const auto* allowed = spec.policy.allowed;
    if (inv_t != T(1) || allowed != nullptr) {
        for (std::size_t r = 0; r < lp.rows; ++r) {
            T* row = lp.row(r);
            for (std::size_t j = 0; j < lp.cols; ++j) {
                row[j] = (allowed && !(*allowed)[j]) ? -std::numeric_limits<T>::infinity() : row[j] * inv_t;
            }
        }
    }
    // The loss itself is accumulated in double from the (reshaped) logits.
    double nll = 0.0;
    for (std::size_t r = 0; r < lp.rows; ++r) {
        const T* row = lp.row(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lp.cols; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < lp.cols; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
        const double v = static_cast<double>(row[static_cast<std::size_t>(targets[r].second)]);
        if (!std::isfinite(v)) throw DegenerateInputError("target token outside the decoding support");
        nll += mx + std::log(z) - v;
    }
    if (!backward) return nll;

    log_softmax_rows(lp);
    const T scale = static_cast<T>(spec.weight) * inv_t;
    Matrix<T> d_logits(lp.rows, lp.cols);
    for (std::size_t r = 0; r < lp.rows; ++r) {
        T* dr = d_logits.row(r);
        const T* lr = lp.row(r);
        for (std::size_t j = 0; j < lp.cols; ++j) dr[j] = scale * std::exp(lr[j]);
        dr[targets[r].second] -= scale;
    }
    const Matrix<T> d_h = output_logits_backward(P, R, h, d_logits, *spec.grads);
    Matrix<T> d_hidden(hidden.rows, hidden.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        T* dst = d_hidden.row(rows[r]);
        const T* src = d_h.row(r);
        for (std::size_t j = 0; j < d_h.cols; ++j) dst[j] += src[j];
    }
    stack_backward<T>(P, R, cfg, cache, std::move(d_hidden), *spec.grads, spec.d_memory);
    return nll;
}

/// Splits a sequence into decoder input and next-token targets. A BOS is
/// prepended when missing; everything after it is scored.
inline void causal_split(std::span<const TokenId> tokens, TokenSequence& input, std::vector<ScoredTarget>& targets) {
    TokenSequence full;
    if (tokens.empty() || tokens.front() != tokenizer::kBos) full.push_back(tokenizer::kBos);
    full.insert(full.end(), tokens.begin(), tokens.end());
    if (full.size() < 2) throw DegenerateInputError("sequence has no token to score");
    input.assign(full.begin(), full.end() - 1);
    targets.clear();
    for (std::size_t i = 0; i + 1 < full.size(); ++i) targets.emplace_back(i, full[i + 1]);
}

/// Encoder-decoder teacher-forced NLL of `target` given `noisy`.
template <typename T>
double encdec_nll(const EncoderDecoder<T>& m, std::span<const TokenId> noisy, std::span<const TokenId> target,
                  ParameterSet<T>* grads, Rng* dropout_rng, double weight, LogitPolicy policy = {}) {
    const auto& P = m.parameters();
    StackCache<T> enc_cache;
    const Matrix<T> memory = stack_forward<T>(P, m.encoder_refs(), m.encoder_config(), AttentionMode::Bidirectional,
                                              noisy, nullptr, grads ? &enc_cache : nullptr, dropout_rng);
    TokenSequence input;
    std::vector<ScoredTarget> targets;
    causal_split(target, input, targets);
    Matrix<T> d_memory;
    if (grads) d_memory = Matrix<T>(memory.rows, memory.cols);
    ScoreSpec<T> spec{&memory, grads ? &d_memory : nullptr, grads, dropout_rng, weight, policy};
    const double nll = scored_nll<T>(P, m.decoder_refs(), m.decoder_config(), AttentionMode::Causal, input, targets, spec);
    if (grads) stack_backward<T>(P, m.encoder_refs(), m.encoder_config(), enc_cache, std::move(d_memory), *grads, nullptr);
    return nll;
}

}  // namespace styleforge::model::detail
