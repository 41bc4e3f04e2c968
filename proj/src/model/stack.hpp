// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

// Forward/backward machinery shared by every model role. Internal to the
// model module.

#pragma once

#include <span>
#include <vector>

#include "styleforge/model/config.hpp"
#include "styleforge/model/tensor.hpp"
#include "styleforge/model/transformer.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::model::detail {

template <typename T>
struct NormCache {
    Matrix<T> xhat;
    std::vector<T> rstd;
};

template <typename T>
struct AttentionCache {
    const Matrix<T>* xq = nullptr;
    const Matrix<T>* xkv = nullptr;
    bool causal = false;
    std::vector<Matrix<T>> q, k, v, p;  // per head
    Matrix<T> concat;
};

template <typename T>
struct LayerCache {
    NormCache<T> ln1;
    Matrix<T> ln1_out;
    AttentionCache<T> self;
    Matrix<T> drop_self;
    NormCache<T> lnc;
    Matrix<T> lnc_out;
    AttentionCache<T> cross;
    Matrix<T> drop_cross;
    NormCache<T> ln2;
    Matrix<T> ln2_out;
    Matrix<T> ffn_pre;
    Matrix<T> ffn_act;
    Matrix<T> drop_ffn;
};

/// Everything the backward pass needs. `memory` must outlive the cache.
template <typename T>
struct StackCache {
    std::vector<TokenId> tokens;
    Matrix<T> drop_emb;
    std::vector<LayerCache<T>> layers;
    NormCache<T> lnf;
    const Matrix<T>* memory = nullptr;
};

/// Final hidden states (post final norm), n x d. Dropout is active only when
/// `dropout_rng` is non-null and cfg.dropout > 0.
template <typename T>
Matrix<T> stack_forward(const ParameterSet<T>& params, const StackRefs& refs, const TransformerConfig& cfg,
                        AttentionMode mode, std::span<const TokenId> tokens, const Matrix<T>* memory,
                        StackCache<T>* cache, Rng* dropout_rng);

/// Accumulates parameter gradients into `grads` and, when `d_memory` is
/// non-null, the gradient with respect to the cross-attention memory.
template <typename T>
void stack_backward(const ParameterSet<T>& params, const StackRefs& refs, const TransformerConfig& cfg,
                    StackCache<T>& cache, Matrix<T> d_hidden, ParameterSet<T>& grads, Matrix<T>* d_memory);

/// Tied output projection: hidden (n x d) -> logits (n x V).
template <typename T>
Matrix<T> output_logits(const ParameterSet<T>& params, const StackRefs& refs, const Matrix<T>& hidden);

template <typename T>
Matrix<T> output_logits_backward(const ParameterSet<T>& params, const StackRefs& refs, const Matrix<T>& hidden,
                                 const Matrix<T>& d_logits, ParameterSet<T>& grads);

/// Row-wise log-softmax in place.
template <typename T>
void log_softmax_rows(Matrix<T>& m);

/// Gather the given rows.
template <typename T>
Matrix<T> gather_rows(const Matrix<T>& m, std::span<const std::size_t> rows);

/// Token-by-token causal decoding with cached keys/values. Used for
/// generation; produces the same logits as a full forward pass.
template <typename T>
class IncrementalDecoder {
public:
    IncrementalDecoder(const ParameterSet<T>& params, const StackRefs& refs, const TransformerConfig& cfg,
                       const Matrix<T>* memory);

    /// Feeds one token at the next position and returns its logits (size V).
    std::vector<T> step(TokenId token);
    std::size_t position() const { return pos_; }

private:
    struct LayerState {
        Matrix<T> k, v;               // max_positions x d, first pos_ rows valid
        std::vector<Matrix<T>> ck, cv;  // cross keys/values per head (m x dh)
    };

    const ParameterSet<T>& params_;
    const StackRefs& refs_;
    TransformerConfig cfg_;
    const Matrix<T>* memory_;
    std::vector<LayerState> layers_;
    std::size_t pos_ = 0;
};

}  // namespace styleforge::model::detail
