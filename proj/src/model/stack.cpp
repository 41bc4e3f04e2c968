// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "stack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "styleforge/error.hpp"
#include "styleforge/kernels/kernels.hpp"

namespace styleforge::model::detail {

namespace {

constexpr double kNormEps = 1e-5;

template <typename T>
const kernels::KernelTable<T>& K() {
    return kernels::active<T>();
}

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const T* g, const T* b, NormCache<T>* cache) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix<T> out(n, d);
    if (cache) {
        cache->xhat = Matrix<T>(n, d);
        cache->rstd.assign(n, T(0));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const T* xi = x.row(i);
        T mean = 0;
        for (std::size_t j = 0; j < d; ++j) mean += xi[j];
        mean /= static_cast<T>(d);
        T var = 0;
        for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
        var /= static_cast<T>(d);
        const T rstd = T(1) / std::sqrt(var + static_cast<T>(kNormEps));
        T* oi = out.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const T xh = (xi[j] - mean) * rstd;
            oi[j] = g[j] * xh + b[j];
            if (cache) cache->xhat(i, j) = xh;
        }
        if (cache) cache->rstd[i] = rstd;
    }
    return out;
}

// dx += dLN/dx * dy
template <typename T>
void layer_norm_backward(const NormCache<T>& c, const T* g, const Matrix<T>& dy, T* dg, T* db, Matrix<T>& dx) {
    const std::size_t n = dy.rows, d = dy.cols;
    std::vector<T> dxhat(d);
    for (std::size_t i = 0; i < n; ++i) {
        const T* dyi = dy.row(i);
        const T* xh = c.xhat.row(i);
        T m1 = 0, m2 = 0;
        for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = dyi[j] * g[j];
            dg[j] += dyi[j] * xh[j];
            db[j] += dyi[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xh[j];
        }
        m1 /= static_cast<T>(d);
        m2 /= static_cast<T>(d);
        T* dxi = dx.row(i);
        for (std::size_t j = 0; j < d; ++j) dxi[j] += c.rstd[i] * (dxhat[j] - m1 - xh[j] * m2);
    }
}

template <typename T>
Matrix<T> linear(const Matrix<T>& x, const T* w, const T* b, std::size_t out) {
    Matrix<T> y(x.rows, out);
    for (std::size_t i = 0; i < x.rows; ++i) std::copy(b, b + out, y.row(i));
    K<T>().gemm_nn(x.data.data(), w, y.data.data(), x.rows, x.cols, out);
    return y;
}

template <typename T>
void linear_backward(const Matrix<T>& x, const T* w, const Matrix<T>& dy, T* dw, T* db, Matrix<T>* dx) {
    const std::size_t n = x.rows, in = x.cols, out = dy.cols;
    K<T>().gemm_tn(x.data.data(), dy.data.data(), dw, n, in, out);
    for (std::size_t i = 0; i < n; ++i) K<T>().axpy(db, T(1), dy.row(i), out);
    if (dx) K<T>().gemm_nt(dy.data.data(), w, dx->data.data(), n, out, in);
}

template <typename T>
void dropout_forward(Matrix<T>& x, double p, Rng* rng, Matrix<T>& mask) {
    if (rng == nullptr || p <= 0.0) {
        mask = Matrix<T>();
        return;
    }
    mask = Matrix<T>(x.rows, x.cols);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        mask.data[i] = rng->uniform() >= p ? scale : T(0);
        x.data[i] *= mask.data[i];
    }
}

template <typename T>
void dropout_backward(Matrix<T>& d, const Matrix<T>& mask) {
    if (mask.data.empty()) return;
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] *= mask.data[i];
}

template <typename T>
void add_into(Matrix<T>& dst, const Matrix<T>& src) {
    K<T>().axpy(dst.data.data(), T(1), src.data.data(), dst.data.size());
}

template <typename T>
T gelu(T u) {
    return T(0.5) * u * (T(1) + std::erf(u / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_grad(T u) {
    const T cdf = T(0.5) * (T(1) + std::erf(u / std::numbers::sqrt2_v<T>));
    const T pdf = std::exp(T(-0.5) * u * u) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    return cdf + u * pdf;
}

template <typename T>
void softmax_inplace(T* row, std::size_t n) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, row[j]);
    T sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
}

template <typename T>
Matrix<T> head_slice(const Matrix<T>& m, std::size_t head, std::size_t dh) {
    Matrix<T> out(m.rows, dh);
    for (std::size_t i = 0; i < m.rows; ++i) std::copy_n(m.row(i) + head * dh, dh, out.row(i));
    return out;
}

template <typename T>
void head_scatter_add(Matrix<T>& m, const Matrix<T>& part, std::size_t head, std::size_t dh) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        T* dst = m.row(i) + head * dh;
        const T* src = part.row(i);
        for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
    }
}

template <typename T>
Matrix<T> attention(const ParameterSet<T>& P, const AttentionRefs& a, const TransformerConfig& cfg,
                    const Matrix<T>& xq, const Matrix<T>& xkv, bool causal, AttentionCache<T>& c) {
    const std::size_t n = xq.rows, m = xkv.rows, d = cfg.hidden_size, H = cfg.num_heads, dh = cfg.head_dim();
    const Matrix<T> Q = linear(xq, P.data(a.wq), P.data(a.bq), d);
    const Matrix<T> Kf = linear(xkv, P.data(a.wk), P.data(a.bk), d);
    const Matrix<T> Vf = linear(xkv, P.data(a.wv), P.data(a.bv), d);
    c.xq = &xq;
    c.xkv = &xkv;
    c.causal = causal;
    c.q.resize(H);
    c.k.resize(H);
    c.v.resize(H);
    c.p.resize(H);
    c.concat = Matrix<T>(n, d);
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    for (std::size_t h = 0; h < H; ++h) {
        c.q[h] = head_slice(Q, h, dh);
        c.k[h] = head_slice(Kf, h, dh);
        c.v[h] = head_slice(Vf, h, dh);
        Matrix<T> S(n, m);
        K<T>().gemm_nt(c.q[h].data.data(), c.k[h].data.data(), S.data.data(), n, dh, m);
        for (std::size_t i = 0; i < n; ++i) {
            T* si = S.row(i);
            for (std::size_t j = 0; j < m; ++j) {
                si[j] = (causal && j > i) ? -std::numeric_limits<T>::infinity() : si[j] * scale;
            }
            softmax_inplace(si, m);
        }
        Matrix<T> out(n, dh);
        K<T>().gemm_nn(S.data.data(), c.v[h].data.data(), out.data.data(), n, m, dh);
        head_scatter_add(c.concat, out, h, dh);
        c.p[h] = std::move(S);
    }
    return linear(c.concat, P.data(a.wo), P.data(a.bo), d);
}

template <typename T>
void attention_backward(const ParameterSet<T>& P, const AttentionRefs& a, const TransformerConfig& cfg,
                        const AttentionCache<T>& c, const Matrix<T>& d_out, ParameterSet<T>& G, Matrix<T>& d_xq,
                        Matrix<T>& d_xkv) {
    const std::size_t n = c.xq->rows, m = c.xkv->rows, d = cfg.hidden_size, H = cfg.num_heads, dh = cfg.head_dim();
    Matrix<T> d_concat(n, d);
    linear_backward(c.concat, P.data(a.wo), d_out, G.data(a.wo), G.data(a.bo), &d_concat);
    Matrix<T> dQ(n, d), dK(m, d), dV(m, d);
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    for (std::size_t h = 0; h < H; ++h) {
        const Matrix<T> dout = head_slice(d_concat, h, dh);
        Matrix<T> dP(n, m);
        K<T>().gemm_nt(dout.data.data(), c.v[h].data.data(), dP.data.data(), n, dh, m);
        Matrix<T> dv(m, dh);
        K<T>().gemm_tn(c.p[h].data.data(), dout.data.data(), dv.data.data(), n, m, dh);
        const Matrix<T>& p = c.p[h];
        for (std::size_t i = 0; i < n; ++i) {
            T* dpi = dP.row(i);
            const T* pi = p.row(i);
            const T r = K<T>().dot(dpi, pi, m);
            for (std::size_t j = 0; j < m; ++j) dpi[j] = pi[j] * (dpi[j] - r) * scale;
        }
        Matrix<T> dq(n, dh), dk(m, dh);
        K<T>().gemm_nn(dP.data.data(), c.k[h].data.data(), dq.data.data(), n, m, dh);
        K<T>().gemm_tn(dP.data.data(), c.q[h].data.data(), dk.data.data(), n, m, dh);
        head_scatter_add(dQ, dq, h, dh);
        head_scatter_add(dK, dk, h, dh);
        head_scatter_add(dV, dv, h, dh);
    }
    linear_backward(*c.xq, P.data(a.wq), dQ, G.data(a.wq), G.data(a.bq), &d_xq);
    linear_backward(*c.xkv, P.data(a.wk), dK, G.data(a.wk), G.data(a.bk), &d_xkv);
    linear_backward(*c.xkv, P.data(a.wv), dV, G.data(a.wv), G.data(a.bv), &d_xkv);
}

template <typename T>
Matrix<T> feed_forward(const ParameterSet<T>& P, const LayerRefs& lr, const TransformerConfig& cfg,
                       const Matrix<T>& x, Matrix<T>* pre_out, Matrix<T>* act_out) {
    Matrix<T> pre = linear(x, P.data(lr.w1), P.data(lr.b1), cfg.ffn_size());
    Matrix<T> act(pre.rows, pre.cols);
    for (std::size_t i = 0; i < pre.data.size(); ++i) act.data[i] = gelu(pre.data[i]);
    Matrix<T> out = linear(act, P.data(lr.w2), P.data(lr.b2), cfg.hidden_size);
    if (pre_out) *pre_out = std::move(pre);
    if (act_out) *act_out = std::move(act);
    return out;
}

}  // namespace

template <typename T>
Matrix<T> stack_forward(const ParameterSet<T>& P, const StackRefs& R, const TransformerConfig& cfg,
                        AttentionMode mode, std::span<const TokenId> tokens, const Matrix<T>* memory,
                        StackCache<T>* cache, Rng* dropout_rng) {
    const std::size_t n = tokens.size(), d = cfg.hidden_size;
    if (n == 0) throw DegenerateInputError("empty token sequence");
    if (n > cfg.max_positions) {
        throw LengthError("sequence of length " + std::to_string(n) + " exceeds max_positions " +
                          std::to_string(cfg.max_positions));
    }
    StackCache<T> local;
    StackCache<T>& c = cache ? *cache : local;
    c.tokens.assign(tokens.begin(), tokens.end());
    c.memory = memory;
    c.layers.clear();
    c.layers.resize(R.layers.size());

    Matrix<T> x(n, d);
    const T* tok_emb = P.data(R.tok_emb);
    const T* pos_emb = P.data(R.pos_emb);
    for (std::size_t i = 0; i < n; ++i) {
        const TokenId t = tokens[i];
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
            throw InvalidTokenError("token id " + std::to_string(t) + " outside vocabulary");
        }
        T* xi = x.row(i);
        const T* e = tok_emb + static_cast<std::size_t>(t) * d;
        const T* p = pos_emb + i * d;
        for (std::size_t j = 0; j < d; ++j) xi[j] = e[j] + p[j];
    }
    dropout_forward(x, cfg.dropout, dropout_rng, c.drop_emb);

    const bool causal = mode == AttentionMode::Causal;
    for (std::size_t l = 0; l < R.layers.size(); ++l) {
        const LayerRefs& lr = R.layers[l];
        LayerCache<T>& lc = c.layers[l];

        lc.ln1_out = layer_norm(x, P.data(lr.ln1_g), P.data(lr.ln1_b), &lc.ln1);
        Matrix<T> a = attention(P, lr.self, cfg, lc.ln1_out, lc.ln1_out, causal, lc.self);
        dropout_forward(a, cfg.dropout, dropout_rng, lc.drop_self);
        add_into(x, a);

        if (lr.has_cross) {
            if (memory == nullptr) throw ConfigError("decoder layer needs encoder memory");
            lc.lnc_out = layer_norm(x, P.data(lr.lnc_g), P.data(lr.lnc_b), &lc.lnc);
            Matrix<T> ca = attention(P, lr.cross, cfg, lc.lnc_out, *memory, false, lc.cross);
            dropout_forward(ca, cfg.dropout, dropout_rng, lc.drop_cross);
            add_into(x, ca);
        }

        lc.ln2_out = layer_norm(x, P.data(lr.ln2_g), P.data(lr.ln2_b), &lc.ln2);
        Matrix<T> f = feed_forward(P, lr, cfg, lc.ln2_out, &lc.ffn_pre, &lc.ffn_act);
        dropout_forward(f, cfg.dropout, dropout_rng, lc.drop_ffn);
        add_into(x, f);
    }
    return layer_norm(x, P.data(R.lnf_g), P.data(R.lnf_b), &c.lnf);
}

template <typename T>
void stack_backward(const ParameterSet<T>& P, const StackRefs& R, const TransformerConfig& cfg,
                    StackCache<T>& c, Matrix<T> d_hidden, ParameterSet<T>& G, Matrix<T>* d_memory) {
    const std::size_t n = c.tokens.size(), d = cfg.hidden_size;
    Matrix<T> dx(n, d);
    layer_norm_backward(c.lnf, P.data(R.lnf_g), d_hidden, G.data(R.lnf_g), G.data(R.lnf_b), dx);

    for (std::size_t l = R.layers.size(); l-- > 0;) {
        const LayerRefs& lr = R.layers[l];
        LayerCache<T>& lc = c.layers[l];

        {
            Matrix<T> df = dx;
            dropout_backward(df, lc.drop_ffn);
            Matrix<T> d_act(n, cfg.ffn_size());
            linear_backward(lc.ffn_act, P.data(lr.w2), df, G.data(lr.w2), G.data(lr.b2), &d_act);
            for (std::size_t i = 0; i < d_act.data.size(); ++i) d_act.data[i] *= gelu_grad(lc.ffn_pre.data[i]);
            Matrix<T> d_ln(n, d);
            linear_backward(lc.ln2_out, P.data(lr.w1), d_act, G.data(lr.w1), G.data(lr.b1), &d_ln);
            layer_norm_backward(lc.ln2, P.data(lr.ln2_g), d_ln, G.data(lr.ln2_g), G.data(lr.ln2_b), dx);
        }

        if (lr.has_cross) {
            Matrix<T> dc = dx;
            dropout_backward(dc, lc.drop_cross);
            Matrix<T> d_ln(n, d);
            Matrix<T> scratch;
            Matrix<T>* dm = d_memory;
            if (dm == nullptr) {
                scratch = Matrix<T>(c.memory->rows, c.memory->cols);
                dm = &scratch;
            }
            attention_backward(P, lr.cross, cfg, lc.cross, dc, G, d_ln, *dm);
            layer_norm_backward(lc.lnc, P.data(lr.lnc_g), d_ln, G.data(lr.lnc_g), G.data(lr.lnc_b), dx);
        }

        {
            Matrix<T> da = dx;
            dropout_backward(da, lc.drop_self);
            Matrix<T> d_ln(n, d);
            attention_backward(P, lr.self, cfg, lc.self, da, G, d_ln, d_ln);
            layer_norm_backward(lc.ln1, P.data(lr.ln1_g), d_ln, G.data(lr.ln1_g), G.data(lr.ln1_b), dx);
        }
    }

    dropout_backward(dx, c.drop_emb);
    T* g_tok = G.data(R.tok_emb);
    T* g_pos = G.data(R.pos_emb);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(c.tokens[i]);
        K<T>().axpy(g_tok + t * d, T(1), dx.row(i), d);
        K<T>().axpy(g_pos + i * d, T(1), dx.row(i), d);
    }
}

template <typename T>
Matrix<T> output_logits(const ParameterSet<T>& P, const StackRefs& R, const Matrix<T>& hidden) {
    const auto& emb = P.at(R.tok_emb);
    const std::size_t V = emb.shape[0], d = emb.shape[1];
    Matrix<T> logits(hidden.rows, V);
    const T* bias = P.data(R.out_bias);
    for (std::size_t i = 0; i < hidden.rows; ++i) std::copy_n(bias, V, logits.row(i));
    K<T>().gemm_nt(hidden.data.data(), emb.values.data(), logits.data.data(), hidden.rows, d, V);
    return logits;
}

template <typename T>
Matrix<T> output_logits_backward(const ParameterSet<T>& P, const StackRefs& R, const Matrix<T>& hidden,
                                 const Matrix<T>& d_logits, ParameterSet<T>& G) {
    const auto& emb = P.at(R.tok_emb);
    const std::size_t V = emb.shape[0], d = emb.shape[1], n = hidden.rows;
    K<T>().gemm_tn(d_logits.data.data(), hidden.data.data(), G.data(R.tok_emb), n, V, d);
    T* gb = G.data(R.out_bias);
    for (std::size_t i = 0; i < n; ++i) K<T>().axpy(gb, T(1), d_logits.row(i), V);
    Matrix<T> d_hidden(n, d);
    K<T>().gemm_nn(d_logits.data.data(), emb.values.data(), d_hidden.data.data(), n, V, d);
    return d_hidden;
}

template <typename T>
void log_softmax_rows(Matrix<T>& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        T* r = m.row(i);
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < m.cols; ++j) mx = std::max(mx, r[j]);
        T sum = 0;
        for (std::size_t j = 0; j < m.cols; ++j) sum += std::exp(r[j] - mx);
        const T lse = mx + std::log(sum);
        for (std::size_t j = 0; j < m.cols; ++j) r[j] -= lse;
    }
}

template <typename T>
Matrix<T> gather_rows(const Matrix<T>& m, std::span<const std::size_t> rows) {
    Matrix<T> out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(m.row(rows[i]), m.cols, out.row(i));
    return out;
}

template <typename T>
IncrementalDecoder<T>::IncrementalDecoder(const ParameterSet<T>& params, const StackRefs& refs,
                                          const TransformerConfig& cfg, const Matrix<T>* memory)
    : params_(params), refs_(refs), cfg_(cfg), memory_(memory) {
    const std::size_t d = cfg.hidden_size, H = cfg.num_heads, dh = cfg.head_dim();
    layers_.resize(refs.layers.size());
    for (std::size_t l = 0; l < refs.layers.size(); ++l) {
        LayerState& ls = layers_[l];
        ls.k = Matrix<T>(cfg.max_positions, d);
        ls.v = Matrix<T>(cfg.max_positions, d);
        const LayerRefs& lr = refs.layers[l];
        if (lr.has_cross) {
            if (memory == nullptr) throw ConfigError("decoder layer needs encoder memory");
            const Matrix<T> ck = linear(*memory, params.data(lr.cross.wk), params.data(lr.cross.bk), d);
            const Matrix<T> cv = linear(*memory, params.data(lr.cross.wv), params.data(lr.cross.bv), d);
            for (std::size_t h = 0; h < H; ++h) {
                ls.ck.push_back(head_slice(ck, h, dh));
                ls.cv.push_back(head_slice(cv, h, dh));
            }
        }
    }
}

template <typename T>
std::vector<T> IncrementalDecoder<T>::step(TokenId token) {
    const std::size_t d = cfg_.hidden_size, H = cfg_.num_heads, dh = cfg_.head_dim();
    if (pos_ >= cfg_.max_positions) throw LengthError("incremental decoding past max_positions");
    if (token < 0 || static_cast<std::size_t>(token) >= cfg_.vocab_size) {
        throw InvalidTokenError("token id " + std::to_string(token) + " outside vocabulary");
    }
    const auto& P = params_;
    Matrix<T> x(1, d);
    {
        const T* e = P.data(refs_.tok_emb) + static_cast<std::size_t>(token) * d;
        const T* p = P.data(refs_.pos_emb) + pos_ * d;
        for (std::size_t j = 0; j < d; ++j) x.data[j] = e[j] + p[j];
    }
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<T> scores;
    for (std::size_t l = 0; l < refs_.layers.size(); ++l) {
        const LayerRefs& lr = refs_.layers[l];
        LayerState& ls = layers_[l];

        const Matrix<T> h = layer_norm<T>(x, P.data(lr.ln1_g), P.data(lr.ln1_b), nullptr);
        const Matrix<T> q = linear(h, P.data(lr.self.wq), P.data(lr.self.bq), d);
        const Matrix<T> k = linear(h, P.data(lr.self.wk), P.data(lr.self.bk), d);
        const Matrix<T> v = linear(h, P.data(lr.self.wv), P.data(lr.self.bv), d);
        std::copy_n(k.data.data(), d, ls.k.row(pos_));
        std::copy_n(v.data.data(), d, ls.v.row(pos_));
        Matrix<T> concat(1, d);
        const std::size_t len = pos_ + 1;
        scores.resize(len);
        for (std::size_t hh = 0; hh < H; ++hh) {
            for (std::size_t j = 0; j < len; ++j) {
                scores[j] = K<T>().dot(q.data.data() + hh * dh, ls.k.row(j) + hh * dh, dh) * scale;
            }
            softmax_inplace(scores.data(), len);
            for (std::size_t j = 0; j < len; ++j) {
                K<T>().axpy(concat.data.data() + hh * dh, scores[j], ls.v.row(j) + hh * dh, dh);
            }
        }
        add_into(x, linear(concat, P.data(lr.self.wo), P.data(lr.self.bo), d));

        if (lr.has_cross) {
            const Matrix<T> hc = layer_norm<T>(x, P.data(lr.lnc_g), P.data(lr.lnc_b), nullptr);
            const Matrix<T> cq = linear(hc, P.data(lr.cross.wq), P.data(lr.cross.bq), d);
            Matrix<T> cconcat(1, d);
            const std::size_t m = memory_->rows;
            scores.resize(m);
            for (std::size_t hh = 0; hh < H; ++hh) {
                for (std::size_t j = 0; j < m; ++j) {
                    scores[j] = K<T>().dot(cq.data.data() + hh * dh, ls.ck[hh].row(j), dh) * scale;
                }
                softmax_inplace(scores.data(), m);
                for (std::size_t j = 0; j < m; ++j) {
                    K<T>().axpy(cconcat.data.data() + hh * dh, scores[j], ls.cv[hh].row(j), dh);
                }
            }
            add_into(x, linear(cconcat, P.data(lr.cross.wo), P.data(lr.cross.bo), d));
        }

        const Matrix<T> h2 = layer_norm<T>(x, P.data(lr.ln2_g), P.data(lr.ln2_b), nullptr);
        add_into(x, feed_forward<T>(P, lr, cfg_, h2, nullptr, nullptr));
    }
    const Matrix<T> hf = layer_norm<T>(x, P.data(refs_.lnf_g), P.data(refs_.lnf_b), nullptr);
    ++pos_;
    return std::move(output_logits(P, refs_, hf).data);
}

#define STYLEFORGE_INSTANTIATE(T)                                                                             \
    template Matrix<T> stack_forward<T>(const ParameterSet<T>&, const StackRefs&, const TransformerConfig&,   \
                                        AttentionMode, std::span<const TokenId>, const Matrix<T>*,            \
                                        StackCache<T>*, Rng*);                                                \
    template void stack_backward<T>(const ParameterSet<T>&, const StackRefs&, const TransformerConfig&,       \
                                    StackCache<T>&, Matrix<T>, ParameterSet<T>&, Matrix<T>*);                 \
    template Matrix<T> output_logits<T>(const ParameterSet<T>&, const StackRefs&, const Matrix<T>&);         \
    template Matrix<T> output_logits_backward<T>(const ParameterSet<T>&, const StackRefs&, const Matrix<T>&, \
                                                 const Matrix<T>&, ParameterSet<T>&);                         \
    template void log_softmax_rows<T>(Matrix<T>&);                                                            \
    template Matrix<T> gather_rows<T>(const Matrix<T>&, std::span<const std::size_t>);                        \
    template class IncrementalDecoder<T>;

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::model::detail
