// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/transformer.hpp"

#include "stack.hpp"
#include "styleforge/error.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::model {

namespace {

constexpr double kInitStd = 0.02;

std::string layer_prefix(const std::string& prefix, std::size_t l) {
    return prefix + "layers." + std::to_string(l) + ".";
}

template <typename T>
void add_attention(ParameterSet<T>& p, const std::string& prefix, std::size_t d) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
        p.add(prefix + w, {d, d});
        p.add(prefix + "b" + std::string(w + 1), {d});
    }
}

template <typename T>
AttentionRefs resolve_attention(const ParameterSet<T>& p, const std::string& prefix) {
    return {p.index(prefix + "wq"), p.index(prefix + "bq"), p.index(prefix + "wk"), p.index(prefix + "bk"),
            p.index(prefix + "wv"), p.index(prefix + "bv"), p.index(prefix + "wo"), p.index(prefix + "bo")};
}

// Norm gains -> 1, rank-2 tensors -> N(0, kInitStd), everything else -> 0.
template <typename T>
void init_entry(typename ParameterSet<T>::Entry& e, Rng& rng) {
    if (e.name.ends_with(".g")) {
        std::fill(e.values.begin(), e.values.end(), T(1));
    } else if (e.shape.size() == 2) {
        for (auto& v : e.values) v = static_cast<T>(rng.normal(0.0, kInitStd));
    } else {
        std::fill(e.values.begin(), e.values.end(), T(0));
    }
}

void check_same(const TransformerConfig& a, const TransformerConfig& b) {
    if (a.hidden_size != b.hidden_size || a.num_heads != b.num_heads || a.vocab_size != b.vocab_size ||
        a.max_positions != b.max_positions) {
        throw IncompatibleError("encoder and decoder sources differ in hidden size, heads, vocabulary or positions");
    }
}

}  // namespace

std::string_view to_string(AttentionMode mode) {
    return mode == AttentionMode::Causal ? "causal" : "bidirectional";
}

AttentionMode attention_mode_from_string(std::string_view s) {
    if (s == "causal") return AttentionMode::Causal;
    if (s == "bidirectional") return AttentionMode::Bidirectional;
    throw ConfigError("unknown attention mode '" + std::string(s) + "'");
}

void TransformerConfig::validate() const {
    if (num_layers == 0 || hidden_size == 0 || num_heads == 0 || max_positions == 0 || vocab_size == 0) {
        throw ConfigError("transformer counts must all be >= 1");
    }
    if (hidden_size % num_heads != 0) {
        throw ConfigError("hidden_size " + std::to_string(hidden_size) + " not divisible by num_heads " +
                          std::to_string(num_heads));
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

std::size_t lm_parameter_count(const TransformerConfig& c) {
    const std::size_t d = c.hidden_size, V = c.vocab_size;
    const std::size_t per_layer = 12 * d * d + 13 * d;
    return V * d + c.max_positions * d + c.num_layers * per_layer + 2 * d + V;
}

std::size_t cross_attention_parameter_count(const TransformerConfig& c) {
    const std::size_t d = c.hidden_size;
    return 4 * d * d + 6 * d;
}

template <typename T>
void add_stack_parameters(ParameterSet<T>& p, const std::string& prefix, const TransformerConfig& cfg,
                          bool with_cross) {
    const std::size_t d = cfg.hidden_size, f = cfg.ffn_size();
    p.add(prefix + "tok_emb", {cfg.vocab_size, d});
    p.add(prefix + "pos_emb", {cfg.max_positions, d});
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        const std::string lp = layer_prefix(prefix, l);
        p.add(lp + "ln1.g", {d});
        p.add(lp + "ln1.b", {d});
        add_attention(p, lp + "attn.", d);
        if (with_cross) {
            p.add(lp + "cross.ln.g", {d});
            p.add(lp + "cross.ln.b", {d});
            add_attention(p, lp + "cross.", d);
        }
        p.add(lp + "ln2.g", {d});
        p.add(lp + "ln2.b", {d});
        p.add(lp + "ffn.w1", {d, f});
        p.add(lp + "ffn.b1", {f});
        p.add(lp + "ffn.w2", {f, d});
        p.add(lp + "ffn.b2", {d});
    }
    p.add(prefix + "ln_f.g", {d});
    p.add(prefix + "ln_f.b", {d});
    p.add(prefix + "out_bias", {cfg.vocab_size});
}

template <typename T>
StackRefs resolve_stack(const ParameterSet<T>& p, const std::string& prefix, std::size_t num_layers,
                        bool with_cross) {
    StackRefs r{};
    r.tok_emb = p.index(prefix + "tok_emb");
    r.pos_emb = p.index(prefix + "pos_emb");
    for (std::size_t l = 0; l < num_layers; ++l) {
        const std::string lp = layer_prefix(prefix, l);
        LayerRefs lr{};
        lr.ln1_g = p.index(lp + "ln1.g");
        lr.ln1_b = p.index(lp + "ln1.b");
        lr.self = resolve_attention(p, lp + "attn.");
        lr.has_cross = with_cross;
        if (with_cross) {
            lr.lnc_g = p.index(lp + "cross.ln.g");
            lr.lnc_b = p.index(lp + "cross.ln.b");
            lr.cross = resolve_attention(p, lp + "cross.");
        }
        lr.ln2_g = p.index(lp + "ln2.g");
        lr.ln2_b = p.index(lp + "ln2.b");
        lr.w1 = p.index(lp + "ffn.w1");
        lr.b1 = p.index(lp + "ffn.b1");
        lr.w2 = p.index(lp + "ffn.w2");
        lr.b2 = p.index(lp + "ffn.b2");
        r.layers.push_back(lr);
    }
    r.lnf_g = p.index(prefix + "ln_f.g");
    r.lnf_b = p.index(prefix + "ln_f.b");
    r.out_bias = p.index(prefix + "out_bias");
    return r;
}

template <typename T>
LanguageModel<T>::LanguageModel(TransformerConfig cfg, AttentionMode mode, ParameterSet<T> params)
    : cfg_(cfg), mode_(mode), params_(std::move(params)) {
    cfg_.validate();
    refs_ = resolve_stack(params_, "", cfg_.num_layers, false);
    if (params_.scalar_count() != lm_parameter_count(cfg_)) {
        throw ConfigError("parameter tensors do not match the model config");
    }
}

template <typename T>
Matrix<T> LanguageModel<T>::log_probs(std::span<const TokenId> tokens) const {
    const Matrix<T> hidden = detail::stack_forward<T>(params_, refs_, cfg_, mode_, tokens, nullptr, nullptr, nullptr);
    Matrix<T> logits = detail::output_logits(params_, refs_, hidden);
    detail::log_softmax_rows(logits);
    return logits;
}

template <typename T>
LanguageModel<T> build_lm(const TransformerConfig& cfg, std::uint64_t seed, AttentionMode mode) {
    cfg.validate();
    ParameterSet<T> params;
    add_stack_parameters(params, "", cfg, false);
    Rng rng(seed);
    for (auto& e : params.entries()) init_entry<T>(e, rng);
    return LanguageModel<T>(cfg, mode, std::move(params));
}

template <typename T>
EncoderDecoder<T>::EncoderDecoder(TransformerConfig encoder_cfg, TransformerConfig decoder_cfg,
                                  ParameterSet<T> params)
    : enc_cfg_(encoder_cfg), dec_cfg_(decoder_cfg), params_(std::move(params)) {
    enc_cfg_.validate();
    dec_cfg_.validate();
    check_same(enc_cfg_, dec_cfg_);
    enc_refs_ = resolve_stack(params_, "encoder.", enc_cfg_.num_layers, false);
    dec_refs_ = resolve_stack(params_, "decoder.", dec_cfg_.num_layers, true);
}

template <typename T>
Matrix<T> EncoderDecoder<T>::encode(std::span<const TokenId> noisy) const {
    return detail::stack_forward<T>(params_, enc_refs_, enc_cfg_, AttentionMode::Bidirectional, noisy, nullptr,
                                    nullptr, nullptr);
}

template <typename T>
Matrix<T> EncoderDecoder<T>::log_probs(std::span<const TokenId> noisy, std::span<const TokenId> target) const {
    const Matrix<T> memory = encode(noisy);
    const Matrix<T> hidden = detail::stack_forward<T>(params_, dec_refs_, dec_cfg_, AttentionMode::Causal, target,
                                                      &memory, nullptr, nullptr);
    Matrix<T> logits = detail::output_logits(params_, dec_refs_, hidden);
    detail::log_softmax_rows(logits);
    return logits;
}

template <typename T>
EncoderDecoder<T> build_encoder_decoder(const LanguageModel<T>& encoder_src, const LanguageModel<T>& decoder_src,
                                        std::uint64_t seed) {
    check_same(encoder_src.config(), decoder_src.config());
    ParameterSet<T> params;
    add_stack_parameters(params, "encoder.", encoder_src.config(), false);
    add_stack_parameters(params, "decoder.", decoder_src.config(), true);
    Rng rng(seed);
    for (auto& e : params.entries()) {
        if (e.name.starts_with("encoder.")) {
            e.values = encoder_src.parameters()[e.name.substr(8)].values;
        } else if (e.name.find(".cross.") != std::string::npos) {
            init_entry<T>(e, rng);
        } else {
            e.values = decoder_src.parameters()[e.name.substr(8)].values;
        }
    }
    return EncoderDecoder<T>(encoder_src.config(), decoder_src.config(), std::move(params));
}

#define STYLEFORGE_INSTANTIATE(T)                                                                              \
    template void add_stack_parameters<T>(ParameterSet<T>&, const std::string&, const TransformerConfig&, bool); \
    template StackRefs resolve_stack<T>(const ParameterSet<T>&, const std::string&, std::size_t, bool);        \
    template class LanguageModel<T>;                                                                           \
    template LanguageModel<T> build_lm<T>(const TransformerConfig&, std::uint64_t, AttentionMode);            \
    template class EncoderDecoder<T>;                                                                          \
    template EncoderDecoder<T> build_encoder_decoder<T>(const LanguageModel<T>&, const LanguageModel<T>&,      \
                                                        std::uint64_t);

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::model
