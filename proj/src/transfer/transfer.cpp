// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/transfer/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"
#include "styleforge/model/losses.hpp"
#include "styleforge/model/training.hpp"

namespace styleforge::transfer {

namespace {

bool is_empty_sample(std::span<const TokenId> s) {
    return std::none_of(s.begin(), s.end(), [](TokenId t) { return !tokenizer::is_special(t); });
}

std::size_t scored_tokens(std::span<const TokenId> tokens) {
    return (!tokens.empty() && tokens.front() == tokenizer::kBos) ? tokens.size() - 1 : tokens.size();
}

}  // namespace

void TransferConfig::validate(std::size_t num_discriminators) const {
    if (lambdas.size() != num_discriminators) {
        throw ConfigError("got " + std::to_string(lambdas.size()) + " style weights for " +
                          std::to_string(num_discriminators) + " discriminators");
    }
    bool any = lambda_dae > 0.0;
    if (lambda_dae < 0.0) throw ConfigError("lambda_dae must be >= 0");
    for (double l : lambdas) {
        if (l < 0.0 || !std::isfinite(l)) throw ConfigError("style weights must be >= 0");
        any = any || l > 0.0;
    }
    if (!any) throw ConfigError("at least one loss weight must be positive");
    if (!(sample_temperature > 0.0)) throw ConfigError("sample_temperature must be > 0");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (warmup_steps > 0 && !(lambda_dae > 0.0)) throw ConfigError("warmup needs lambda_dae > 0");
    noise.validate();
    inference_noise.validate();
}

model::GenerationOptions TransferConfig::policy() const {
    model::GenerationOptions g;
    g.mode = model::DecodeMode::Sample;
    g.temperature = sample_temperature;
    g.max_len = max_len;
    g.allow_eos = allow_eos;
    g.support = support;
    return g;
}

double reward(const StyleDiscriminator& disc, std::span<const TokenId> tokens, bool length_normalize) {
    const double r = discriminator::style_reward(disc, tokens);
    return length_normalize ? r / static_cast<double>(scored_tokens(tokens)) : r;
}

double TraceRow::weighted_sum() const {
    double t = lambda_dae * dae;
    for (std::size_t i = 0; i < style_losses.size(); ++i) t += lambdas[i] * style_losses[i];
    return t;
}

template <typename T>
StyleLoss reinforce_style_loss_for_sample(const EncoderDecoder<T>& encdec, const StyleDiscriminator& disc,
                                          std::span<const TokenId> x, std::span<const TokenId> x_noisy,
                                          std::span<const TokenId> sample, const TransferConfig& cfg,
                                          GradTarget<T> grad) {
    StyleLoss out;
    out.sample.assign(sample.begin(), sample.end());
    out.reward.style = disc.label();
    out.reward.r_input = reward(disc, x, cfg.reward_length_normalize);
    out.reward.r_sample = reward(disc, sample, cfg.reward_length_normalize);
    out.reward.advantage = out.reward.r_sample - out.reward.r_input;
    const double adv = out.reward.advantage;
    model::PassOptions<T> pass;
    if (grad.grads != nullptr && adv != 0.0) pass = {grad.grads, nullptr, grad.scale * adv};
    const double nll = model::policy_nll<T>(encdec, x_noisy, sample, cfg.policy(), pass);
    out.loss = adv * nll;
    return out;
}

template <typename T>
TokenSequence draw_sample(const EncoderDecoder<T>& encdec, std::span<const TokenId> x_noisy,
                          const TransferConfig& cfg, Rng& rng) {
    const auto policy = cfg.policy();
    for (int attempt = 0; attempt < 2; ++attempt) {
        TokenSequence s = model::generate(encdec, x_noisy, policy, rng);
        if (!is_empty_sample(s)) return s;
    }
    throw DegenerateInputError("generator produced an empty sample twice");
}

template <typename T>
StyleLoss reinforce_style_loss(const EncoderDecoder<T>& encdec, const StyleDiscriminator& disc,
                               std::span<const TokenId> x, std::span<const TokenId> x_noisy,
                               const TransferConfig& cfg, Rng& rng, GradTarget<T> grad) {
    const TokenSequence sample = draw_sample(encdec, x_noisy, cfg, rng);
    return reinforce_style_loss_for_sample(encdec, disc, x, x_noisy, sample, cfg, grad);
}

template <typename T>
TraceRow total_loss(const EncoderDecoder<T>& encdec, std::span<const StyleDiscriminator> discs,
                    std::span<const TokenSequence> x, std::span<const TokenSequence> x_noisy,
                    const TransferConfig& cfg, Rng& rng, GradTarget<T> grad, Rng* dropout_rng,
                    const BaselineFn& baseline) {
    cfg.validate(discs.size());
    if (x.empty() || x.size() != x_noisy.size()) throw ConfigError("batch inputs and noisy inputs must align");
    const std::size_t B = x.size(), k = discs.size();
    const double inv_b = 1.0 / static_cast<double>(B);

    TraceRow row;
    row.lambda_dae = cfg.lambda_dae;
    row.lambdas = cfg.lambdas;
    row.style_losses.assign(k, 0.0);
    row.mean_advantage.assign(k, 0.0);
    row.mean_r_input.assign(k, 0.0);
    row.mean_r_sample.assign(k, 0.0);
    for (const auto& d : discs) row.styles.push_back(d.label());
    const bool any_style = std::any_of(cfg.lambdas.begin(), cfg.lambdas.end(), [](double l) { return l > 0.0; });

    for (std::size_t i = 0; i < B; ++i) {
        model::PassOptions<T> dae_pass;
        if (grad.grads != nullptr && cfg.lambda_dae > 0.0) {
            dae_pass = {grad.grads, dropout_rng, grad.scale * cfg.lambda_dae * inv_b};
        }
        row.dae += model::dae_loss<T>(encdec, x_noisy[i], x[i], dae_pass) * inv_b;

        if (!any_style) continue;
        TokenSequence sample;
        try {
            sample = draw_sample(encdec, x_noisy[i], cfg, rng);
        } catch (const DegenerateInputError&) {
            ++row.degenerate_samples;
            continue;
        }
        std::vector<double> adv(k, 0.0);
        double weighted_adv = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (cfg.lambdas[j] == 0.0) continue;
            const double r_in = baseline ? baseline(j, i) : reward(discs[j], x[i], cfg.reward_length_normalize);
            const double r_s = reward(discs[j], sample, cfg.reward_length_normalize);
            adv[j] = r_s - r_in;
            weighted_adv += cfg.lambdas[j] * adv[j];
            row.mean_r_input[j] += r_in * inv_b;
            row.mean_r_sample[j] += r_s * inv_b;
            row.mean_advantage[j] += adv[j] * inv_b;
        }
        model::PassOptions<T> pg_pass;
        if (grad.grads != nullptr && weighted_adv != 0.0) pg_pass = {grad.grads, nullptr, grad.scale * weighted_adv * inv_b};
        const double nll = model::policy_nll<T>(encdec, x_noisy[i], sample, cfg.policy(), pg_pass);
        for (std::size_t j = 0; j < k; ++j) row.style_losses[j] += adv[j] * nll * inv_b;
        if (row.samples.size() < cfg.trace_samples) {
            row.inputs.push_back(x[i]);
            row.samples.push_back(sample);
        }
    }
    row.total = row.weighted_sum();
    return row;
}

TrainingTrace train_transfer(EncoderDecoder<float>& encdec, std::span<const StyleDiscriminator> discs,
                             std::span<const TokenSequence> mixture, const TransferConfig& cfg,
                             const TrainHooks& hooks, model::Adam<float>* optimizer, std::size_t start_step) {
    cfg.validate(discs.size());
    if (mixture.empty()) throw ConfigError("transfer training needs a non-empty mixture");
    model::Adam<float> local(cfg.adam, encdec.parameters());
    model::Adam<float>& adam = optimizer ? *optimizer : local;
    model::BatchSchedule schedule(mixture.size(), cfg.batch_size, cfg.seed);
    model::DivergenceGuard guard;

    // r(x) never changes because discriminators are frozen.
    const double unset = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> cache(discs.size(), std::vector<double>(mixture.size(), unset));

    TransferConfig warm = cfg;
    std::fill(warm.lambdas.begin(), warm.lambdas.end(), 0.0);

    TrainingTrace trace;
    auto grads = encdec.parameters().zeros_like();
    for (std::size_t step = start_step; step < cfg.steps; ++step) {
        const TransferConfig& step_cfg = step < cfg.warmup_steps ? warm : cfg;
        const auto idx = schedule.batch(step);
        Rng noise_rng = model::step_rng(cfg.seed, step, 4);
        Rng sample_rng = model::step_rng(cfg.seed, step, 5);
        Rng dropout_rng = model::step_rng(cfg.seed, step, 6);
        std::vector<TokenSequence> xs, noisy;
        for (std::size_t i : idx) {
            xs.push_back(mixture[i]);
            noisy.push_back(corpus::apply_dae_noise(mixture[i], cfg.noise, noise_rng));
        }
        BaselineFn baseline = [&](std::size_t d, std::size_t item) {
            double& slot = cache[d][idx[item]];
            if (std::isnan(slot)) slot = reward(discs[d], mixture[idx[item]], cfg.reward_length_normalize);
            return slot;
        };
        grads.zero();
        TraceRow row = total_loss<float>(encdec, discs, xs, noisy, step_cfg, sample_rng, {&grads, 1.0},
                                         &dropout_rng, baseline);
        guard.observe(row.total);
        row.grad_norm = adam.step(encdec.parameters(), grads);
        row.step = step + 1;
        if (hooks.on_step) hooks.on_step(row);
        trace.rows.push_back(std::move(row));
        const bool last = step + 1 == cfg.steps;
        if (hooks.on_checkpoint && (last || (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0))) {
            hooks.on_checkpoint(step + 1, encdec, adam.state());
        }
    }
    return trace;
}

TokenSequence transfer_tokens(const EncoderDecoder<float>& encdec, std::span<const TokenId> framed,
                              const TransferConfig& cfg, std::uint64_t noise_seed) {
    if (is_empty_sample(framed)) throw DegenerateInputError("nothing to transfer");
    Rng noise_rng(noise_seed);
    const TokenSequence noisy = corpus::apply_dae_noise(framed, cfg.inference_noise, noise_rng);
    model::GenerationOptions greedy;
    greedy.mode = model::DecodeMode::Greedy;
    greedy.max_len = cfg.max_len;
    greedy.support = cfg.support;
    greedy.allow_eos = true;
    Rng unused(0);
    return model::generate(encdec, noisy, greedy, unused);
}

std::string transfer(const EncoderDecoder<float>& encdec, const std::string& sentence,
                     const tokenizer::Tokenizer& tok, const TransferConfig& cfg) {
    const TokenSequence framed = tok.encode_framed(sentence);
    const TokenSequence out = transfer_tokens(encdec, framed, cfg, cfg.seed ^ fnv1a(sentence));
    return tok.decode(out);
}

#define STYLEFORGE_INSTANTIATE(T)                                                                                \
    template StyleLoss reinforce_style_loss_for_sample<T>(                                                      \
        const EncoderDecoder<T>&, const StyleDiscriminator&, std::span<const TokenId>, std::span<const TokenId>, \
        std::span<const TokenId>, const TransferConfig&, GradTarget<T>);                                         \
    template StyleLoss reinforce_style_loss<T>(const EncoderDecoder<T>&, const StyleDiscriminator&,             \
                                               std::span<const TokenId>, std::span<const TokenId>,              \
                                               const TransferConfig&, Rng&, GradTarget<T>);                     \
    template TokenSequence draw_sample<T>(const EncoderDecoder<T>&, std::span<const TokenId>,                   \
                                          const TransferConfig&, Rng&);                                         \
    template TraceRow total_loss<T>(const EncoderDecoder<T>&, std::span<const StyleDiscriminator>,              \
                                    std::span<const TokenSequence>, std::span<const TokenSequence>,             \
                                    const TransferConfig&, Rng&, GradTarget<T>, Rng*, const BaselineFn&);

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::transfer
