// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/discriminator/discriminator.hpp"

#include <cmath>
#include <limits>

#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"
#include "styleforge/model/losses.hpp"
#include "styleforge/model/training.hpp"

namespace styleforge::discriminator {

namespace {

constexpr std::size_t kProbeSize = 256;

double probe_loss(const LanguageModel<float>& lm, std::span<const TokenSequence> probe) {
    return model::clm_loss(lm, probe);
}

}  // namespace

StyleDiscriminator::StyleDiscriminator(LanguageModel<float> lm, std::string dimension, std::string label,
                                       std::string base_hash, std::string corpus_hash)
    : lm_(std::move(lm)),
      dimension_(std::move(dimension)),
      label_(std::move(label)),
      base_hash_(std::move(base_hash)),
      corpus_hash_(std::move(corpus_hash)) {
    if (lm_.mode() != model::AttentionMode::Causal) throw ModeError("a discriminator must be a causal LM");
}

FinetuneResult finetune_discriminator(const LanguageModel<float>& base, std::span<const TokenSequence> sentences,
                                      const std::string& dimension, const std::string& label,
                                      const FinetuneConfig& cfg) {
    if (sentences.empty()) throw ConfigError("cannot fine-tune a discriminator on an empty corpus");
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    LanguageModel<float> lm = base;
    lm.set_mode(model::AttentionMode::Causal);

    std::vector<TokenSequence> pool(sentences.begin(), sentences.end());
    Rng split_rng(cfg.seed);
    std::shuffle(pool.begin(), pool.end(), split_rng.engine());
    std::size_t n_val = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(pool.size()));
    if (pool.size() - n_val == 0) n_val = 0;
    const std::vector<TokenSequence> val(pool.end() - static_cast<std::ptrdiff_t>(n_val), pool.end());
    pool.resize(pool.size() - n_val);
    const std::span<const TokenSequence> probe(pool.data(), std::min(pool.size(), kProbeSize));

    FinetuneReport report;
    report.initial_loss = probe_loss(lm, probe);

    model::Adam<float> adam(cfg.adam, lm.parameters());
    model::BatchSchedule schedule(pool.size(), cfg.batch_size, cfg.seed);
    auto grads = lm.parameters().zeros_like();
    model::ParameterSet<float> best = lm.parameters();
    double best_ppl = val.empty() ? 0.0 : perplexity(lm, val);
    model::DivergenceGuard guard;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < schedule.steps_per_epoch(); ++i, ++step) {
            std::vector<TokenSequence> batch;
            for (std::size_t j : schedule.batch(step)) batch.push_back(pool[j]);
            Rng dropout_rng = model::step_rng(cfg.seed, step, 3);
            grads.zero();
            const double loss = model::clm_loss<float>(lm, batch, {&grads, &dropout_rng, 1.0});
            guard.observe(loss);
            adam.step(lm.parameters(), grads);
        }
        if (val.empty()) {
            best = lm.parameters();
            report.best_epoch = epoch + 1;
            continue;
        }
        const double ppl = perplexity(lm, val);
        report.validation_perplexity.push_back(ppl);
        if (ppl < best_ppl || report.best_epoch == 0) {
            best_ppl = ppl;
            best = lm.parameters();
            report.best_epoch = epoch + 1;
        } else {
            break;
        }
    }
    report.steps = step;
    lm = LanguageModel<float>(lm.config(), model::AttentionMode::Causal, std::move(best));
    report.final_loss = probe_loss(lm, probe);

    StyleDiscriminator disc(std::move(lm), dimension, label, hex_digest(base.parameters().hash()),
                            hex_digest(corpus::corpus_hash(sentences)));
    return {std::move(disc), report};
}

FinetuneResult finetune_discriminator(const LanguageModel<float>& base, const corpus::StyledCorpus& corpus,
                                      const FinetuneConfig& cfg) {
    return finetune_discriminator(base, corpus.sentences, corpus.dimension, corpus.label, cfg);
}

FinetuneResult finetune_discriminator(const LanguageModel<float>& base, const corpus::MixedCorpus& corpus,
                                      const FinetuneConfig& cfg) {
    return finetune_discriminator(base, corpus.sentences, "mixture", "mixture", cfg);
}

double perplexity(const LanguageModel<float>& lm, std::span<const TokenSequence> corpus) {
    if (corpus.empty()) throw ConfigError("perplexity of an empty corpus");
    const auto totals = model::corpus_nll(lm, corpus);
    return std::exp(totals.nll / static_cast<double>(totals.tokens));
}

double perplexity(const StyleDiscriminator& disc, std::span<const TokenSequence> corpus) {
    return perplexity(disc.lm(), corpus);
}

double style_reward(const StyleDiscriminator& disc, std::span<const TokenId> tokens) {
    return model::sequence_log_prob(disc.lm(), tokens);
}

void save_discriminator(const std::filesystem::path& path, const StyleDiscriminator& disc, model::Metadata extra) {
    extra["style.dimension"] = disc.dimension();
    extra["style.label"] = disc.label();
    extra["provenance.base_hash"] = disc.base_hash();
    extra["provenance.corpus_hash"] = disc.corpus_hash();
    model::save_lm(path, disc.lm(), std::move(extra));
}

StyleDiscriminator load_discriminator(const std::filesystem::path& path, model::Metadata* meta) {
    auto ck = model::load_checkpoint(path);
    auto lm = model::lm_from_checkpoint(ck);
    StyleDiscriminator disc(std::move(lm), model::require_meta(ck.meta, "style.dimension"),
                            model::require_meta(ck.meta, "style.label"),
                            model::require_meta(ck.meta, "provenance.base_hash"),
                            model::require_meta(ck.meta, "provenance.corpus_hash"));
    if (meta) *meta = std::move(ck.meta);
    return disc;
}

}  // namespace styleforge::discriminator
