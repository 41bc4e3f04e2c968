// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "styleforge/corpus/corpus.hpp"
#include "styleforge/model/checkpoint.hpp"
#include "styleforge/model/optimizer.hpp"
#include "styleforge/model/transformer.hpp"

namespace styleforge::discriminator {

using model::LanguageModel;
using tokenizer::TokenId;
using tokenizer::TokenSequence;

/// Causal LM fine-tuned on one style. Frozen once built: the only mutation
/// path is constructing a new one.
class StyleDiscriminator {
public:
    /// Throws ModeError unless `lm` is causal.
    StyleDiscriminator(LanguageModel<float> lm, std::string dimension, std::string label, std::string base_hash,
                       std::string corpus_hash);

    const LanguageModel<float>& lm() const { return lm_; }
    const std::string& dimension() const { return dimension_; }
    const std::string& label() const { return label_; }
    /// Parameter hash of the model fine-tuning started from.
    const std::string& base_hash() const { return base_hash_; }
    const std::string& corpus_hash() const { return corpus_hash_; }
    std::uint64_t parameter_hash() const { return lm_.parameters().hash(); }

private:
    LanguageModel<float> lm_;
    std::string dimension_;
    std::string label_;
    std::string base_hash_;
    std::string corpus_hash_;
};

struct FinetuneConfig {
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
    model::AdamConfig adam{3e-4, 0.9, 0.999, 1e-8, 1.0};
    /// Share of the corpus held out for early stopping; 0 disables it.
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
};

struct FinetuneReport {
    double initial_loss = 0.0;  // CLM loss on the training probe before any update
    double final_loss = 0.0;    // same probe after training
    std::vector<double> validation_perplexity;  // one per finished epoch
    std::size_t steps = 0;
    std::size_t best_epoch = 0;
};

struct FinetuneResult {
    StyleDiscriminator disc;
    FinetuneReport report;
};

/// CLM fine-tuning of a copy of `base` (switched to causal attention). Keeps
/// the parameters of the epoch with the lowest validation perplexity and
/// stops once an epoch fails to improve. Throws ConfigError on an empty corpus.
FinetuneResult finetune_discriminator(const LanguageModel<float>& base, std::span<const TokenSequence> sentences,
                                      const std::string& dimension, const std::string& label,
                                      const FinetuneConfig& cfg);
FinetuneResult finetune_discriminator(const LanguageModel<float>& base, const corpus::StyledCorpus& corpus,
                                      const FinetuneConfig& cfg);
/// Mixture fine-tuning (decoder initialisation); labelled "mixture".
FinetuneResult finetune_discriminator(const LanguageModel<float>& base, const corpus::MixedCorpus& corpus,
                                      const FinetuneConfig& cfg);

/// exp(total NLL / total scored tokens). Throws ConfigError on an empty corpus.
double perplexity(const LanguageModel<float>& lm, std::span<const TokenSequence> corpus);
double perplexity(const StyleDiscriminator& disc, std::span<const TokenSequence> corpus);

/// r(x) = log P(x) under the discriminator; <= 0.
double style_reward(const StyleDiscriminator& disc, std::span<const TokenId> tokens);

/// Checkpoint with style keys "style.dimension", "style.label",
/// "provenance.base_hash" and "provenance.corpus_hash".
void save_discriminator(const std::filesystem::path& path, const StyleDiscriminator& disc,
                        model::Metadata extra = {});
StyleDiscriminator load_discriminator(const std::filesystem::path& path, model::Metadata* meta = nullptr);

}  // namespace styleforge::discriminator
