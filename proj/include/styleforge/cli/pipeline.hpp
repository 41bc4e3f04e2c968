// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "styleforge/cli/config.hpp"
#include "styleforge/corpus/corpus.hpp"
#include "styleforge/discriminator/discriminator.hpp"
#include "styleforge/eval/eval.hpp"
#include "styleforge/model/config.hpp"
#include "styleforge/model/training.hpp"
#include "styleforge/transfer/transfer.hpp"

// Staged workflow: train-bpe -> pretrain (MLM) -> finetune-disc (one causal
// LM per style, plus the mixture LM that initialises the decoder and the
// fluency LM) -> train-transfer -> transfer -> evaluate. Every stage reads
// its inputs from and writes its artifacts to `paths.out_dir`.
namespace styleforge::cli {

struct StyleSpec {
    std::string label;
    std::string dimension;
    std::filesystem::path train;
    std::filesystem::path heldout;  // optional
};

struct RunConfig {
    KeyValueConfig raw;
    std::uint64_t seed = 1;
    std::string config_hash;

    std::filesystem::path out_dir;
    std::filesystem::path generic;
    std::vector<StyleSpec> styles;
    std::vector<std::string> transfer_styles;
    std::filesystem::path lexicon;
    eval::Formality formality_target = eval::Formality::Formal;

    std::size_t num_merges = 500;
    std::size_t max_len = 64;
    model::TransformerConfig model;
    corpus::NoiseConfig noise;
    model::MlmTrainConfig pretrain;
    std::size_t pretrain_checkpoint_every = 0;
    std::size_t pretrain_validation = 200;
    discriminator::FinetuneConfig finetune;
    transfer::TransferConfig transfer;
    eval::ClassifierConfig classifier;
    eval::BleuOptions bleu;

    /// Reads every section; STYLE_FORGE_SEED overrides `seed`. With
    /// `check_paths`, referenced input files must exist (IoError otherwise).
    static RunConfig from(const KeyValueConfig& raw, bool check_paths = true);
    static RunConfig load(const std::filesystem::path& path, bool check_paths = true);

    std::filesystem::path artifact(const std::string& name) const { return out_dir / name; }
    const StyleSpec& style(const std::string& label) const;
    /// Metadata every artifact carries.
    model::Metadata provenance() const;
};

struct PretrainSummary {
    double initial_validation_loss = 0.0;
    double final_validation_loss = 0.0;
    std::size_t start_step = 0;
    std::size_t end_step = 0;
    std::size_t total_steps = 0;
};

struct FinetuneSummary {
    std::string label;
    discriminator::FinetuneReport report;
    double base_heldout_ppl = 0.0;  // NaN when no held-out file
    double heldout_ppl = 0.0;
};

/// Artifact names inside out_dir.
std::string disc_artifact(const std::string& label);

tokenizer::Tokenizer stage_train_bpe(const RunConfig& cfg, std::ostream* log = nullptr);
tokenizer::Tokenizer load_tokenizer(const RunConfig& cfg);

/// `stop_after` limits the number of updates in this invocation (used to
/// simulate interruption); 0 means run to completion.
PretrainSummary stage_pretrain(const RunConfig& cfg, bool resume, std::size_t stop_after = 0,
                               std::ostream* log = nullptr);

/// Fine-tunes the listed style labels (all configured styles when empty).
std::vector<FinetuneSummary> stage_finetune(const RunConfig& cfg, const std::vector<std::string>& labels,
                                            std::ostream* log = nullptr);
/// Mixture LM over the transfer styles (decoder initialisation).
FinetuneSummary stage_finetune_mixture(const RunConfig& cfg, std::ostream* log = nullptr);
/// Fluency LM over every configured style corpus.
FinetuneSummary stage_finetune_fluency(const RunConfig& cfg, std::ostream* log = nullptr);

/// Requires base, mixture and per-style discriminator checkpoints that agree
/// on the vocabulary. Writes transfer.ckpt and trace.jsonl.
transfer::TrainingTrace stage_train_transfer(const RunConfig& cfg, bool resume = false, std::ostream* log = nullptr);

/// One output line per input line.
std::vector<std::string> stage_transfer(const RunConfig& cfg, const std::vector<std::string>& inputs);
void stage_transfer_file(const RunConfig& cfg, const std::filesystem::path& input,
                         const std::filesystem::path& output);

/// Classifiers per style dimension trained on the configured style corpora.
std::vector<std::pair<std::string, eval::NGramStyleClassifier>> train_classifiers(const RunConfig& cfg);

/// Writes report.txt and report.jsonl. Reference file is optional.
eval::EvalReport stage_evaluate(const RunConfig& cfg, const std::filesystem::path& inputs,
                                const std::filesystem::path& outputs,
                                const std::optional<std::filesystem::path>& refs, std::ostream* log = nullptr);

/// Every stage in order, then transfer + evaluate on paths.transfer_inputs.
eval::EvalReport run_all(const RunConfig& cfg, std::ostream* log = nullptr);

}  // namespace styleforge::cli
