// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "styleforge/model/optimizer.hpp"
#include "styleforge/model/transformer.hpp"

// Checkpoint layout:
//
//   STYLEFORGE-CHECKPOINT v1
//   key=value                      (metadata, sorted by key)
//   ...
//   tensors <count>
//   <name> <d0>x<d1>... <offset>   (offset in floats into the data block)
//   ...
//   data <float count>
//   <little-endian float32 block>
//
// Optimizer moments, when present, are stored as tensors "adam.m/<name>"
// and "adam.v/<name>" with the step under metadata key "adam.step".
namespace styleforge::model {

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
    Metadata meta;
    ParameterSet<float> params;
    std::optional<AdamState<float>> optimizer;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Metadata& meta, const ParameterSet<T>& params,
                     const AdamState<T>* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Reads only the text header (no tensor data).
Metadata read_checkpoint_metadata(const std::filesystem::path& path);

void write_config(Metadata& meta, const std::string& prefix, const TransformerConfig& cfg);
TransformerConfig read_config(const Metadata& meta, const std::string& prefix);

/// LM checkpoints carry "model.kind=lm", the config under "model.", and
/// "model.attention_mode".
template <typename T>
void save_lm(const std::filesystem::path& path, const LanguageModel<T>& lm, Metadata meta = {},
             const AdamState<T>* optimizer = nullptr);
LanguageModel<float> lm_from_checkpoint(const Checkpoint& ckpt);

/// Encoder-decoder checkpoints carry "model.kind=encdec" and both configs.
template <typename T>
void save_encoder_decoder(const std::filesystem::path& path, const EncoderDecoder<T>& encdec, Metadata meta = {},
                          const AdamState<T>* optimizer = nullptr);
EncoderDecoder<float> encoder_decoder_from_checkpoint(const Checkpoint& ckpt);

/// Throws ConfigError naming the key when missing.
const std::string& require_meta(const Metadata& meta, const std::string& key);

}  // namespace styleforge::model
