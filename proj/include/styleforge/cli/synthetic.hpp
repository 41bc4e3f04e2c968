// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Two-dimensional synthetic style task.
//
// Content grammar (all words lowercase before styling):
//
//   S   -> NP VP [PP] MARK
//   NP  -> DET [ADJ] NOUN
//   VP  -> VERB NP
//   PP  -> PREP NP
//
// with each optional part present with probability 1/2. Every word choice
// follows fixed associations so each word has its own contexts:
//
//   noun n      -> DET n or DET n+2, ADJ n or ADJ n+3
//   subject n   -> VERB n or VERB n+3
//   verb v      -> object NOUN 2v .. 2v+2
//   verb v      -> PREP v or PREP v+1
//   prep p      -> object NOUN 3p .. 3p+2
//
// (indices into the word lists, wrapping). Two style dimensions are applied
// on top:
//
//   case   : "upper" uppercases every word, "lower" leaves it lowercase.
//   marker : "bang" ends the sentence with the word "!", "dot" with ".".
//
// Each style corpus fixes one dimension and randomises the other (per
// sentence), so corpora are labelled in exactly one dimension. The generic
// pretraining corpus randomises case per word and the marker per sentence.
// Held-out transfer inputs are lower+dot; their references are the same
// content rendered upper+bang.
namespace styleforge::cli {

struct SyntheticConfig {
    std::size_t per_style = 2000;
    std::size_t generic = 6000;
    std::size_t heldout_per_style = 200;
    std::size_t transfer_inputs = 200;
    std::uint64_t seed = 1;
};

struct SyntheticStyle {
    std::string dimension;
    std::string label;
    std::vector<std::string> train;
    std::vector<std::string> heldout;
};

struct SyntheticData {
    std::vector<SyntheticStyle> styles;  // upper, lower, bang, dot
    std::vector<std::string> generic;
    std::vector<std::string> transfer_inputs;
    std::vector<std::string> transfer_references;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

/// Writes generic.txt, <label>.train.txt, <label>.heldout.txt,
/// transfer.inputs.txt, transfer.refs.txt and task.conf (the style table
/// in config syntax) into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data, const SyntheticConfig& cfg);

/// Rule-based labels: "upper", "lower" or "mixed"; "bang", "dot" or "none".
std::string case_label(const std::string& sentence);
std::string marker_label(const std::string& sentence);

}  // namespace styleforge::cli
