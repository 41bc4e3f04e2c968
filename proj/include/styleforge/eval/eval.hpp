// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "styleforge/model/transformer.hpp"
#include "styleforge/tokenizer/bpe.hpp"

namespace styleforge::eval {

// ---------------------------------------------------------------- classifier

struct LabeledSentence {
    std::string text;
    std::string label;
};

struct ClassifierConfig {
    std::size_t buckets = 1 << 16;
    std::size_t dim = 16;
    std::size_t epochs = 10;
    double lr = 0.2;
    std::uint64_t seed = 1;
};

/// Hashed unigram+bigram embeddings averaged into a sentence vector, then a
/// linear softmax over labels. Case-sensitive.
class NGramStyleClassifier {
public:
    NGramStyleClassifier(std::vector<std::string> labels, const ClassifierConfig& cfg);

    const std::vector<std::string>& labels() const { return labels_; }
    std::vector<double> predict_proba(const std::string& sentence) const;
    const std::string& predict(const std::string& sentence) const;
    double training_accuracy() const { return training_accuracy_; }

    /// One SGD step on a single example.
    void update(const std::string& sentence, std::size_t label, double lr);
    void set_training_accuracy(double acc) { training_accuracy_ = acc; }

private:
    std::vector<std::size_t> features(const std::string& sentence) const;
    std::vector<double> hidden(const std::vector<std::size_t>& feats) const;

    std::vector<std::string> labels_;
    std::size_t buckets_, dim_;
    std::vector<float> emb_;    // buckets x dim
    std::vector<double> w_;     // labels x dim
    std::vector<double> b_;     // labels
    double training_accuracy_ = 0.0;
};

/// Throws ConfigError when fewer than two distinct labels are present.
NGramStyleClassifier train_style_classifier(std::span<const LabeledSentence> data, const ClassifierConfig& cfg = {});

/// 100 * share of sentences predicted as `target`. Throws ConfigError on an
/// empty list or an unknown label.
double style_accuracy(const NGramStyleClassifier& clf, std::span<const std::string> sentences,
                      const std::string& target);

// ---------------------------------------------------------------- formality

enum class Formality { Formal, Informal };

class FormalityLexicon {
public:
    FormalityLexicon() = default;
    /// Throws ConfigError for scores outside [-1, 1].
    explicit FormalityLexicon(std::unordered_map<std::string, double> scores);

    /// `word<TAB>score` per line; '#' lines and blank lines are ignored.
    static FormalityLexicon load(const std::filesystem::path& path);

    /// Exact match first, then lowercase; 0 when absent.
    double score(const std::string& word) const;
    std::size_t size() const { return scores_.size(); }

private:
    std::unordered_map<std::string, double> scores_;
};

/// Mean word score mapped from [-1, 1] to n in [0, 100]; returns n for a
/// formal target and 100 - n for an informal one. Throws DegenerateInputError
/// when the sentence has no words.
double lexical_formality_score(const std::string& sentence, const FormalityLexicon& lexicon, Formality target);

// ---------------------------------------------------------------- BLEU

struct BleuOptions {
    std::size_t max_n = 4;
    bool lowercase = false;
};

struct NgramPrecision {
    std::size_t matches = 0;  // clipped
    std::size_t total = 0;
};

using Words = std::vector<std::string>;

Words words(const std::string& text, bool lowercase = false);

NgramPrecision ngram_precision(const Words& candidate, std::span<const Words> references, std::size_t n);

/// Sentence BLEU in [0, 1]: geometric mean of clipped n-gram precisions times
/// the brevity penalty. Orders n >= 2 use add-one smoothing; the brevity
/// penalty uses the shortest reference. Throws ConfigError without a
/// non-empty reference and DegenerateInputError for an empty candidate.
double bleu(const Words& candidate, std::span<const Words> references, std::size_t max_n = 4);

/// Mean sentence BLEU of outputs[i] against refs[i].
double corpus_bleu(std::span<const std::string> outputs, std::span<const std::vector<std::string>> refs,
                   const BleuOptions& opts = {});

// ---------------------------------------------------------------- fluency

/// Same definition and code path as discriminator perplexity.
double fluency_perplexity(const model::LanguageModel<float>& flm, std::span<const tokenizer::TokenSequence> corpus);
double fluency_perplexity(const model::LanguageModel<float>& flm, std::span<const std::string> sentences,
                          const tokenizer::Tokenizer& tok);

// ---------------------------------------------------------------- report

struct StyleTarget {
    std::string dimension;
    const NGramStyleClassifier* classifier = nullptr;
    std::string label;
};

struct EvalInputs {
    std::span<const std::string> inputs;
    std::span<const std::string> outputs;
    /// Optional; one list of references per output.
    std::span<const std::vector<std::string>> references;
    std::vector<StyleTarget> targets;
    const FormalityLexicon* lexicon = nullptr;
    Formality formality_target = Formality::Formal;
    const model::LanguageModel<float>* fluency_lm = nullptr;
    const tokenizer::Tokenizer* tokenizer = nullptr;
    BleuOptions bleu;
};

struct EvalReport {
    std::size_t sentences = 0;
    std::map<std::string, double> style_accuracy;  // per dimension, %
    std::optional<double> joint_accuracy;           // all targets at once, %
    std::optional<double> lexical_formality;
    double self_bleu = 0.0;
    std::optional<double> ref_bleu;
    std::optional<double> fluency_perplexity;
    std::map<std::string, std::string> metadata;
};

/// Throws ConfigError for empty or misaligned inputs.
EvalReport evaluate(const EvalInputs& in);

/// `key=value` lines.
std::string to_key_value(const EvalReport& report);
/// Single-line JSON record.
std::string to_json_line(const EvalReport& report);
/// Human-readable table.
std::string to_table(const EvalReport& report);

}  // namespace styleforge::eval
