// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/eval/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "styleforge/discriminator/discriminator.hpp"
#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::eval {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void softmax(std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double z = 0.0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        z += x;
    }
    for (auto& x : v) x /= z;
}

}  // namespace

// ---------------------------------------------------------------- classifier

NGramStyleClassifier::NGramStyleClassifier(std::vector<std::string> labels, const ClassifierConfig& cfg)
    : labels_(std::move(labels)), buckets_(cfg.buckets), dim_(cfg.dim) {
    if (buckets_ == 0 || dim_ == 0) throw ConfigError("classifier buckets and dim must be >= 1");
    emb_.resize(buckets_ * dim_);
    Rng rng(cfg.seed);
    const double a = 1.0 / static_cast<double>(dim_);
    for (auto& v : emb_) v = static_cast<float>((rng.uniform() * 2.0 - 1.0) * a);
    w_.assign(labels_.size() * dim_, 0.0);
    b_.assign(labels_.size(), 0.0);
}

std::vector<std::size_t> NGramStyleClassifier::features(const std::string& sentence) const {
    Words ws = words(sentence);
    std::vector<std::size_t> f;
    for (const auto& w : ws) f.push_back(fnv1a("u:" + w) % buckets_);
    std::string prev = "<s>";
    ws.push_back("</s>");
    for (const auto& w : ws) {
        f.push_back(fnv1a("b:" + prev + " " + w) % buckets_);
        prev = w;
    }
    return f;
}

std::vector<double> NGramStyleClassifier::hidden(const std::vector<std::size_t>& feats) const {
    std::vector<double> h(dim_, 0.0);
    for (std::size_t f : feats) {
        const float* e = emb_.data() + f * dim_;
        for (std::size_t j = 0; j < dim_; ++j) h[j] += e[j];
    }
    for (auto& v : h) v /= static_cast<double>(feats.size());
    return h;
}

std::vector<double> NGramStyleClassifier::predict_proba(const std::string& sentence) const {
    const auto h = hidden(features(sentence));
    std::vector<double> z(labels_.size());
    for (std::size_t c = 0; c < labels_.size(); ++c) {
        z[c] = b_[c] + std::inner_product(h.begin(), h.end(), w_.begin() + static_cast<std::ptrdiff_t>(c * dim_), 0.0);
    }
    softmax(z);
    return z;
}

const std::string& NGramStyleClassifier::predict(const std::string& sentence) const {
    const auto p = predict_proba(sentence);
    return labels_[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

void NGramStyleClassifier::update(const std::string& sentence, std::size_t label, double lr) {
    const auto feats = features(sentence);
    const auto h = hidden(feats);
    auto p = predict_proba(sentence);
    p[label] -= 1.0;
    std::vector<double> dh(dim_, 0.0);
    for (std::size_t c = 0; c < labels_.size(); ++c) {
        double* w = w_.data() + c * dim_;
        for (std::size_t j = 0; j < dim_; ++j) {
            dh[j] += p[c] * w[j];
            w[j] -= lr * p[c] * h[j];
        }
        b_[c] -= lr * p[c];
    }
    const double scale = lr / static_cast<double>(feats.size());
    for (std::size_t f : feats) {
        float* e = emb_.data() + f * dim_;
        for (std::size_t j = 0; j < dim_; ++j) e[j] -= static_cast<float>(scale * dh[j]);
    }
}

NGramStyleClassifier train_style_classifier(std::span<const LabeledSentence> data, const ClassifierConfig& cfg) {
    std::set<std::string> label_set;
    for (const auto& d : data) label_set.insert(d.label);
    if (label_set.size() < 2) throw ConfigError("classifier training needs at least two labels");
    NGramStyleClassifier clf({label_set.begin(), label_set.end()}, cfg);
    std::vector<std::size_t> ids;
    for (const auto& d : data) {
        ids.push_back(static_cast<std::size_t>(
            std::find(clf.labels().begin(), clf.labels().end(), d.label) - clf.labels().begin()));
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed + 1);
    const double total = static_cast<double>(cfg.epochs * data.size());
    double done = 0.0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (std::size_t i : order) {
            const double lr = cfg.lr * std::max(0.0, 1.0 - done / total);
            clf.update(data[i].text, ids[i], lr);
            done += 1.0;
        }
    }
    std::size_t correct = 0;
    for (const auto& d : data) correct += clf.predict(d.text) == d.label;
    clf.set_training_accuracy(100.0 * static_cast<double>(correct) / static_cast<double>(data.size()));
    return clf;
}

double style_accuracy(const NGramStyleClassifier& clf, std::span<const std::string> sentences,
                      const std::string& target) {
    if (sentences.empty()) throw ConfigError("style accuracy of an empty list");
    if (std::find(clf.labels().begin(), clf.labels().end(), target) == clf.labels().end()) {
        throw ConfigError("classifier has no label '" + target + "'");
    }
    std::size_t hits = 0;
    for (const auto& s : sentences) hits += clf.predict(s) == target;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(sentences.size());
}

// ---------------------------------------------------------------- formality

FormalityLexicon::FormalityLexicon(std::unordered_map<std::string, double> scores) : scores_(std::move(scores)) {
    for (const auto& [w, s] : scores_) {
        if (!(s >= -1.0 && s <= 1.0)) throw ConfigError("formality score for '" + w + "' outside [-1, 1]");
    }
}

FormalityLexicon FormalityLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read lexicon " + path.string());
    std::unordered_map<std::string, double> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected word<TAB>score");
        }
        try {
            scores[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
        } catch (const std::logic_error&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad score");
        }
    }
    return FormalityLexicon(std::move(scores));
}

double FormalityLexicon::score(const std::string& word) const {
    if (auto it = scores_.find(word); it != scores_.end()) return it->second;
    if (auto it = scores_.find(lower(word)); it != scores_.end()) return it->second;
    return 0.0;
}

double lexical_formality_score(const std::string& sentence, const FormalityLexicon& lexicon, Formality target) {
    const Words ws = words(sentence);
    if (ws.empty()) throw DegenerateInputError("formality score of a sentence without words");
    double sum = 0.0;
    for (const auto& w : ws) sum += lexicon.score(w);
    const double n = 50.0 * (sum / static_cast<double>(ws.size()) + 1.0);
    return target == Formality::Formal ? n : 100.0 - n;
}

// ---------------------------------------------------------------- BLEU

Words words(const std::string& text, bool lowercase) {
    Words out;
    for (auto w : tokenizer::split_words(text)) out.emplace_back(lowercase ? lower(std::string(w)) : std::string(w));
    return out;
}

namespace {

std::map<std::vector<std::string>, std::size_t> count_ngrams(const Words& ws, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    for (std::size_t i = 0; i + n <= ws.size(); ++i) ++counts[Words(ws.begin() + i, ws.begin() + i + n)];
    return counts;
}

}  // namespace

NgramPrecision ngram_precision(const Words& candidate, std::span<const Words> references, std::size_t n) {
    const auto cand = count_ngrams(candidate, n);
    std::map<std::vector<std::string>, std::size_t> max_ref;
    for (const auto& r : references) {
        for (const auto& [g, c] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    NgramPrecision p;
    for (const auto& [g, c] : cand) {
        p.total += c;
        if (auto it = max_ref.find(g); it != max_ref.end()) p.matches += std::min(c, it->second);
    }
    return p;
}

double bleu(const Words& candidate, std::span<const Words> references, std::size_t max_n) {
    if (max_n < 1) throw ConfigError("BLEU max_n must be >= 1");
    std::size_t shortest = SIZE_MAX;
    for (const auto& r : references) {
        if (!r.empty()) shortest = std::min(shortest, r.size());
    }
    if (shortest == SIZE_MAX) throw ConfigError("BLEU needs at least one non-empty reference");
    if (candidate.empty()) throw DegenerateInputError("BLEU of an empty candidate");

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        const auto p = ngram_precision(candidate, references, n);
        const double num = static_cast<double>(p.matches) + (n >= 2 ? 1.0 : 0.0);
        const double den = static_cast<double>(p.total) + (n >= 2 ? 1.0 : 0.0);
        if (num == 0.0) return 0.0;
        log_sum += std::log(num / den);
    }
    const double c = static_cast<double>(candidate.size()), r = static_cast<double>(shortest);
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return std::min(1.0, bp * std::exp(log_sum / static_cast<double>(max_n)));
}

double corpus_bleu(std::span<const std::string> outputs, std::span<const std::vector<std::string>> refs,
                   const BleuOptions& opts) {
    if (outputs.empty()) throw ConfigError("BLEU over an empty output list");
    if (outputs.size() != refs.size()) throw ConfigError("BLEU outputs and references differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        std::vector<Words> rw;
        for (const auto& r : refs[i]) rw.push_back(words(r, opts.lowercase));
        const Words cand = words(outputs[i], opts.lowercase);
        sum += cand.empty() ? 0.0 : bleu(cand, rw, opts.max_n);
    }
    return sum / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------- fluency

double fluency_perplexity(const model::LanguageModel<float>& flm, std::span<const tokenizer::TokenSequence> corpus) {
    return discriminator::perplexity(flm, corpus);
}

double fluency_perplexity(const model::LanguageModel<float>& flm, std::span<const std::string> sentences,
                          const tokenizer::Tokenizer& tok) {
    std::vector<tokenizer::TokenSequence> corpus;
    for (const auto& s : sentences) {
        auto ids = tok.encode_framed(s);
        if (ids.size() > flm.config().max_positions + 1) {
            ids.resize(flm.config().max_positions + 1);
            ids.back() = tokenizer::kEos;
        }
        corpus.push_back(std::move(ids));
    }
    return fluency_perplexity(flm, corpus);
}

// ---------------------------------------------------------------- report

EvalReport evaluate(const EvalInputs& in) {
    if (in.outputs.empty()) throw ConfigError("evaluation needs at least one output");
    if (in.inputs.size() != in.outputs.size()) {
        throw ConfigError("inputs have " + std::to_string(in.inputs.size()) + " lines but outputs have " +
                          std::to_string(in.outputs.size()));
    }
    if (!in.references.empty() && in.references.size() != in.outputs.size()) {
        throw ConfigError("references have " + std::to_string(in.references.size()) + " entries but outputs have " +
                          std::to_string(in.outputs.size()));
    }
    EvalReport r;
    r.sentences = in.outputs.size();

    if (!in.targets.empty()) {
        std::size_t joint = 0;
        std::vector<std::size_t> hits(in.targets.size(), 0);
        for (const auto& out : in.outputs) {
            bool all = true;
            for (std::size_t t = 0; t < in.targets.size(); ++t) {
                const bool ok = in.targets[t].classifier->predict(out) == in.targets[t].label;
                hits[t] += ok;
                all = all && ok;
            }
            joint += all;
        }
        const double n = static_cast<double>(in.outputs.size());
        for (std::size_t t = 0; t < in.targets.size(); ++t) {
            r.style_accuracy[in.targets[t].dimension] = 100.0 * static_cast<double>(hits[t]) / n;
        }
        r.joint_accuracy = 100.0 * static_cast<double>(joint) / n;
    }

    if (in.lexicon != nullptr) {
        double sum = 0.0;
        std::size_t scored = 0;
        for (const auto& out : in.outputs) {
            if (words(out).empty()) continue;
            sum += lexical_formality_score(out, *in.lexicon, in.formality_target);
            ++scored;
        }
        if (scored > 0) r.lexical_formality = sum / static_cast<double>(scored);
    }

    std::vector<std::vector<std::string>> self_refs;
    for (const auto& s : in.inputs) self_refs.push_back({s});
    r.self_bleu = corpus_bleu(in.outputs, self_refs, in.bleu);
    if (!in.references.empty()) r.ref_bleu = corpus_bleu(in.outputs, in.references, in.bleu);

    if (in.fluency_lm != nullptr) {
        if (in.tokenizer == nullptr) throw ConfigError("fluency perplexity needs a tokenizer");
        r.fluency_perplexity = fluency_perplexity(*in.fluency_lm, in.outputs, *in.tokenizer);
    }
    r.metadata["bleu.max_n"] = std::to_string(in.bleu.max_n);
    r.metadata["bleu.smoothing"] = "add-one-n>=2";
    r.metadata["bleu.lowercase"] = in.bleu.lowercase ? "true" : "false";
    return r;
}

namespace {

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

}  // namespace

std::string to_key_value(const EvalReport& r) {
    std::ostringstream out;
    out << "sentences=" << r.sentences << '\n';
    for (const auto& [dim, acc] : r.style_accuracy) out << "style_accuracy." << dim << '=' << num(acc) << '\n';
    if (r.joint_accuracy) out << "joint_accuracy=" << num(*r.joint_accuracy) << '\n';
    if (r.lexical_formality) out << "lexical_formality=" << num(*r.lexical_formality) << '\n';
    out << "self_bleu=" << num(r.self_bleu) << '\n';
    if (r.ref_bleu) out << "ref_bleu=" << num(*r.ref_bleu) << '\n';
    if (r.fluency_perplexity) out << "fluency_perplexity=" << num(*r.fluency_perplexity) << '\n';
    for (const auto& [k, v] : r.metadata) out << "meta." << k << '=' << v << '\n';
    return out.str();
}

std::string to_json_line(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["sentences"] = r.sentences;
    j["style_accuracy"] = r.style_accuracy;
    if (r.joint_accuracy) j["joint_accuracy"] = *r.joint_accuracy;
    if (r.lexical_formality) j["lexical_formality"] = *r.lexical_formality;
    j["self_bleu"] = r.self_bleu;
    if (r.ref_bleu) j["ref_bleu"] = *r.ref_bleu;
    if (r.fluency_perplexity) j["fluency_perplexity"] = *r.fluency_perplexity;
    j["meta"] = r.metadata;
    return j.dump();
}

std::string to_table(const EvalReport& r) {
    std::ostringstream out;
    out << std::fixed;
    out << std::left << std::setw(28) << "metric" << "value\n";
    for (const auto& [dim, acc] : r.style_accuracy) {
        out << std::setw(28) << ("style accuracy (" + dim + ")") << std::setprecision(2) << acc << " %\n";
    }
    if (r.joint_accuracy) out << std::setw(28) << "joint style accuracy" << std::setprecision(2) << *r.joint_accuracy << " %\n";
    if (r.lexical_formality) out << std::setw(28) << "lexical formality" << std::setprecision(2) << *r.lexical_formality << '\n';
    out << std::setw(28) << "self-BLEU" << std::setprecision(4) << r.self_bleu << '\n';
    if (r.ref_bleu) out << std::setw(28) << "ref-BLEU" << std::setprecision(4) << *r.ref_bleu << '\n';
    if (r.fluency_perplexity) out << std::setw(28) << "fluency perplexity" << std::setprecision(4) << *r.fluency_perplexity << '\n';
    return out.str();
}

}  // namespace styleforge::eval
