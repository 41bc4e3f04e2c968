// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/cli/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "styleforge/corpus/corpus.hpp"
#include "styleforge/error.hpp"
#include "styleforge/rng.hpp"
#include "styleforge/tokenizer/bpe.hpp"

namespace styleforge::cli {

namespace {

constexpr std::array kDet{"the", "a", "this", "that", "every", "some"};
constexpr std::array kAdj{"red", "small", "quiet", "happy", "old", "bright", "cold", "green", "tall", "brave"};
constexpr std::array kNoun{"cat",   "dog",   "bird",    "house",  "river", "tree",
                           "car",   "child", "teacher", "farmer", "boat",  "garden"};
constexpr std::array kVerb{"sees", "likes", "finds", "follows", "paints", "watches", "helps", "carries"};
constexpr std::array kPrep{"near", "under", "behind", "beside", "with"};

// Index of one of `width` consecutive entries starting at `start` (mod n).
std::size_t window(std::size_t start, std::size_t width, std::size_t n, Rng& rng) {
    return (start + rng.below(width)) % n;
}

void noun_phrase(std::vector<std::string>& out, std::size_t noun, Rng& rng) {
    out.push_back(kDet[rng.bernoulli(0.5) ? noun % kDet.size() : (noun + 2) % kDet.size()]);
    if (rng.bernoulli(0.5)) out.push_back(kAdj[rng.bernoulli(0.5) ? noun % kAdj.size() : (noun + 3) % kAdj.size()]);
    out.push_back(kNoun[noun]);
}

// Lowercase content words, no marker.
std::vector<std::string> content(Rng& rng) {
    std::vector<std::string> w;
    const std::size_t subject = rng.below(kNoun.size());
    noun_phrase(w, subject, rng);
    const std::size_t verb = rng.bernoulli(0.5) ? subject % kVerb.size() : (subject + 3) % kVerb.size();
    w.push_back(kVerb[verb]);
    noun_phrase(w, window(2 * verb, 3, kNoun.size(), rng), rng);
    if (rng.bernoulli(0.5)) {
        const std::size_t prep = rng.bernoulli(0.5) ? verb % kPrep.size() : (verb + 1) % kPrep.size();
        w.push_back(kPrep[prep]);
        noun_phrase(w, window(3 * prep, 3, kNoun.size(), rng), rng);
    }
    return w;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string render(const std::vector<std::string>& words, bool upper_case, bool bang) {
    std::string out;
    for (const auto& w : words) {
        out += upper_case ? upper(w) : w;
        out += ' ';
    }
    out += bang ? "!" : ".";
    return out;
}

// Fixed dimension plus a random other dimension.
std::vector<std::string> style_corpus(std::size_t n, const std::string& label, Rng& rng) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = content(rng);
        const bool coin = rng.bernoulli(0.5);
        if (label == "upper") out.push_back(render(w, true, coin));
        else if (label == "lower") out.push_back(render(w, false, coin));
        else if (label == "bang") out.push_back(render(w, coin, true));
        else out.push_back(render(w, coin, false));
    }
    return out;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
    if (cfg.per_style == 0) throw ConfigError("synthetic per_style must be >= 1");
    Rng rng(cfg.seed);
    SyntheticData d;
    const std::array<std::pair<const char*, const char*>, 4> styles{
        {{"case", "upper"}, {"case", "lower"}, {"marker", "bang"}, {"marker", "dot"}}};
    for (const auto& [dim, label] : styles) {
        SyntheticStyle s;
        s.dimension = dim;
        s.label = label;
        s.train = style_corpus(cfg.per_style, label, rng);
        s.heldout = style_corpus(cfg.heldout_per_style, label, rng);
        d.styles.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < cfg.generic; ++i) {
        const auto w = content(rng);
        std::string line;
        for (const auto& word : w) line += (rng.bernoulli(0.5) ? upper(word) : word) + " ";
        line += rng.bernoulli(0.5) ? "!" : ".";
        d.generic.push_back(std::move(line));
    }
    for (std::size_t i = 0; i < cfg.transfer_inputs; ++i) {
        const auto w = content(rng);
        d.transfer_inputs.push_back(render(w, false, false));
        d.transfer_references.push_back(render(w, true, true));
    }
    return d;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data, const SyntheticConfig& cfg) {
    std::filesystem::create_directories(dir);
    corpus::write_lines(dir / "generic.txt", data.generic);
    for (const auto& s : data.styles) {
        corpus::write_lines(dir / (s.label + ".train.txt"), s.train);
        corpus::write_lines(dir / (s.label + ".heldout.txt"), s.heldout);
    }
    corpus::write_lines(dir / "transfer.inputs.txt", data.transfer_inputs);
    corpus::write_lines(dir / "transfer.refs.txt", data.transfer_references);

    std::ofstream conf(dir / "task.conf");
    if (!conf) throw IoError("cannot write " + (dir / "task.conf").string());
    conf << "# synthetic task, seed " << cfg.seed << "\n";
    conf << "paths.generic=" << (dir / "generic.txt").string() << "\n";
    std::string labels;
    for (const auto& s : data.styles) {
        labels += (labels.empty() ? "" : ",") + s.label;
        conf << "style." << s.label << ".dimension=" << s.dimension << "\n";
        conf << "style." << s.label << ".train=" << (dir / (s.label + ".train.txt")).string() << "\n";
        conf << "style." << s.label << ".heldout=" << (dir / (s.label + ".heldout.txt")).string() << "\n";
    }
    conf << "styles=" << labels << "\n";
    conf << "paths.transfer_inputs=" << (dir / "transfer.inputs.txt").string() << "\n";
    conf << "paths.transfer_refs=" << (dir / "transfer.refs.txt").string() << "\n";
}

std::string case_label(const std::string& sentence) {
    bool has_upper = false, has_lower = false;
    for (unsigned char c : sentence) {
        has_upper = has_upper || std::isupper(c);
        has_lower = has_lower || std::islower(c);
    }
    if (has_upper && !has_lower) return "upper";
    if (has_lower && !has_upper) return "lower";
    return "mixed";
}

std::string marker_label(const std::string& sentence) {
    const auto ws = tokenizer::split_words(sentence);
    if (ws.empty()) return "none";
    if (ws.back() == "!") return "bang";
    if (ws.back() == ".") return "dot";
    return "none";
}

}  // namespace styleforge::cli
