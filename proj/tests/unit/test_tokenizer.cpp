// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "styleforge/error.hpp"
#include "styleforge/tokenizer/bpe.hpp"

using namespace styleforge;
using namespace styleforge::tokenizer;

namespace {

std::vector<std::string> strings(const Tokenizer& tok, const TokenSequence& ids) {
    std::vector<std::string> out;
    for (auto id : ids) out.push_back(tok.vocab().token(id));
    return out;
}

const std::vector<std::string> kSample{
    "the quick brown fox jumps over the lazy dog",
    "a lazy dog sleeps in the warm sun",
    "THE QUICK BROWN FOX !",
    "foxes and dogs are friends .",
};

}  // namespace

TEST_CASE("most frequent pair is merged first") {
    const std::vector<std::string> corpus{"aaab", "aab"};
    const auto tok = Tokenizer::train(corpus, 1);
    REQUIRE(tok.merges().size() == 1);
    CHECK(tok.merges()[0] == MergePair{"a", "a"});
    CHECK(strings(tok, tok.encode("aaab")) == std::vector<std::string>{"aa", "a", "b</w>"});
}

TEST_CASE("merging stops when no pairs remain") {
    const std::vector<std::string> corpus{"xy"};
    const auto tok = Tokenizer::train(corpus, 5);
    REQUIRE(tok.merges().size() == 1);
    CHECK(tok.merges()[0] == MergePair{"x", "y</w>"});
}

TEST_CASE("zero merges leaves specials plus base characters") {
    const std::vector<std::string> corpus{"ab ba"};
    const auto tok = Tokenizer::train(corpus, 0);
    CHECK(tok.merges().empty());
    const std::set<std::string> got(tok.vocab().tokens().begin() + kNumSpecial, tok.vocab().tokens().end());
    CHECK(got == std::set<std::string>{"a", "a</w>", "b", "b</w>"});
    CHECK(tok.vocab_size() == 9);
}

TEST_CASE("specials occupy the lowest ids and vocabulary maps are inverse") {
    const auto tok = Tokenizer::train(kSample, 40);
    const auto& v = tok.vocab();
    CHECK(v.token(kPad) == "<pad>");
    CHECK(v.token(kBos) == "<s>");
    CHECK(v.token(kEos) == "</s>");
    CHECK(v.token(kMask) == "<mask>");
    CHECK(v.token(kUnk) == "<unk>");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        CHECK_FALSE(v.token(id).empty());
        CHECK(v.find(v.token(id)) == id);
    }
    for (const auto& m : tok.merges()) CHECK(v.find(m.left + m.right).has_value());
}

TEST_CASE("roundtrip over the training alphabet") {
    const auto tok = Tokenizer::train(kSample, 60);
    for (const auto& s : kSample) CHECK(tok.decode(tok.encode(s)) == s);
    CHECK(tok.decode(tok.encode("dog fox the")) == "dog fox the");
    const auto ids = tok.encode("lazy brown sun");
    CHECK(tok.encode(tok.decode(ids)) == ids);
}

TEST_CASE("unknown characters become UNK") {
    const auto tok = Tokenizer::train(kSample, 20);
    const auto ids = tok.encode("the dog #1");
    CHECK(std::find(ids.begin(), ids.end(), kUnk) != ids.end());
}

TEST_CASE("decode strips specials and rejects bad ids") {
    const auto tok = Tokenizer::train(kSample, 20);
    const TokenSequence framed{kBos, kEos};
    CHECK(tok.decode(framed).empty());
    const TokenSequence bad{static_cast<TokenId>(tok.vocab_size())};
    CHECK_THROWS_AS(tok.decode(bad), InvalidTokenError);
    const auto f = tok.encode_framed("the dog");
    CHECK(f.front() == kBos);
    CHECK(f.back() == kEos);
}

TEST_CASE("training is deterministic and more merges never lengthen encodings") {
    const auto a = Tokenizer::train(kSample, 30);
    const auto b = Tokenizer::train(kSample, 30);
    CHECK(a.serialize() == b.serialize());
    std::size_t prev_total = SIZE_MAX;
    for (std::size_t merges : {0u, 5u, 10u, 20u, 40u, 80u}) {
        const auto tok = Tokenizer::train(kSample, merges);
        const auto base = Tokenizer::train(kSample, merges == 0 ? 0 : merges - 5);
        std::size_t total = 0;
        for (const auto& s : kSample) {
            CHECK(tok.encode(s).size() <= base.encode(s).size());
            total += tok.encode(s).size();
        }
        CHECK(total <= prev_total);
        prev_total = total;
    }
}

TEST_CASE("serialization roundtrip and header") {
    const auto tok = Tokenizer::train(kSample, 25);
    const std::string text = tok.serialize();
    CHECK(text.rfind("BPE v1 " + std::to_string(tok.merges().size()) + "\n", 0) == 0);
    const auto back = Tokenizer::parse(text);
    CHECK(back.serialize() == text);
    CHECK(back.hash() == tok.hash());

    const auto path = std::filesystem::temp_directory_path() / "styleforge_bpe_test.txt";
    tok.save(path);
    CHECK(Tokenizer::load(path).serialize() == text);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(Tokenizer::parse("not a bpe file\n"), Error);
}

TEST_CASE("empty corpus is a configuration error") {
    const std::vector<std::string> empty;
    CHECK_THROWS_AS(Tokenizer::train(empty, 3), ConfigError);
}
