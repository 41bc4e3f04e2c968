// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "model/stack.hpp"
#include "styleforge/error.hpp"
#include "styleforge/model/checkpoint.hpp"
#include "styleforge/model/generate.hpp"
#include "styleforge/model/losses.hpp"
#include "styleforge/model/optimizer.hpp"
#include "support/gradcheck.hpp"

using namespace styleforge;
using namespace styleforge::model;
using tokenizer::kBos;
using tokenizer::kEos;
using tokenizer::kMask;

namespace {

TransformerConfig tiny(std::size_t vocab = 11) {
    TransformerConfig c;
    c.num_layers = 2;
    c.hidden_size = 8;
    c.num_heads = 2;
    c.dropout = 0.0;
    c.max_positions = 16;
    c.vocab_size = vocab;
    return c;
}

// Zero embeddings and output bias give identical logits everywhere.
template <typename T>
void make_uniform(ParameterSet<T>& p, const std::string& prefix = "") {
    auto& e = p[prefix + "tok_emb"].values;
    std::fill(e.begin(), e.end(), T(0));
    auto& b = p[prefix + "out_bias"].values;
    std::fill(b.begin(), b.end(), T(0));
}

void check_grads(const std::vector<testing::GradSample>& samples) {
    REQUIRE(samples.size() >= 20);
    for (const auto& s : samples) {
        INFO("tensor " << s.tensor << " offset " << s.offset << " analytic " << s.analytic << " numeric "
                       << s.numeric);
        CHECK(s.rel_error <= 1e-4);
    }
}

}  // namespace

TEST_CASE("parameter count matches the closed form") {
    // Per layer: 2 norms (4d) + 4 projections (4d^2 + 4d) + FFN (8d^2 + 5d).
    const auto c = tiny();
    CHECK(lm_parameter_count(c) == 1987);
    CHECK(build_lm<float>(c, 1).parameters().scalar_count() == 1987);
    CHECK(cross_attention_parameter_count(c) == 4 * 64 + 6 * 8);
}

TEST_CASE("build_lm is deterministic and validates its config") {
    const auto a = build_lm<float>(tiny(), 42);
    const auto b = build_lm<float>(tiny(), 42);
    const auto c = build_lm<float>(tiny(), 43);
    CHECK(a.parameters().hash() == b.parameters().hash());
    CHECK(a.parameters().hash() != c.parameters().hash());
    auto bad = tiny();
    bad.hidden_size = 130;
    bad.num_heads = 4;
    CHECK_THROWS_AS(build_lm<float>(bad, 1), ConfigError);
    bad = tiny();
    bad.dropout = 1.0;
    CHECK_THROWS_AS(build_lm<float>(bad, 1), ConfigError);
}

TEST_CASE("initialisation statistics") {
    TransformerConfig c = tiny(200);
    c.hidden_size = 64;
    c.num_heads = 4;
    const auto lm = build_lm<double>(c, 5);
    const auto& e = lm.parameters()["tok_emb"].values;
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    double var = 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    var /= static_cast<double>(e.size());
    CHECK(std::abs(mean) < 0.002);
    CHECK(std::abs(std::sqrt(var) - 0.02) < 0.001);
    for (double g : lm.parameters()["layers.0.ln1.g"].values) CHECK(g == 1.0);
    for (double b : lm.parameters()["layers.0.attn.bq"].values) CHECK(b == 0.0);
}

TEST_CASE("output distributions are normalised and causal") {
    const TokenSequence seq{kBos, 5, 6, 7, 8, 9, kEos};
    for (auto mode : {AttentionMode::Bidirectional, AttentionMode::Causal}) {
        const auto lm = build_lm<float>(tiny(), 3, mode);
        const auto lp = lm.log_probs(seq);
        for (std::size_t i = 0; i < lp.rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < lp.cols; ++j) s += std::exp(static_cast<double>(lp(i, j)));
            CHECK(std::abs(s - 1.0) <= 1e-5);
        }
    }
    const auto lm = build_lm<float>(tiny(), 3, AttentionMode::Causal);
    const auto base = lm.log_probs(seq);
    for (std::size_t t = 1; t < seq.size(); ++t) {
        auto changed = seq;
        changed[t] = 10;
        const auto other = lm.log_probs(changed);
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < base.cols; ++j) CHECK(base(i, j) == other(i, j));
        }
    }
}

TEST_CASE("mlm_loss at initialisation is close to log V") {
    TransformerConfig c = tiny(60);
    c.hidden_size = 32;
    const auto lm = build_lm<double>(c, 9);
    Rng rng(1);
    std::vector<corpus::MlmSample> batch;
    corpus::NoiseConfig noise;
    noise.mlm_select = 0.5;
    for (int i = 0; i < 40; ++i) {
        TokenSequence s{kBos};
        for (int j = 0; j < 12; ++j) s.push_back(static_cast<TokenId>(5 + rng.below(55)));
        s.push_back(kEos);
        batch.push_back(corpus::apply_mlm_mask(s, noise, 60, rng));
    }
    CHECK(std::abs(mlm_loss(lm, batch) - std::log(60.0)) < 0.1);
}

TEST_CASE("loss modes and degenerate inputs") {
    const auto mlm = build_lm<double>(tiny(), 1, AttentionMode::Bidirectional);
    const auto clm = build_lm<double>(tiny(), 1, AttentionMode::Causal);
    const std::vector<TokenSequence> batch{{kBos, 5, kEos}};
    const std::vector<corpus::MlmSample> samples{{{kBos, kMask, kEos}, {{1, 5}}}};
    CHECK_THROWS_AS(clm_loss(mlm, batch), ModeError);
    CHECK_THROWS_AS(mlm_loss(clm, samples), ModeError);
    CHECK_THROWS_AS(sequence_log_prob(mlm, batch[0]), ModeError);
    const std::vector<corpus::MlmSample> no_targets{{{kBos, 5, kEos}, {}}};
    CHECK_THROWS_AS(mlm_loss(mlm, no_targets), DegenerateInputError);
    CHECK_THROWS_AS(sequence_log_prob(clm, TokenSequence{}), DegenerateInputError);
    CHECK_THROWS_AS(sequence_log_prob(clm, TokenSequence{kBos}), DegenerateInputError);
}

TEST_CASE("uniform and perfect models give analytic losses") {
    const std::size_t V = 11;
    auto lm = build_lm<double>(tiny(V), 2, AttentionMode::Causal);
    make_uniform(lm.parameters());
    const std::vector<TokenSequence> batch{{kBos, 5, 6, 7, kEos}, {kBos, 9, kEos}};
    CHECK(clm_loss(lm, batch) == doctest::Approx(std::log(double(V))).epsilon(1e-12));
    CHECK(sequence_log_prob(lm, batch[0]) == doctest::Approx(-4.0 * std::log(double(V))).epsilon(1e-12));

    auto chain = build_lm<double>(tiny(V), 2, AttentionMode::Causal);
    chain.parameters()["out_bias"].values[7] = 200.0;
    const std::vector<TokenSequence> sevens{{kBos, 7, 7, 7, 7}};
    CHECK(clm_loss(chain, sevens) <= 1e-12);
    CHECK(sequence_log_prob(chain, TokenSequence{kBos, 7}) >= -1e-12);

    auto mlm = build_lm<double>(tiny(V), 2, AttentionMode::Bidirectional);
    mlm.parameters()["out_bias"].values[8] = 200.0;
    const std::vector<corpus::MlmSample> samples{{{kBos, kMask, 6, kMask, kEos}, {{1, 8}, {3, 8}}}};
    CHECK(mlm_loss(mlm, samples) <= 1e-12);
}

TEST_CASE("sequence_log_prob agrees with brute-force enumeration") {
    // With two content tokens the vocabulary is the five specials plus A, B.
    const std::size_t V = 7;
    auto cfg = tiny(V);
    const auto lm = build_lm<double>(cfg, 17, AttentionMode::Causal);
    // Stepwise oracle: each conditional comes from a separate forward pass
    // over its own prefix.
    const TokenSequence x{kBos, 5, 6, 6, 5};
    double stepwise = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        const TokenSequence prefix(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(t));
        const auto lp = lm.log_probs(prefix);
        stepwise += lp(t - 1, static_cast<std::size_t>(x[t]));
    }
    CHECK(sequence_log_prob(lm, x) == doctest::Approx(stepwise).epsilon(1e-12));
    CHECK(sequence_log_prob(lm, x) <= 0.0);

    double total = 0.0;
    for (TokenId a = 0; a < 7; ++a)
        for (TokenId b = 0; b < 7; ++b)
            for (TokenId c = 0; c < 7; ++c) total += std::exp(sequence_log_prob(lm, TokenSequence{kBos, a, b, c}));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("clm_loss of one sequence is the negated mean log-probability") {
    const auto lm = build_lm<double>(tiny(), 4, AttentionMode::Causal);
    const TokenSequence x{kBos, 5, 8, 9, 10, kEos};
    const std::vector<TokenSequence> batch{x};
    CHECK(clm_loss(lm, batch) == doctest::Approx(-sequence_log_prob(lm, x) / 5.0).epsilon(1e-12));
    const TokenSequence no_bos{5, 8, 9, 10, kEos};
    CHECK(sequence_log_prob(lm, no_bos) == sequence_log_prob(lm, x));
    const auto totals = corpus_nll(lm, batch);
    CHECK(totals.tokens == 5);
    CHECK(totals.nll == doctest::Approx(-sequence_log_prob(lm, x)).epsilon(1e-12));
}

TEST_CASE("finite-difference gradient of mlm_loss") {
    auto lm = build_lm<double>(tiny(), 11, AttentionMode::Bidirectional);
    const std::vector<corpus::MlmSample> batch{{{kBos, kMask, 6, 7, kMask, kEos}, {{1, 5}, {4, 9}}},
                                               {{kBos, 8, kMask, kEos}, {{2, 10}}}};
    auto samples = testing::finite_difference_check(
        lm.parameters(), [&](ParameterSet<double>& g) { return mlm_loss<double>(lm, batch, {&g, nullptr, 1.0}); },
        [&] { return mlm_loss(lm, batch); }, 60, 1);
    check_grads(samples);
}

TEST_CASE("finite-difference gradient of clm_loss, with and without dropout") {
    auto cfg = tiny();
    for (double dropout : {0.0, 0.2}) {
        cfg.dropout = dropout;
        auto lm = build_lm<double>(cfg, 12, AttentionMode::Causal);
        const std::vector<TokenSequence> batch{{kBos, 5, 6, 7, 8, kEos}, {kBos, 9, 10, kEos}};
        // Reseeding per call fixes the dropout masks, so the loss is a
        // deterministic function of the parameters.
        auto loss = [&](ParameterSet<double>* g) {
            Rng rng(77);
            return clm_loss<double>(lm, batch, {g, dropout > 0 ? &rng : nullptr, 1.0});
        };
        auto samples = testing::finite_difference_check(
            lm.parameters(), [&](ParameterSet<double>& g) { return loss(&g); }, [&] { return loss(nullptr); }, 60, 2);
        check_grads(samples);
    }
}

TEST_CASE("encoder-decoder assembly") {
    const auto enc = build_lm<float>(tiny(), 1, AttentionMode::Bidirectional);
    const auto dec = build_lm<float>(tiny(), 2, AttentionMode::Causal);
    const auto ed = build_encoder_decoder(enc, dec, 3);
    const auto& p = ed.parameters();
    for (const auto& e : enc.parameters().entries()) CHECK(p["encoder." + e.name].values == e.values);
    for (const auto& e : dec.parameters().entries()) CHECK(p["decoder." + e.name].values == e.values);
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
        const auto& cross = p[std::string("decoder.layers.0.cross.") + w].values;
        const auto& self_dec = dec.parameters()[std::string("layers.0.attn.") + w].values;
        const auto& self_enc = enc.parameters()[std::string("layers.0.attn.") + w].values;
        float diff_dec = 0, diff_enc = 0;
        for (std::size_t i = 0; i < cross.size(); ++i) {
            diff_dec = std::max(diff_dec, std::abs(cross[i] - self_dec[i]));
            diff_enc = std::max(diff_enc, std::abs(cross[i] - self_enc[i]));
        }
        CHECK(diff_dec > 0);
        CHECK(diff_enc > 0);
    }
    CHECK(p.scalar_count() == 2 * lm_parameter_count(tiny()) + 2 * cross_attention_parameter_count(tiny()));

    auto other = tiny();
    other.hidden_size = 16;
    const auto wide = build_lm<float>(other, 1, AttentionMode::Causal);
    CHECK_THROWS_AS(build_encoder_decoder(enc, wide, 3), IncompatibleError);
}

TEST_CASE("dae_loss analytic cases and errors") {
    const std::size_t V = 11;
    const auto enc = build_lm<double>(tiny(V), 1, AttentionMode::Bidirectional);
    const auto dec = build_lm<double>(tiny(V), 2, AttentionMode::Causal);
    auto ed = build_encoder_decoder(enc, dec, 3);
    make_uniform(ed.parameters(), "decoder.");
    const TokenSequence original{kBos, 5, 6, 7, kEos};
    const TokenSequence noisy{kBos, 5, kMask, kEos};
    CHECK(dae_loss(ed, noisy, original) == doctest::Approx(4.0 * std::log(double(V))).epsilon(1e-12));

    auto perfect = build_encoder_decoder(enc, dec, 3);
    perfect.parameters()["decoder.out_bias"].values[6] = 300.0;
    const TokenSequence sixes{kBos, 6, 6, 6};
    CHECK(dae_loss(perfect, noisy, sixes) <= 1e-12);

    TokenSequence too_long(40, 5);
    too_long.front() = kBos;
    CHECK_THROWS_AS(dae_loss(ed, noisy, too_long), LengthError);
}

TEST_CASE("finite-difference gradient of dae_loss") {
    auto cfg = tiny();
    const auto enc = build_lm<double>(cfg, 21, AttentionMode::Bidirectional);
    const auto dec = build_lm<double>(cfg, 22, AttentionMode::Causal);
    auto ed = build_encoder_decoder(enc, dec, 23);
    const TokenSequence o1{kBos, 5, 6, 7, kEos}, n1{kBos, 5, kMask, kEos};
    const TokenSequence o2{kBos, 8, 9, 10, 6, kEos}, n2{kBos, 8, 10, 6, kEos};
    const std::vector<DaePair> batch{{n1, o1}, {n2, o2}};
    auto samples = testing::finite_difference_check(
        ed.parameters(), [&](ParameterSet<double>& g) { return dae_loss<double>(ed, batch, {&g, nullptr, 1.0}); },
        [&] { return dae_loss(ed, batch); }, 90, 3);
    check_grads(samples);
}

TEST_CASE("finite-difference gradient of the sampling policy") {
    const auto enc = build_lm<double>(tiny(), 31, AttentionMode::Bidirectional);
    const auto dec = build_lm<double>(tiny(), 32, AttentionMode::Causal);
    auto ed = build_encoder_decoder(enc, dec, 33);
    GenerationOptions opts;
    opts.mode = DecodeMode::Sample;
    opts.temperature = 0.7;
    opts.support = {5, 6, 7};
    const TokenSequence noisy{kBos, 5, kMask, kEos};
    const TokenSequence x{kBos, 6, 5, kEos};
    auto samples = testing::finite_difference_check(
        ed.parameters(),
        [&](ParameterSet<double>& g) { return policy_nll<double>(ed, noisy, x, opts, {&g, nullptr, 1.0}); },
        [&] { return policy_nll(ed, noisy, x, opts); }, 60, 4);
    check_grads(samples);
    const TokenSequence outside{kBos, 9, kEos};
    CHECK_THROWS_AS(policy_nll(ed, noisy, outside, opts), DegenerateInputError);
}

TEST_CASE("incremental decoding reproduces full forward logits") {
    const auto enc = build_lm<double>(tiny(), 41, AttentionMode::Bidirectional);
    const auto dec = build_lm<double>(tiny(), 42, AttentionMode::Causal);
    const auto ed = build_encoder_decoder(enc, dec, 43);
    const TokenSequence noisy{kBos, 7, kMask, 9, kEos};
    const TokenSequence target{kBos, 5, 9, 8, 10, 6};
    const auto full = ed.log_probs(noisy, target);
    const auto memory = ed.encode(noisy);
    detail::IncrementalDecoder<double> inc(ed.parameters(), ed.decoder_refs(), ed.decoder_config(), &memory);
    for (std::size_t t = 0; t < target.size(); ++t) {
        auto logits = inc.step(target[t]);
        Matrix<double> m(1, logits.size());
        m.data = logits;
        detail::log_softmax_rows(m);
        for (std::size_t j = 0; j < logits.size(); ++j) CHECK(m(0, j) == doctest::Approx(full(t, j)).epsilon(1e-12));
    }
}

TEST_CASE("generation contracts") {
    const auto enc = build_lm<float>(tiny(), 51, AttentionMode::Bidirectional);
    const auto dec = build_lm<float>(tiny(), 52, AttentionMode::Causal);
    auto ed = build_encoder_decoder(enc, dec, 53);
    const TokenSequence noisy{kBos, 5, 6, kEos};
    GenerationOptions greedy;
    greedy.max_len = 5;
    Rng r1(1), r2(2);
    const auto a = generate(ed, noisy, greedy, r1);
    const auto b = generate(ed, noisy, greedy, r2);
    CHECK(a == b);
    CHECK(a.front() == kBos);
    CHECK(a.size() - 1 <= 5);

    GenerationOptions sample = greedy;
    sample.mode = DecodeMode::Sample;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto s = generate(ed, noisy, sample, rng);
        CHECK(s.size() - 1 <= 5);
        for (std::size_t t = 1; t < s.size(); ++t) CHECK((s[t] == kEos || s[t] >= tokenizer::kNumSpecial));
    }
    GenerationOptions bad = greedy;
    bad.max_len = 0;
    CHECK_THROWS_AS(generate(ed, noisy, bad, rng), ConfigError);
    bad = sample;
    bad.temperature = 0.0;
    CHECK_THROWS_AS(generate(ed, noisy, bad, rng), ConfigError);

    // Greedy picks the argmax of the teacher-forced distribution at each step.
    const auto lp = ed.log_probs(noisy, TokenSequence(a.begin(), a.end() - 1));
    const auto allowed = support_mask(greedy, tiny().vocab_size);
    for (std::size_t t = 0; t + 1 < a.size(); ++t) {
        std::size_t best = 0;
        float bv = -INFINITY;
        for (std::size_t j = 0; j < lp.cols; ++j) {
            if (allowed[j] && lp(t, j) > bv) {
                bv = lp(t, j);
                best = j;
            }
        }
        CHECK(static_cast<TokenId>(best) == a[t + 1]);
    }
}

TEST_CASE("low-temperature sampling agrees with greedy") {
    auto cfg = tiny(30);
    cfg.hidden_size = 16;
    const auto enc = build_lm<float>(cfg, 61, AttentionMode::Bidirectional);
    const auto dec = build_lm<float>(cfg, 62, AttentionMode::Causal);
    auto ed = build_encoder_decoder(enc, dec, 63);
    // Sharpen the decoder so greedy choices are well separated.
    for (auto& v : ed.parameters()["decoder.tok_emb"].values) v *= 40.0f;
    const TokenSequence noisy{kBos, 7, 12, 20, kEos};
    GenerationOptions greedy;
    greedy.max_len = 8;
    Rng unused(0);
    const auto g = generate(ed, noisy, greedy, unused);
    GenerationOptions cold = greedy;
    cold.mode = DecodeMode::Sample;
    cold.temperature = 0.01;
    Rng rng(64);
    std::size_t steps = 0, agree = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = generate(ed, noisy, cold, rng);
        for (std::size_t t = 1; t < std::min(s.size(), g.size()); ++t) {
            ++steps;
            if (s[t] != g[t]) break;
            ++agree;
        }
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(steps) >= 0.99);
}

TEST_CASE("checkpoint roundtrip") {
    const auto dir = std::filesystem::temp_directory_path() / "sf_ckpt_test";
    std::filesystem::create_directories(dir);
    auto lm = build_lm<float>(tiny(), 71, AttentionMode::Causal);
    Adam<float> adam({}, lm.parameters());
    auto grads = lm.parameters().zeros_like();
    const std::vector<TokenSequence> batch{{kBos, 5, 6, kEos}};
    clm_loss<float>(lm, batch, {&grads, nullptr, 1.0});
    adam.step(lm.parameters(), grads);
    save_lm(dir / "lm.ckpt", lm, {{"style.label", "upper"}, {"train.step", "1"}}, &adam.state());

    const auto ck = load_checkpoint(dir / "lm.ckpt");
    CHECK(ck.meta.at("style.label") == "upper");
    CHECK(ck.meta.at("model.attention_mode") == "causal");
    const auto back = lm_from_checkpoint(ck);
    CHECK(back.parameters().hash() == lm.parameters().hash());
    CHECK(back.config() == lm.config());
    CHECK(std::abs(clm_loss(back, batch) - clm_loss(lm, batch)) <= 1e-6);
    REQUIRE(ck.optimizer.has_value());
    CHECK(ck.optimizer->step == 1);
    CHECK(ck.optimizer->m.hash() == adam.state().m.hash());
    CHECK(read_checkpoint_metadata(dir / "lm.ckpt").at("model.kind") == "lm");
    CHECK_THROWS_AS(encoder_decoder_from_checkpoint(ck), IncompatibleError);

    const auto enc = build_lm<float>(tiny(), 1, AttentionMode::Bidirectional);
    const auto ed = build_encoder_decoder(enc, lm, 2);
    save_encoder_decoder(dir / "ed.ckpt", ed);
    const auto ed_back = encoder_decoder_from_checkpoint(load_checkpoint(dir / "ed.ckpt"));
    CHECK(ed_back.parameters().hash() == ed.parameters().hash());
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("adam first step and clipping") {
    ParameterSet<double> p;
    p.add("w", {3});
    p["w"].values = {1.0, -2.0, 0.5};
    auto g = p.zeros_like();
    g["w"].values = {0.3, -0.4, 0.0};
    AdamConfig cfg;
    cfg.lr = 0.01;
    cfg.clip_norm = 0.0;
    Adam<double> adam(cfg, p);
    CHECK(adam.step(p, g) == doctest::Approx(0.5));
    // Bias-corrected first step moves each coordinate by lr * sign(g).
    CHECK(p["w"].values[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p["w"].values[1] == doctest::Approx(-1.99).epsilon(1e-6));
    CHECK(p["w"].values[2] == 0.5);

    cfg.clip_norm = 0.1;
    Adam<double> clipped(cfg, p);
    g["w"].values = {0.3, -0.4, 0.0};
    CHECK(clipped.step(p, g) == doctest::Approx(0.5));
    CHECK(g["w"].values[0] == doctest::Approx(0.06));
}
