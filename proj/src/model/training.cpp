// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "styleforge/error.hpp"
#include "styleforge/model/losses.hpp"

namespace styleforge::model {

DivergenceGuard::DivergenceGuard(double factor, std::size_t window, double floor)
    : factor_(factor), window_(std::max<std::size_t>(window, 1)), floor_(floor) {}

void DivergenceGuard::observe(double loss) {
    if (!std::isfinite(loss)) throw DivergenceError("loss became non-finite");
    if (recent_.size() < window_) {
        recent_.push_back(loss);
    } else {
        recent_[next_] = loss;
    }
    next_ = (next_ + 1) % window_;
    if (recent_.size() < window_) return;
    const double mean = std::accumulate(recent_.begin(), recent_.end(), 0.0) / static_cast<double>(window_);
    if (!has_ref_) {
        ref_ = mean;
        has_ref_ = true;
        return;
    }
    const double limit = factor_ * std::max(std::abs(ref_), floor_);
    if (std::abs(mean) > limit) {
        std::ostringstream msg;
        msg << "windowed loss " << mean << " exceeds " << factor_ << "x the initial value " << ref_;
        throw DivergenceError(msg.str());
    }
}

BatchSchedule::BatchSchedule(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed)
    : n_(corpus_size), batch_size_(batch_size), seed_(seed) {
    if (n_ == 0) throw ConfigError("training corpus is empty");
    if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
    steps_per_epoch_ = (n_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> BatchSchedule::batch(std::size_t step) {
    const std::size_t epoch = step / steps_per_epoch_;
    if (epoch != epoch_) {
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), 0);
        Rng rng(seed_ * 0x9E3779B97F4A7C15ULL + epoch);
        std::shuffle(perm_.begin(), perm_.end(), rng.engine());
        epoch_ = epoch;
    }
    const std::size_t begin = (step % steps_per_epoch_) * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, n_);
    return {perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(end)};
}

Rng step_rng(std::uint64_t seed, std::size_t step, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return Rng((static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
}

std::size_t MlmTrainConfig::total_steps(std::size_t corpus_size) const {
    if (max_steps > 0) return max_steps;
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    return epochs * ((corpus_size + batch_size - 1) / batch_size);
}

std::vector<corpus::MlmSample> fixed_mlm_batch(std::span<const TokenSequence> sentences,
                                               const corpus::NoiseConfig& noise, std::size_t vocab_size,
                                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<corpus::MlmSample> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(corpus::apply_mlm_mask(s, noise, vocab_size, rng));
    return out;
}

void pretrain_mlm(LanguageModel<float>& lm, std::span<const TokenSequence> corpus, const corpus::NoiseConfig& noise,
                  const MlmTrainConfig& cfg, Adam<float>& optimizer, std::size_t start_step,
                  const StepCallback& on_step) {
    if (lm.mode() != AttentionMode::Bidirectional) throw ModeError("MLM pretraining needs a bidirectional model");
    noise.validate();
    BatchSchedule schedule(corpus.size(), cfg.batch_size, cfg.seed);
    const std::size_t total = cfg.total_steps(corpus.size());
    DivergenceGuard guard;
    auto grads = lm.parameters().zeros_like();
    for (std::size_t step = start_step; step < total; ++step) {
        Rng mask_rng = step_rng(cfg.seed, step, 1);
        Rng dropout_rng = step_rng(cfg.seed, step, 2);
        std::vector<corpus::MlmSample> batch;
        for (std::size_t i : schedule.batch(step)) {
            auto s = corpus::apply_mlm_mask(corpus[i], noise, lm.config().vocab_size, mask_rng);
            if (!s.targets.empty()) batch.push_back(std::move(s));
        }
        if (batch.empty()) continue;
        grads.zero();
        const double loss = mlm_loss<float>(lm, batch, {&grads, &dropout_rng, 1.0});
        guard.observe(loss);
        const double norm = optimizer.step(lm.parameters(), grads);
        if (on_step) on_step({step + 1, loss, norm});
    }
}

}  // namespace styleforge::model
