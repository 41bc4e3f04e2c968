// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/losses.hpp"

#include "scoring.hpp"
#include "styleforge/error.hpp"

namespace styleforge::model {

namespace {

void require_mode(AttentionMode have, AttentionMode want, const char* loss) {
    if (have != want) {
        throw ModeError(std::string(loss) + " needs a " + std::string(to_string(want)) + " model, got " +
                        std::string(to_string(have)));
    }
}

}  // namespace

template <typename T>
double mlm_loss(const LanguageModel<T>& lm, std::span<const corpus::MlmSample> batch, PassOptions<T> opts) {
    require_mode(lm.mode(), AttentionMode::Bidirectional, "mlm_loss");
    std::size_t total = 0;
    for (const auto& s : batch) total += s.targets.size();
    if (total == 0) throw DegenerateInputError("MLM batch has no target positions");

    const double weight = opts.grad_scale / static_cast<double>(total);
    double nll = 0.0;
    std::vector<detail::ScoredTarget> targets;
    for (const auto& s : batch) {
        if (s.targets.empty()) continue;
        targets.clear();
        for (const auto& t : s.targets) targets.emplace_back(t.position, t.original);
        detail::ScoreSpec<T> spec{nullptr, nullptr, opts.grads, opts.dropout_rng, weight, {}};
        nll += detail::scored_nll<T>(lm.parameters(), lm.refs(), lm.config(), lm.mode(), s.corrupted, targets, spec);
    }
    return nll / static_cast<double>(total);
}

template <typename T>
double clm_loss(const LanguageModel<T>& lm, std::span<const TokenSequence> batch, PassOptions<T> opts) {
    require_mode(lm.mode(), AttentionMode::Causal, "clm_loss");
    std::vector<TokenSequence> inputs(batch.size());
    std::vector<std::vector<detail::ScoredTarget>> targets(batch.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        detail::causal_split(batch[i], inputs[i], targets[i]);
        total += targets[i].size();
    }
    if (total == 0) throw DegenerateInputError("CLM batch is empty");

    const double weight = opts.grad_scale / static_cast<double>(total);
    double nll = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        detail::ScoreSpec<T> spec{nullptr, nullptr, opts.grads, opts.dropout_rng, weight, {}};
        nll += detail::scored_nll<T>(lm.parameters(), lm.refs(), lm.config(), lm.mode(), inputs[i], targets[i], spec);
    }
    return nll / static_cast<double>(total);
}

template <typename T>
double sequence_log_prob(const LanguageModel<T>& lm, std::span<const TokenId> tokens) {
    require_mode(lm.mode(), AttentionMode::Causal, "sequence_log_prob");
    TokenSequence input;
    std::vector<detail::ScoredTarget> targets;
    detail::causal_split(tokens, input, targets);
    return -detail::scored_nll<T>(lm.parameters(), lm.refs(), lm.config(), lm.mode(), input, targets, {});
}

template <typename T>
NllTotals corpus_nll(const LanguageModel<T>& lm, std::span<const TokenSequence> corpus) {
    require_mode(lm.mode(), AttentionMode::Causal, "corpus_nll");
    NllTotals out;
    TokenSequence input;
    std::vector<detail::ScoredTarget> targets;
    for (const auto& s : corpus) {
        detail::causal_split(s, input, targets);
        out.nll += detail::scored_nll<T>(lm.parameters(), lm.refs(), lm.config(), lm.mode(), input, targets, {});
        out.tokens += targets.size();
    }
    return out;
}

template <typename T>
double dae_loss(const EncoderDecoder<T>& encdec, std::span<const DaePair> batch, PassOptions<T> opts) {
    if (batch.empty()) throw DegenerateInputError("DAE batch is empty");
    const double weight = opts.grad_scale / static_cast<double>(batch.size());
    double sum = 0.0;
    for (const auto& p : batch) {
        sum += detail::encdec_nll<T>(encdec, p.noisy, p.original, opts.grads, opts.dropout_rng, weight);
    }
    return sum / static_cast<double>(batch.size());
}

template <typename T>
double dae_loss(const EncoderDecoder<T>& encdec, std::span<const TokenId> noisy, std::span<const TokenId> original,
                PassOptions<T> opts) {
    const DaePair pair{noisy, original};
    return dae_loss<T>(encdec, std::span<const DaePair>(&pair, 1), opts);
}

#define STYLEFORGE_INSTANTIATE(T)                                                                               \
    template double mlm_loss<T>(const LanguageModel<T>&, std::span<const corpus::MlmSample>, PassOptions<T>);  \
    template double clm_loss<T>(const LanguageModel<T>&, std::span<const TokenSequence>, PassOptions<T>);      \
    template double sequence_log_prob<T>(const LanguageModel<T>&, std::span<const TokenId>);                   \
    template NllTotals corpus_nll<T>(const LanguageModel<T>&, std::span<const TokenSequence>);                  \
    template double dae_loss<T>(const EncoderDecoder<T>&, std::span<const DaePair>, PassOptions<T>);           \
    template double dae_loss<T>(const EncoderDecoder<T>&, std::span<const TokenId>, std::span<const TokenId>,  \
                                PassOptions<T>);

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::model
