// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/optimizer.hpp"

#include <cmath>

#include "styleforge/error.hpp"

namespace styleforge::model {

template <typename T>
Adam<T>::Adam(AdamConfig cfg, const ParameterSet<T>& like)
    : cfg_(cfg), state_{like.zeros_like(), like.zeros_like(), 0} {
    if (!(cfg_.lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (cfg_.clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
}

template <typename T>
double Adam<T>::step(ParameterSet<T>& params, ParameterSet<T>& grads) {
    if (params.size() != grads.size() || params.size() != state_.m.size()) {
        throw IncompatibleError("optimizer state does not match the parameters");
    }
    double sq = 0.0;
    for (const auto& e : grads.entries()) {
        for (T g : e.values) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    const double clip = (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;

    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t);
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params.at(i).values;
        auto& g = grads.at(i).values;
        auto& m = state_.m.at(i).values;
        auto& v = state_.v.at(i).values;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = static_cast<double>(g[j]) * clip;
            g[j] = static_cast<T>(gj);
            const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gj;
            const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double upd = cfg_.lr * (mj / c1) / (std::sqrt(vj / c2) + cfg_.eps);
            p[j] = static_cast<T>(static_cast<double>(p[j]) - upd);
        }
    }
    return norm;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace styleforge::model
