// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "styleforge/model/tensor.hpp"

namespace styleforge::model {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Global gradient-norm clip; 0 disables.
    double clip_norm = 1.0;
};

template <typename T>
struct AdamState {
    ParameterSet<T> m;
    ParameterSet<T> v;
    std::size_t step = 0;
};

template <typename T>
class Adam {
public:
    Adam(AdamConfig cfg, const ParameterSet<T>& like);

    /// Applies one update and returns the pre-clip gradient norm. `grads` is
    /// rescaled in place when clipping kicks in.
    double step(ParameterSet<T>& params, ParameterSet<T>& grads);

    const AdamState<T>& state() const { return state_; }
    void set_state(AdamState<T> state) { state_ = std::move(state); }
    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    AdamConfig cfg_;
    AdamState<T> state_;
};

}  // namespace styleforge::model
