#pragma once

#include <cstdint>

#include "csrda/model_state.hpp"

namespace csrda {

struct AdamStep {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t iteration = 1;  // 1-based, drives bias correction
};

template <typename T>
struct AdamMoments {
    ParamSet<T> first;
    ParamSet<T> second;

    static AdamMoments fresh(const ParamSet<T>& like) { return {like.zeros_like(), like.zeros_like()}; }
};

// Adaptive-moment update with bias correction. Updates `moments` in place and
// returns the new parameters; the learning-rate schedule is the caller's.
template <typename T>
ParamSet<T> optimizer_step(const ParamSet<T>& state, const ParamSet<T>& gradients, AdamMoments<T>& moments,
                           const AdamStep& step);

}  // namespace csrda
