#pragma once

#include <vector>

#include "csrda/tensor.hpp"

namespace csrda {

struct ESConfig {
    double alpha = 0.9;
    double beta = 0.3;
    double delta = 0.5;
    double l1_eps = 1e-8;    // smoothing of |.| in the edge-alignment gradient only
    double prob_eps = 1e-7;  // probability clamp inside cross-entropy terms

    static ESConfig s2c() { return {0.9, 0.3, 0.5}; }
    static ESConfig c2c() { return {0.7, 0.3, 0.5}; }
    void validate() const;
};

// Loss value plus its gradient with respect to the logits that produced the
// (first) probability argument.
template <typename T>
struct LossGrad {
    double value = 0.0;
    Plane<T> grad;
};

template <typename T>
struct ESResult {
    double ea = 0.0;
    double sw = 0.0;
    double es = 0.0;
    Plane<T> grad;
};

// Batch aggregate written to the training log.
struct LossReport {
    double ce = 0.0;
    double ea = 0.0;
    double sw = 0.0;
    double es = 0.0;
    double total = 0.0;
    std::vector<double> per_sample_es;
};

// Mean binary cross-entropy; soft targets allowed. grad = (p - t) / N.
template <typename T>
LossGrad<T> bce_loss(const Plane<T>& pred, const Plane<T>& target, double prob_eps = 1e-7);

// Sobel gradient magnitude with replicate padding.
template <typename T>
Plane<T> sobel_edges(const Plane<T>& mask);

// Mean |sobel(student) - sobel(teacher)|; the teacher side is constant.
template <typename T>
LossGrad<T> edge_alignment_loss(const Plane<T>& student, const Plane<T>& teacher, double l1_eps = 1e-8);

// Mean of (y + delta) * BCE(p, y) with y held constant.
template <typename T>
LossGrad<T> saliency_weighted_loss(const Plane<T>& student, const Plane<T>& pseudo, double delta,
                                   double prob_eps = 1e-7);

template <typename T>
ESResult<T> es_loss(const Plane<T>& student, const Plane<T>& teacher, const ESConfig& cfg);

}  // namespace csrda
