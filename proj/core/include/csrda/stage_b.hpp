#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrda/backbone.hpp"
#include "csrda/dataset.hpp"
#include "csrda/losses.hpp"

namespace csrda {

struct CLSConfig {
    double mu = 0.8;
    double tau = 0.4;

    static CLSConfig s2c() { return {0.8, 0.4}; }
    static CLSConfig c2c() { return {1.0, 0.5}; }
    void validate() const;
};

struct SampleScore {
    std::string id;
    double es = 0.0;
};

struct SelectionReport {
    int cycle = 0;
    double mu = 0.0;
    double tau = 0.0;
    std::vector<SampleScore> per_sample_loss;  // target-set order
    double mean_loss = 0.0;
    double threshold = 0.0;
    std::vector<std::string> loss_selected_ids;
    std::vector<std::string> selected_ids;
    std::vector<std::string> dropped_low_confidence_ids;
    std::vector<SampleScore> confidence;  // mean surviving probability per loss-selected sample

    nlohmann::json to_json() const;
};

// Per-sample ES loss of the student against the teacher on un-augmented
// target images. Neither model is modified.
std::vector<SampleScore> score_target_set(const Backbone<float>& backbone, const ModelState& student,
                                          const ModelState& teacher, const DomainDataset& target_set,
                                          const ESConfig& es_cfg);

// Zeroes every pixel below tau.
SoftMask confidence_filter(const SoftMask& probabilities, double tau);

struct Selection {
    DomainDataset d_cl;
    SelectionReport report;
};

// Selection from precomputed teacher probabilities (aligned with
// `target_set`). Survivors get ids "cl<cycle>/<id>".
Selection select_from_predictions(const std::vector<SampleScore>& scores,
                                  const std::vector<SoftMask>& teacher_probabilities,
                                  const DomainDataset& target_set, const CLSConfig& cfg, int cycle);

Selection select_confident(const Backbone<float>& backbone, const std::vector<SampleScore>& scores,
                           const ModelState& teacher, const DomainDataset& target_set, const CLSConfig& cfg,
                           int cycle);

// D_s followed by D_cl.
DomainDataset build_evolving_domain(const DomainDataset& source, const DomainDataset& d_cl);

}  // namespace csrda
