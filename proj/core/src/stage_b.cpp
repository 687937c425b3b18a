#include "csrda/stage_b.hpp"

#include <tbb/parallel_for.h>

#include <spdlog/spdlog.h>

namespace csrda {

void CLSConfig::validate() const {
    if (!(mu > 0)) throw ConfigError("cls: mu must be > 0");
    if (!(tau >= 0 && tau <= 1)) throw ConfigError("cls: tau must lie in [0,1]");
}

nlohmann::json SelectionReport::to_json() const {
    nlohmann::json j;
    j["cycle"] = cycle;
    j["mu"] = mu;
    j["tau"] = tau;
    nlohmann::json losses = nlohmann::json::object();
    for (const auto& s : per_sample_loss) losses[s.id] = s.es;
    j["per_sample_loss"] = losses;
    j["mean_loss"] = mean_loss;
    j["threshold"] = threshold;
    j["loss_selected_ids"] = loss_selected_ids;
    j["selected_ids"] = selected_ids;
    j["dropped_low_confidence_ids"] = dropped_low_confidence_ids;
    nlohmann::json conf = nlohmann::json::object();
    for (const auto& s : confidence) conf[s.id] = s.es;
    j["confidence"] = conf;
    return j;
}

std::vector<SampleScore> score_target_set(const Backbone<float>& backbone, const ModelState& student,
                                          const ModelState& teacher, const DomainDataset& target_set,
                                          const ESConfig& es_cfg) {
    require_compatible(student, teacher, "score_target_set");
    std::vector<SampleScore> out(target_set.size());
    tbb::parallel_for(std::size_t{0}, target_set.size(), [&](std::size_t i) {
        const Sample& s = target_set[i];
        const auto p = sigmoid(backbone.forward(student, s.image.pixels()));
        const auto q = sigmoid(backbone.forward(teacher, s.image.pixels()));
        out[i] = {s.id, es_loss(p, q, es_cfg).es};
    });
    return out;
}

SoftMask confidence_filter(const SoftMask& probabilities, double tau) {
    Plane<float> v = probabilities.values();
    for (auto& x : v.data) {
        if (x < tau) x = 0.0f;
    }
    return SoftMask(std::move(v));
}

Selection select_from_predictions(const std::vector<SampleScore>& scores,
                                  const std::vector<SoftMask>& teacher_probabilities,
                                  const DomainDataset& target_set, const CLSConfig& cfg, int cycle) {
    cfg.validate();
    if (scores.size() != target_set.size() || teacher_probabilities.size() != target_set.size()) {
        throw Error("select_confident: scores/predictions do not cover the target set");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].id != target_set[i].id) {
            throw DataError("select_confident: score order does not match target set at " + scores[i].id,
                            {scores[i].id});
        }
    }

    SelectionReport rep;
    rep.cycle = cycle;
    rep.mu = cfg.mu;
    rep.tau = cfg.tau;
    rep.per_sample_loss = scores;
    double sum = 0.0;
    for (const auto& s : scores) sum += s.es;
    rep.mean_loss = scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
    rep.threshold = cfg.mu * rep.mean_loss;

    std::vector<Sample> kept;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!(scores[i].es <= rep.threshold)) continue;
        rep.loss_selected_ids.push_back(scores[i].id);
        SoftMask filtered = confidence_filter(teacher_probabilities[i], cfg.tau);
        double mass = 0.0;
        std::size_t survivors = 0;
        for (float v : filtered.values().data) {
            if (v > 0.0f) {
                mass += v;
                ++survivors;
            }
        }
        const double confidence = survivors ? mass / static_cast<double>(survivors) : 0.0;
        rep.confidence.push_back({scores[i].id, confidence});
        if (survivors == 0 || confidence < cfg.tau) {
            rep.dropped_low_confidence_ids.push_back(scores[i].id);
            continue;
        }
        const Sample& src = target_set[i];
        Sample s{"cl" + std::to_string(cycle) + "/" + src.id, src.image, std::move(filtered),
                 DomainTag::confident_pseudo};
        rep.selected_ids.push_back(src.id);
        kept.push_back(std::move(s));
    }
    if (kept.empty()) spdlog::warn("cycle {}: confident label selection kept no samples", cycle);
    return {DomainDataset("d_cl" + std::to_string(cycle), std::move(kept)), std::move(rep)};
}

Selection select_confident(const Backbone<float>& backbone, const std::vector<SampleScore>& scores,
                           const ModelState& teacher, const DomainDataset& target_set, const CLSConfig& cfg,
                           int cycle) {
    std::vector<SoftMask> probs(target_set.size());
    tbb::parallel_for(std::size_t{0}, target_set.size(), [&](std::size_t i) {
        probs[i] = SoftMask(sigmoid(backbone.forward(teacher, target_set[i].image.pixels())));
    });
    return select_from_predictions(scores, probs, target_set, cfg, cycle);
}

DomainDataset build_evolving_domain(const DomainDataset& source, const DomainDataset& d_cl) {
    return merge_datasets(source, d_cl, "evolving");
}

}  // namespace csrda
