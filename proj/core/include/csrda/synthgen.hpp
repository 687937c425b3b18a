#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "csrda/dataset.hpp"

namespace csrda::synth {

struct GenConfig {
    std::uint64_t seed = 1;
    int count = 1;
    int height = 64;
    int width = 64;
    // 0 = target objects follow the source pairing rule; 1 = target objects
    // are pure jittered copies of the surrounding background.
    double gap = 0.8;
    int texture_bank = 8;

    void validate() const;
};

void to_json(nlohmann::json& j, const GenConfig& cfg);
void from_json(const nlohmann::json& j, GenConfig& cfg);

// Labeled "synthetic" domain: objects carry a texture from a family unrelated
// to the background. Ids are `src<seed>_<index>`.
DomainDataset generate_source(const GenConfig& cfg);

// "Real" camouflage domain: objects are a blend of the unrelated texture and
// a jittered copy of the local background, weighted by `gap`. Labeled
// samples (test split) are tagged `source` since the label is ground truth.
// Ids are `tgt<seed>_<index>`.
DomainDataset generate_target(const GenConfig& cfg, bool with_labels);

// Object/background appearance distance in the band of `band` pixels on
// either side of the mask boundary: per-channel |mean difference| +
// |std difference|, averaged over channels.
double boundary_texture_distance(const ImageTensor& image, const SoftMask& mask, int band = 5);

double foreground_fraction(const SoftMask& mask);

// The four splits of a toy experiment. Each split draws from its own seed
// namespace derived from `base.seed`, so ids never collide.
struct SplitPlan {
    GenConfig base;
    int source = 200;
    int source_test = 100;
    int target_train = 200;
    int target_test = 100;
};

std::uint64_t split_seed(std::uint64_t master, int split_index);

// Writes <out>/{source,source_test,target_train,target_test} in the dataset
// layout (target_train without masks) plus gen_manifest.json.
void write_splits(const SplitPlan& plan, const std::filesystem::path& out);

}  // namespace csrda::synth
