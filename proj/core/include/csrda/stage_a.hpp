#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "csrda/augment.hpp"
#include "csrda/backbone.hpp"
#include "csrda/dataset.hpp"
#include "csrda/losses.hpp"
#include "csrda/optimizer.hpp"

namespace csrda {

// Target-side consistency term: the ES loss, or plain BCE against the
// teacher's soft output (the mean-teacher baseline).
enum class Consistency { es, bce };

struct StageAConfig {
    double lambda_ema = 0.996;
    int epochs = 40;
    int batch_size = 16;
    double lr = 1e-4;
    int lr_drop_epoch = 30;
    double lr_drop_factor = 10.0;
    // Leading epochs that see only the labeled set (no consistency term).
    int warmup_epochs = 0;
    ESConfig es;
    Consistency consistency = Consistency::es;
    augment::AugConfig augment;  // output size doubles as the training size
    std::uint64_t seed = 0;

    void validate() const;
    // Learning rate for a 0-based epoch.
    double lr_at(int epoch) const noexcept { return epoch >= lr_drop_epoch ? lr / lr_drop_factor : lr; }
};

// p' = lambda * teacher + (1 - lambda) * student, elementwise.
template <typename T>
ParamSet<T> ema_update(const ParamSet<T>& teacher, const ParamSet<T>& student, double lambda_ema);

// Seed of the paired augmentation for batch slot `slot` (source slots first,
// then target slots) at a 1-based iteration.
std::uint64_t augmentation_seed(std::uint64_t stage_seed, std::int64_t iteration, std::size_t slot);

struct StepResult {
    ModelState student;
    ModelState teacher;
    LossReport report;
};

// One optimizer step on the student followed by the EMA teacher update.
// `iteration` is 1-based and seeds the augmentations; `moments` is advanced.
StepResult train_step(const Backbone<float>& backbone, const ModelState& student, const ModelState& teacher,
                      AdamMoments<float>& moments, const std::vector<const Sample*>& source_batch,
                      const std::vector<const Sample*>& target_batch, const StageAConfig& cfg,
                      std::int64_t iteration, double lr);

struct LogRow {
    std::int64_t iteration = 0;
    int epoch = 0;
    double ce = 0, ea = 0, sw = 0, es = 0, total = 0;
    double lr = 0;
};

struct StageAOptions {
    int cycle = 1;
    std::optional<std::filesystem::path> checkpoint_dir;
    bool keep_last_checkpoint_only = false;
    std::optional<std::filesystem::path> log_csv;  // appended, header written when new
    std::function<void(int epoch, const LogRow& last)> on_epoch;
};

struct StageAResult {
    ModelState student;
    ModelState teacher;
    std::vector<LogRow> log;
};

// Epochs x steps with independently shuffled, cycled streams over both sets.
// With an empty target set every step is a supervised batch of
// `batch_size`; otherwise each step takes batch_size/2 from each side and an
// epoch covers the larger set once.
StageAResult run_stage_a(const Backbone<float>& backbone, ModelState student, ModelState teacher,
                         const DomainDataset& labeled, const DomainDataset& target, const StageAConfig& cfg,
                         const StageAOptions& options = {});

}  // namespace csrda
