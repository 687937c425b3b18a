#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csrda/config.hpp"
#include "csrda/metrics.hpp"
#include "csrda/stage_b.hpp"

namespace csrda {

// Every dataset directory a run reads, tagged with the phase that read it.
struct DataAccess {
    std::string phase;  // "train" or "eval"
    std::filesystem::path path;
};

class PathAudit {
public:
    void record(std::string phase, std::filesystem::path path);
    const std::vector<DataAccess>& accesses() const noexcept { return accesses_; }
    bool read_during(const std::filesystem::path& path, const std::string& phase) const;
    // Throws Error if `path` was read during a "train" phase.
    void require_untouched_in_training(const std::filesystem::path& path) const;

private:
    std::vector<DataAccess> accesses_;
};

struct CycleOutcome {
    int cycle = 0;
    std::size_t labeled_size = 0;                 // |D_s| or |D^_s| used by this cycle's Stage A
    std::optional<metrics::MetricsReport> test;   // teacher on the target test set
};

struct RunResult {
    ModelState teacher;
    ModelState student;
    std::vector<CycleOutcome> cycles;
    std::vector<SelectionReport> selections;
    metrics::MetricsReport final_test;
    std::optional<metrics::MetricsReport> source_heldout;
    PathAudit audit;
};

// Stage A on (D_s, D_t); then for each further cycle Stage B with the
// frozen models, D^_s = D_s + newest D_cl, and Stage A again. The final
// teacher is evaluated on the target test set. Artifacts land in
// paths.output_dir.
RunResult run_csrda(const ExperimentConfig& cfg);

enum class BaselineMode { source_only, mean_teacher };
BaselineMode parse_baseline_mode(const std::string& s);

// source_only: supervised training on D_s alone (the target training set is
// never read). mean_teacher: one Stage A with BCE consistency.
RunResult run_baseline(const ExperimentConfig& cfg, BaselineMode mode);

// "lo:hi:step" (inclusive, tolerant to rounding) or a comma list.
std::vector<double> parse_sweep_values(const std::string& spec);

struct SweepPoint {
    double value = 0.0;
    metrics::MetricsReport final_test;
};

// One run_csrda per value of `param` (a dotted config key or a short name:
// alpha, beta, delta, mu, tau, lambda), each under output_dir/<param>=<value>.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& param,
                                  const std::vector<double>& values);

}  // namespace csrda
