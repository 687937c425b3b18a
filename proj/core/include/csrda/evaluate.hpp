#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrda/metrics.hpp"

namespace csrda {

// Per-image metrics over stem-paired PNG masks, averaged in stem order.
// Unpaired stems raise DataError listing them.
metrics::MetricsReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

// In-memory variant: predictions and ground truths aligned by index.
metrics::MetricsReport evaluate_masks(const std::vector<SoftMask>& predictions, const std::vector<SoftMask>& gts);

// {metric: value, ..., n_images, pred_dir, gt_dir, timestamp}
nlohmann::json eval_report_json(const metrics::MetricsReport& report, const std::string& pred_dir,
                                const std::string& gt_dir);

std::string utc_timestamp();

}  // namespace csrda
