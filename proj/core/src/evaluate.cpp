#include "csrda/evaluate.hpp"

#include <tbb/parallel_for.h>

#include <chrono>
#include <ctime>
#include <map>

#include "csrda/dataset.hpp"

namespace csrda {

namespace {

std::map<std::string, std::filesystem::path> pngs_by_stem(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string(), {dir.string()});
    std::map<std::string, std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") out[e.path().stem().string()] = e.path();
    }
    return out;
}

}  // namespace

metrics::MetricsReport evaluate_masks(const std::vector<SoftMask>& predictions, const std::vector<SoftMask>& gts) {
    if (predictions.size() != gts.size()) throw Error("evaluate_masks: prediction/ground-truth count mismatch");
    std::vector<metrics::MetricsReport> per(predictions.size());
    tbb::parallel_for(std::size_t{0}, predictions.size(), [&](std::size_t i) {
        per[i] = metrics::evaluate_image(metrics::as_prediction(predictions[i]), metrics::binarize_gt(gts[i]));
    });
    return metrics::average(per);
}

metrics::MetricsReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir) {
    const auto preds = pngs_by_stem(pred_dir);
    const auto gts = pngs_by_stem(gt_dir);
    std::vector<std::string> unpaired;
    for (const auto& [stem, _] : preds) {
        if (!gts.contains(stem)) unpaired.push_back(stem);
    }
    for (const auto& [stem, _] : gts) {
        if (!preds.contains(stem)) unpaired.push_back(stem);
    }
    if (!unpaired.empty()) {
        std::string list;
        for (const auto& s : unpaired) list += (list.empty() ? "" : ", ") + s;
        throw DataError("unpaired prediction/ground-truth stems: " + list, unpaired);
    }
    if (preds.empty()) throw DataError("no PNG masks in " + pred_dir.string(), {pred_dir.string()});

    std::vector<SoftMask> p, g;
    for (const auto& [stem, path] : preds) {
        p.push_back(load_mask(path));
        g.push_back(load_mask(gts.at(stem)));
        if (!p.back().same_shape(g.back())) throw ShapeError("size mismatch between prediction and ground truth: " + stem);
    }
    return evaluate_masks(p, g);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json eval_report_json(const metrics::MetricsReport& report, const std::string& pred_dir,
                                const std::string& gt_dir) {
    nlohmann::json j = report.to_json();
    j["pred_dir"] = pred_dir;
    j["gt_dir"] = gt_dir;
    j["timestamp"] = utc_timestamp();
    return j;
}

}  // namespace csrda
