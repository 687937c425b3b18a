#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csrda/tensor.hpp"

namespace csrda::metrics {

// All metrics run in double precision. `gt` must be binary (exactly 0 or 1);
// DataError otherwise. Thresholded variants binarize with pred > t over
// t = i/255, i = 0..255; the adaptive threshold is min(1, 2 mean(pred)).

struct ThresholdScores {
    double ad = 0.0;
    double mn = 0.0;
    double mx = 0.0;
};

inline constexpr double kFBeta2 = 0.3;
inline constexpr int kThresholds = 256;

double mae(const Plane<double>& pred, const Plane<double>& gt);
ThresholdScores f_measure(const Plane<double>& pred, const Plane<double>& gt);
ThresholdScores e_measure(const Plane<double>& pred, const Plane<double>& gt);
double s_measure(const Plane<double>& pred, const Plane<double>& gt);
double weighted_f_measure(const Plane<double>& pred, const Plane<double>& gt);

// Adaptive binarization threshold.
double adaptive_threshold(const Plane<double>& pred);

// F_beta with beta^2 = 0.3 of one binarization; 0 when undefined.
double f_beta_at(const Plane<double>& pred, const Plane<double>& gt, double threshold);
double e_measure_at(const Plane<double>& pred, const Plane<double>& gt, double threshold);

// Exact Euclidean distance from each pixel to the nearest foreground pixel,
// plus that pixel's row-major index (ties: smallest index).
struct DistanceField {
    Plane<double> distance;
    std::vector<int> nearest;
};
DistanceField distance_to_foreground(const Plane<double>& mask);

struct MetricsReport {
    double s_alpha = 0.0;
    double f_beta_w = 0.0;
    double e_ad = 0.0, e_mn = 0.0, e_mx = 0.0;
    double f_ad = 0.0, f_mn = 0.0, f_mx = 0.0;
    double mae = 0.0;
    int n_images = 0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    // One header line and one value line, in the column order
    // S_a, F_b^w, E_ad, E_mn, E_mx, F_ad, F_mn, F_mx, M.
    std::string table(const std::string& row_label = "") const;
};

MetricsReport evaluate_image(const Plane<double>& pred, const Plane<double>& gt);

// Ordered mean of per-image reports.
MetricsReport average(const std::vector<MetricsReport>& per_image);

// Converts float masks; gt is binarized at 0.5.
Plane<double> as_prediction(const SoftMask& mask);
Plane<double> binarize_gt(const SoftMask& mask);

}  // namespace csrda::metrics
