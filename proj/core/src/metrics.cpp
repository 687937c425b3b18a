#include "csrda/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace csrda::metrics {

namespace {

constexpr double kEps = 2.220446049250313e-16;

void require_pair(const Plane<double>& pred, const Plane<double>& gt, const char* what) {
    if (!pred.same_shape(gt) || pred.data.empty()) throw ShapeError(std::string(what) + ": shape mismatch");
}

void require_binary(const Plane<double>& gt, const char* what) {
    for (double v : gt.data) {
        if (v != 0.0 && v != 1.0) throw DataError(std::string(what) + ": ground truth is not binary");
    }
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Highest i in [0,255] with i/255 < p, or -1.
int threshold_bin(double p) {
    int i = static_cast<int>(std::floor(p * 255.0));
    i = std::clamp(i, -1, 255);
    while (i < 255 && (i + 1) / 255.0 < p) ++i;
    while (i >= 0 && i / 255.0 >= p) --i;
    return i;
}

double f_from_counts(double tp, double predicted, double positives) {
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = positives > 0 ? tp / positives : 0.0;
    const double denom = kFBeta2 * precision + recall;
    return denom > 0 ? (1.0 + kFBeta2) * precision * recall / denom : 0.0;
}

// Enhanced alignment from the joint counts of (pred_b, gt).
double e_from_counts(double n11, double n10, double n01, double n00) {
    const double n = n11 + n10 + n01 + n00;
    const double gt_pos = n11 + n01;
    const double pred_pos = n11 + n10;
    if (gt_pos == 0) return 1.0 - pred_pos / n;
    if (gt_pos == n) return pred_pos / n;
    const double mp = pred_pos / n, mg = gt_pos / n;
    auto enhanced = [&](double pb, double g) {
        const double fp = pb - mp, fg = g - mg;
        const double denom = fg * fg + fp * fp;
        const double xi = denom > 0 ? 2.0 * fg * fp / denom : 0.0;
        return (xi + 1.0) * (xi + 1.0) / 4.0;
    };
    return (n11 * enhanced(1, 1) + n10 * enhanced(1, 0) + n01 * enhanced(0, 1) + n00 * enhanced(0, 0)) / n;
}

struct Counts {
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
};

Counts counts_at(const Plane<double>& pred, const Plane<double>& gt, double t) {
    Counts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool pb = pred.data[i] > t;
        const bool g = gt.data[i] > 0.5;
        (pb ? (g ? c.n11 : c.n10) : (g ? c.n01 : c.n00)) += 1.0;
    }
    return c;
}

// Counts for every threshold i/255 via cumulative histograms.
std::array<Counts, kThresholds> sweep_counts(const Plane<double>& pred, const Plane<double>& gt) {
    std::array<double, kThresholds + 1> fg{}, bg{};
    double total_fg = 0, total_bg = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int b = threshold_bin(pred.data[i]);
        const bool g = gt.data[i] > 0.5;
        (g ? total_fg : total_bg) += 1.0;
        if (b >= 0) (g ? fg : bg)[b] += 1.0;
    }
    std::array<Counts, kThresholds> out;
    double cum_fg = 0, cum_bg = 0;
    for (int i = kThresholds - 1; i >= 0; --i) {
        cum_fg += fg[i];
        cum_bg += bg[i];
        out[i] = {cum_fg, cum_bg, total_fg - cum_fg, total_bg - cum_bg};
    }
    return out;
}

double object_score(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const double x = mean_of(values);
    double var = 0.0;
    for (double v : values) var += (v - x) * (v - x);
    const double sigma = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const Plane<double>& pred, const Plane<double>& gt) {
    std::vector<double> fg, bg;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (gt.data[i] > 0.5) {
            fg.push_back(pred.data[i]);
        } else {
            bg.push_back(1.0 - pred.data[i]);
        }
    }
    const double u = static_cast<double>(fg.size()) / static_cast<double>(pred.size());
    return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

double region_ssim(const Plane<double>& pred, const Plane<double>& gt, int y0, int y1, int x0, int x1) {
    const double n = static_cast<double>(y1 - y0) * (x1 - x0);
    double mx = 0, my = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            mx += pred(y, x);
            my += gt(y, x);
        }
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const double dx = pred(y, x) - mx, dy = gt(y, x) - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
    }
    sxx /= (n - 1 + kEps);
    syy /= (n - 1 + kEps);
    sxy /= (n - 1 + kEps);
    const double a = 4.0 * mx * my * sxy;
    const double b = (mx * mx + my * my) * (sxx + syy);
    if (a != 0) return a / (b + kEps);
    if (b == 0) return 1.0;
    return 0.0;
}

double s_region(const Plane<double>& pred, const Plane<double>& gt) {
    const int h = gt.height, w = gt.width;
    double total = 0, sx = 0, sy = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = gt(y, x);
            total += g;
            sx += g * (x + 1);
            sy += g * (y + 1);
        }
    }
    // 1-based centroid; quadrants are [0,Y) x [0,X) etc.
    const int cx = static_cast<int>(std::lround(sx / total));
    const int cy = static_cast<int>(std::lround(sy / total));
    const double area = static_cast<double>(h) * w;
    const double w1 = static_cast<double>(cx) * cy / area;
    const double w2 = static_cast<double>(w - cx) * cy / area;
    const double w3 = static_cast<double>(cx) * (h - cy) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    double q = 0.0;
    auto add = [&](double weight, int y0, int y1, int x0, int x1) {
        if (y1 > y0 && x1 > x0) q += weight * region_ssim(pred, gt, y0, y1, x0, x1);
    };
    add(w1, 0, cy, 0, cx);
    add(w2, 0, cy, cx, w);
    add(w3, cy, h, 0, cx);
    add(w4, cy, h, cx, w);
    return q;
}

// 1-D squared distance transform of sampled function f (lower envelope of
// parabolas).
void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        double s = -inf;
        while (k >= 0) {
            const int p = v[k];
            s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -inf : s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d.begin(), d.end(), inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double diff = q - v[j];
        d[q] = diff * diff + f[v[j]];
    }
}

}  // namespace

double mae(const Plane<double>& pred, const Plane<double>& gt) {
    require_pair(pred, gt, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.data[i] - gt.data[i]);
    return s / static_cast<double>(pred.size());
}

double adaptive_threshold(const Plane<double>& pred) {
    double s = 0.0;
    for (double v : pred.data) s += v;
    return std::min(1.0, 2.0 * s / static_cast<double>(pred.size()));
}

double f_beta_at(const Plane<double>& pred, const Plane<double>& gt, double threshold) {
    require_pair(pred, gt, "f_measure");
    const Counts c = counts_at(pred, gt, threshold);
    return f_from_counts(c.n11, c.n11 + c.n10, c.n11 + c.n01);
}

double e_measure_at(const Plane<double>& pred, const Plane<double>& gt, double threshold) {
    require_pair(pred, gt, "e_measure");
    const Counts c = counts_at(pred, gt, threshold);
    return e_from_counts(c.n11, c.n10, c.n01, c.n00);
}

ThresholdScores f_measure(const Plane<double>& pred, const Plane<double>& gt) {
    require_pair(pred, gt, "f_measure");
    require_binary(gt, "f_measure");
    ThresholdScores out;
    out.ad = f_beta_at(pred, gt, adaptive_threshold(pred));
    out.mx = -1.0;
    for (const Counts& c : sweep_counts(pred, gt)) {
        const double f = f_from_counts(c.n11, c.n11 + c.n10, c.n11 + c.n01);
        out.mn += f / kThresholds;
        out.mx = std::max(out.mx, f);
    }
    return out;
}

ThresholdScores e_measure(const Plane<double>& pred, const Plane<double>& gt) {
    require_pair(pred, gt, "e_measure");
    require_binary(gt, "e_measure");
    ThresholdScores out;
    out.ad = e_measure_at(pred, gt, adaptive_threshold(pred));
    out.mx = -1.0;
    for (const Counts& c : sweep_counts(pred, gt)) {
        const double e = e_from_counts(c.n11, c.n10, c.n01, c.n00);
        out.mn += e / kThresholds;
        out.mx = std::max(out.mx, e);
    }
    return out;
}

double s_measure(const Plane<double>& pred, const Plane<double>& gt) {
    require_pair(pred, gt, "s_measure");
    require_binary(gt, "s_measure");
    double g = 0.0, p = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        g += gt.data[i];
        p += pred.data[i];
    }
    const double n = static_cast<double>(gt.size());
    if (g == 0) return 1.0 - p / n;
    if (g == n) return p / n;
    const double q = 0.5 * s_object(pred, gt) + 0.5 * s_region(pred, gt);
    return std::max(q, 0.0);
}

DistanceField distance_to_foreground(const Plane<double>& mask) {
    const int h = mask.height, w = mask.width;
    constexpr double inf = std::numeric_limits<double>::infinity();
    Plane<double> sq(h, w, inf);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.data[i] > 0.5) sq.data[i] = 0.0;
    }
    const int n = std::max(h, w);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < w; ++x) {
        f.resize(h);
        d.resize(h);
        for (int y = 0; y < h; ++y) f[y] = sq(y, x);
        dt1d(f, d, v, z);
        for (int y = 0; y < h; ++y) sq(y, x) = d[y];
    }
    for (int y = 0; y < h; ++y) {
        f.resize(w);
        d.resize(w);
        for (int x = 0; x < w; ++x) f[x] = sq(y, x);
        dt1d(f, d, v, z);
        for (int x = 0; x < w; ++x) sq(y, x) = d[x];
    }

    DistanceField out{Plane<double>(h, w), std::vector<int>(mask.size(), -1)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double d2 = sq(y, x);
            if (d2 == inf) {
                out.distance(y, x) = inf;
                continue;
            }
            const long long target = std::llround(d2);
            out.distance(y, x) = std::sqrt(static_cast<double>(target));
            const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(target)) + 1e-9));
            // Candidates at exactly this squared distance, scanned in row-major order.
            int best = -1;
            for (int dy = -r; dy <= r && best < 0; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const long long rem = target - static_cast<long long>(dy) * dy;
                const int dx = static_cast<int>(std::llround(std::sqrt(static_cast<double>(rem))));
                if (static_cast<long long>(dx) * dx != rem) continue;
                for (int xx : {x - dx, x + dx}) {
                    if (xx >= 0 && xx < w && mask(yy, xx) > 0.5) {
                        best = yy * w + xx;
                        break;
                    }
                }
            }
            out.nearest[static_cast<std::size_t>(y) * w + x] = best;
        }
    }
    return out;
}

double weighted_f_measure(const Plane<double>& pred, const Plane<double>& gt) {
    require_pair(pred, gt, "weighted_f_measure");
    require_binary(gt, "weighted_f_measure");
    const int h = gt.height, w = gt.width;
    double positives = 0.0;
    for (double v : gt.data) positives += v;
    if (positives == 0) throw DataError("weighted_f_measure: ground truth has no foreground");

    std::vector<double> err(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) err[i] = std::abs(pred.data[i] - gt.data[i]);
    const DistanceField df = distance_to_foreground(gt);

    std::vector<double> et(err);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.data[i] < 0.5) et[i] = err[static_cast<std::size_t>(df.nearest[i])];
    }

    constexpr int kRadius = 3;
    constexpr double kSigma = 5.0;
    double kernel[2 * kRadius + 1][2 * kRadius + 1];
    double ksum = 0.0;
    for (int dy = -kRadius; dy <= kRadius; ++dy) {
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double k = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            kernel[dy + kRadius][dx + kRadius] = k;
            ksum += k;
        }
    }
    for (auto& row : kernel) {
        for (auto& k : row) k /= ksum;
    }

    std::vector<double> ew(gt.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (gt.data[i] > 0.5) {
                double ea = 0.0;
                for (int dy = -kRadius; dy <= kRadius; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= w) continue;
                        ea += kernel[dy + kRadius][dx + kRadius] * et[static_cast<std::size_t>(yy) * w + xx];
                    }
                }
                ew[i] = std::min(err[i], ea);
            } else {
                const double decay = std::min(1.0, std::exp(std::log(0.5) * df.distance.data[i] / 5.0));
                ew[i] = err[i] * decay;
            }
        }
    }

    double fg_err = 0.0, bg_err = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) (gt.data[i] > 0.5 ? fg_err : bg_err) += ew[i];
    const double tpw = positives - fg_err;
    const double recall = 1.0 - fg_err / positives;
    const double precision = tpw / (kEps + tpw + bg_err);
    return 2.0 * recall * precision / (kEps + recall + precision);
}

MetricsReport evaluate_image(const Plane<double>& pred, const Plane<double>& gt) {
    MetricsReport r;
    r.s_alpha = s_measure(pred, gt);
    r.f_beta_w = weighted_f_measure(pred, gt);
    const auto e = e_measure(pred, gt);
    const auto f = f_measure(pred, gt);
    r.e_ad = e.ad;
    r.e_mn = e.mn;
    r.e_mx = e.mx;
    r.f_ad = f.ad;
    r.f_mn = f.mn;
    r.f_mx = f.mx;
    r.mae = mae(pred, gt);
    r.n_images = 1;
    return r;
}

MetricsReport average(const std::vector<MetricsReport>& per_image) {
    MetricsReport r;
    const double n = static_cast<double>(per_image.size());
    if (per_image.empty()) return r;
    for (const auto& m : per_image) {
        r.s_alpha += m.s_alpha;
        r.f_beta_w += m.f_beta_w;
        r.e_ad += m.e_ad;
        r.e_mn += m.e_mn;
        r.e_mx += m.e_mx;
        r.f_ad += m.f_ad;
        r.f_mn += m.f_mn;
        r.f_mx += m.f_mx;
        r.mae += m.mae;
    }
    for (double* v : {&r.s_alpha, &r.f_beta_w, &r.e_ad, &r.e_mn, &r.e_mx, &r.f_ad, &r.f_mn, &r.f_mx, &r.mae}) *v /= n;
    r.n_images = static_cast<int>(per_image.size());
    return r;
}

nlohmann::json MetricsReport::to_json() const {
    return {{"s_alpha", s_alpha}, {"f_beta_w", f_beta_w}, {"e_ad", e_ad}, {"e_mn", e_mn}, {"e_mx", e_mx},
            {"f_ad", f_ad},       {"f_mn", f_mn},         {"f_mx", f_mx}, {"mae", mae},   {"n_images", n_images}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.s_alpha = j.at("s_alpha");
    r.f_beta_w = j.at("f_beta_w");
    r.e_ad = j.at("e_ad");
    r.e_mn = j.at("e_mn");
    r.e_mx = j.at("e_mx");
    r.f_ad = j.at("f_ad");
    r.f_mn = j.at("f_mn");
    r.f_mx = j.at("f_mx");
    r.mae = j.at("mae");
    r.n_images = j.at("n_images");
    return r;
}

std::string MetricsReport::table(const std::string& row_label) const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-16s %7s %7s %7s %7s %7s %7s %7s %7s %7s\n%-16s %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f\n",
                  "", "S_a", "F_b^w", "E_ad", "E_mn", "E_mx", "F_ad", "F_mn", "F_mx", "M", row_label.c_str(), s_alpha,
                  f_beta_w, e_ad, e_mn, e_mx, f_ad, f_mn, f_mx, mae);
    return buf;
}

Plane<double> as_prediction(const SoftMask& mask) { return mask.values().cast<double>(); }

Plane<double> binarize_gt(const SoftMask& mask) {
    Plane<double> out(mask.height(), mask.width());
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = mask.values().data[i] >= 0.5f ? 1.0 : 0.0;
    return out;
}

}  // namespace csrda::metrics
