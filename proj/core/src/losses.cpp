#include "csrda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace csrda {

namespace {

template <typename T>
void require_same(const Plane<T>& a, const Plane<T>& b, const char* what) {
    if (!a.same_shape(b) || a.data.empty()) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width) + ")");
    }
}

inline int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

template <typename T>
void sobel_components(const Plane<T>& m, std::vector<double>& gx, std::vector<double>& gy) {
    const int h = m.height, w = m.width;
    gx.assign(m.size(), 0.0);
    gy.assign(m.size(), 0.0);
    auto at = [&](int y, int x) -> double { return m(clampi(y, 0, h - 1), clampi(x, 0, w - 1)); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Differences first, so constant regions give exactly zero.
            const double sx = (at(y - 1, x + 1) - at(y - 1, x - 1)) + 2.0 * (at(y, x + 1) - at(y, x - 1)) +
                              (at(y + 1, x + 1) - at(y + 1, x - 1));
            const double sy = (at(y + 1, x - 1) - at(y - 1, x - 1)) + 2.0 * (at(y + 1, x) - at(y - 1, x)) +
                              (at(y + 1, x + 1) - at(y - 1, x + 1));
            gx[static_cast<std::size_t>(y) * w + x] = sx;
            gy[static_cast<std::size_t>(y) * w + x] = sy;
        }
    }
}

}  // namespace

void ESConfig::validate() const {
    if (!(alpha >= 0) || !(beta >= 0) || !(delta >= 0)) throw ConfigError("loss: alpha, beta, delta must be >= 0");
    if (!(l1_eps > 0) || !(prob_eps > 0) || prob_eps >= 0.5) throw ConfigError("loss: eps values out of range");
}

template <typename T>
LossGrad<T> bce_loss(const Plane<T>& pred, const Plane<T>& target, double prob_eps) {
    require_same(pred, target, "bce_loss");
    const double n = static_cast<double>(pred.size());
    LossGrad<T> out{0.0, Plane<T>(pred.height, pred.width)};
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp<double>(pred.data[i], prob_eps, 1.0 - prob_eps);
        const double t = target.data[i];
        sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        out.grad.data[i] = static_cast<T>((static_cast<double>(pred.data[i]) - t) / n);
    }
    out.value = sum / n;
    return out;
}

template <typename T>
Plane<T> sobel_edges(const Plane<T>& mask) {
    std::vector<double> gx, gy;
    sobel_components(mask, gx, gy);
    Plane<T> out(mask.height, mask.width);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = static_cast<T>(std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]));
    return out;
}

template <typename T>
LossGrad<T> edge_alignment_loss(const Plane<T>& student, const Plane<T>& teacher, double l1_eps) {
    require_same(student, teacher, "edge_alignment_loss");
    const int h = student.height, w = student.width;
    const double n = static_cast<double>(student.size());
    std::vector<double> sx, sy, tx, ty;
    sobel_components(student, sx, sy);
    sobel_components(teacher, tx, ty);

    // Upstream gradient on the student's Sobel components.
    std::vector<double> ux(student.size()), uy(student.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < student.size(); ++i) {
        const double ms = std::sqrt(sx[i] * sx[i] + sy[i] * sy[i]);
        const double mt = std::sqrt(tx[i] * tx[i] + ty[i] * ty[i]);
        const double d = ms - mt;
        sum += std::abs(d);
        const double g = d / std::sqrt(d * d + l1_eps * l1_eps) / n;
        ux[i] = ms > 0.0 ? g * sx[i] / ms : 0.0;
        uy[i] = ms > 0.0 ? g * sy[i] / ms : 0.0;
    }

    // Transpose of the replicate-padded correlation, then the sigmoid chain.
    std::vector<double> dp(student.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t o = static_cast<std::size_t>(y) * w + x;
            if (ux[o] == 0.0 && uy[o] == 0.0) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const std::size_t in =
                        static_cast<std::size_t>(clampi(y + dy, 0, h - 1)) * w + clampi(x + dx, 0, w - 1);
                    dp[in] += kSobelX[dy + 1][dx + 1] * ux[o] + kSobelY[dy + 1][dx + 1] * uy[o];
                }
            }
        }
    }
    LossGrad<T> out{sum / n, Plane<T>(h, w)};
    for (std::size_t i = 0; i < dp.size(); ++i) {
        const double p = student.data[i];
        out.grad.data[i] = static_cast<T>(dp[i] * p * (1.0 - p));
    }
    return out;
}

template <typename T>
LossGrad<T> saliency_weighted_loss(const Plane<T>& student, const Plane<T>& pseudo, double delta, double prob_eps) {
    require_same(student, pseudo, "saliency_weighted_loss");
    if (!(delta >= 0)) throw ConfigError("saliency_weighted_loss: delta must be >= 0");
    const double n = static_cast<double>(student.size());
    LossGrad<T> out{0.0, Plane<T>(student.height, student.width)};
    double sum = 0.0;
    for (std::size_t i = 0; i < student.size(); ++i) {
        const double y = pseudo.data[i];
        const double wgt = y + delta;
        const double p = std::clamp<double>(student.data[i], prob_eps, 1.0 - prob_eps);
        sum += wgt * -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        out.grad.data[i] = static_cast<T>(wgt * (static_cast<double>(student.data[i]) - y) / n);
    }
    out.value = sum / n;
    return out;
}

template <typename T>
ESResult<T> es_loss(const Plane<T>& student, const Plane<T>& teacher, const ESConfig& cfg) {
    const auto ea = edge_alignment_loss(student, teacher, cfg.l1_eps);
    const auto sw = saliency_weighted_loss(student, teacher, cfg.delta, cfg.prob_eps);
    ESResult<T> out{ea.value, sw.value, cfg.alpha * ea.value + cfg.beta * sw.value, Plane<T>(student.height, student.width)};
    for (std::size_t i = 0; i < out.grad.size(); ++i) {
        out.grad.data[i] = static_cast<T>(cfg.alpha * ea.grad.data[i] + cfg.beta * sw.grad.data[i]);
    }
    return out;
}

#define CSRDA_INSTANTIATE_LOSSES(T)                                                               \
    template LossGrad<T> bce_loss(const Plane<T>&, const Plane<T>&, double);                      \
    template Plane<T> sobel_edges(const Plane<T>&);                                               \
    template LossGrad<T> edge_alignment_loss(const Plane<T>&, const Plane<T>&, double);           \
    template LossGrad<T> saliency_weighted_loss(const Plane<T>&, const Plane<T>&, double, double); \
    template ESResult<T> es_loss(const Plane<T>&, const Plane<T>&, const ESConfig&);

CSRDA_INSTANTIATE_LOSSES(float)
CSRDA_INSTANTIATE_LOSSES(double)

}  // namespace csrda
