#include "csrda/augment.hpp"

#include <algorithm>
#include <cmath>

#include "csrda/rng.hpp"

namespace csrda::augment {

void AugConfig::validate() const {
    if (output_height < kMinImageSide || output_width < kMinImageSide) throw ConfigError("augment: output size too small");
    if (!(min_crop_area >= 0.5 && min_crop_area <= 1.0)) throw ConfigError("augment: min_crop_area must lie in [0.5,1]");
    if (!(flip_p >= 0 && flip_p <= 1) || !(blur_p >= 0 && blur_p <= 1)) throw ConfigError("augment: probabilities must lie in [0,1]");
    if (blur_sigma_min < 0 || blur_sigma_max < blur_sigma_min) throw ConfigError("augment: invalid blur sigma range");
    if (cutout_min < 0 || cutout_max < cutout_min) throw ConfigError("augment: invalid cutout count range");
    if (!(cutout_max_area > 0 && cutout_max_area <= 1)) throw ConfigError("augment: cutout_max_area must lie in (0,1]");
}

AugSpec identity_spec(int output_height, int output_width) {
    AugSpec spec;
    spec.geometry.output_height = output_height;
    spec.geometry.output_width = output_width;
    return spec;
}

AugPair sample_paired_specs(std::uint64_t rng_seed, const AugConfig& cfg) {
    Rng rng(derive_seed(rng_seed, {0xa116}));
    Geometry geo;
    geo.output_height = cfg.output_height;
    geo.output_width = cfg.output_width;
    geo.flip = bernoulli(rng, cfg.flip_p);
    // Area-preserving aspect jitter; clamping one side to 1 keeps the area.
    const double area = uniform(rng, cfg.min_crop_area, 1.0);
    const double log_ratio = uniform(rng, std::log(3.0 / 4.0), std::log(4.0 / 3.0));
    double cw = std::sqrt(area * std::exp(log_ratio));
    double ch = std::sqrt(area / std::exp(log_ratio));
    if (cw > 1.0) { cw = 1.0; ch = area; }
    if (ch > 1.0) { ch = 1.0; cw = area; }
    geo.crop = {uniform(rng, 0.0, 1.0 - cw), uniform(rng, 0.0, 1.0 - ch), cw, ch};

    Photometric photo;
    photo.brightness = uniform(rng, -cfg.brightness, cfg.brightness);
    photo.contrast = uniform(rng, -cfg.contrast, cfg.contrast);
    photo.saturation = uniform(rng, -cfg.saturation, cfg.saturation);
    photo.blur_sigma = bernoulli(rng, cfg.blur_p) ? uniform(rng, cfg.blur_sigma_min, cfg.blur_sigma_max) : 0.0;
    const int n_cut = uniform_int(rng, cfg.cutout_min, cfg.cutout_max);
    for (int i = 0; i < n_cut; ++i) {
        const double a = uniform(rng, 0.02, cfg.cutout_max_area);
        const double r = std::exp(uniform(rng, std::log(0.5), std::log(2.0)));
        const double bw = std::min(1.0, std::sqrt(a * r)), bh = std::min(1.0, a / bw);
        photo.cutouts.push_back({uniform(rng, 0.0, 1.0 - bw), uniform(rng, 0.0, 1.0 - bh), bw, bh});
    }
    photo.fill = cfg.fill;

    AugPair pair;
    pair.weak = {Kind::weak, rng_seed, geo, std::nullopt};
    pair.strong = {Kind::strong, rng_seed, geo, photo};
    return pair;
}

namespace {

// Bilinear crop-and-resize with half-pixel centers, then optional mirror.
void resample(const float* src, int sh, int sw, float* dst, const Geometry& g) {
    const int oh = g.output_height, ow = g.output_width;
    const double sx = g.crop.width * sw / ow, sy = g.crop.height * sh / oh;
    const double ox0 = g.crop.x0 * sw, oy0 = g.crop.y0 * sh;
    for (int y = 0; y < oh; ++y) {
        const double fy = std::clamp(oy0 + (y + 0.5) * sy - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, sh - 1);
        const double ty = fy - y0;
        for (int x = 0; x < ow; ++x) {
            const double fx = std::clamp(ox0 + (x + 0.5) * sx - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, sw - 1);
            const double tx = fx - x0;
            const double top = src[y0 * sw + x0] * (1 - tx) + src[y0 * sw + x1] * tx;
            const double bot = src[y1 * sw + x0] * (1 - tx) + src[y1 * sw + x1] * tx;
            const int dx = g.flip ? ow - 1 - x : x;
            dst[y * ow + dx] = static_cast<float>(top * (1 - ty) + bot * ty);
        }
    }
}

float luma(const Tensor3<float>& t, std::size_t i) {
    const std::size_t n = t.plane_size();
    return 0.299f * t.data[i] + 0.587f * t.data[n + i] + 0.114f * t.data[2 * n + i];
}

void clamp01(std::vector<float>& v) {
    for (float& x : v) x = std::clamp(x, 0.0f, 1.0f);
}

void gaussian_blur(Tensor3<float>& t, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = static_cast<float>(std::exp(-i * i / (2 * sigma * sigma)));
    for (float& v : k) v = static_cast<float>(v / sum);
    const int h = t.height, w = t.width;
    std::vector<float> tmp(t.plane_size());
    for (int c = 0; c < t.channels; ++c) {
        auto ch = t.channel(c);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0;
                for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * ch[y * w + std::clamp(x + i, 0, w - 1)];
                tmp[y * w + x] = acc;
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0;
                for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
                ch[y * w + x] = acc;
            }
        }
    }
}

void photometric(Tensor3<float>& t, const Photometric& p) {
    const std::size_t n = t.plane_size();
    for (float& v : t.data) v *= static_cast<float>(1 + p.brightness);
    clamp01(t.data);

    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += luma(t, i);
    mean /= static_cast<double>(n);
    const auto cf = static_cast<float>(1 + p.contrast);
    for (float& v : t.data) v = static_cast<float>((v - mean) * cf + mean);
    clamp01(t.data);

    const auto sf = static_cast<float>(1 + p.saturation);
    for (std::size_t i = 0; i < n; ++i) {
        const float g = luma(t, i);
        for (int c = 0; c < 3; ++c) t.data[c * n + i] = (t.data[c * n + i] - g) * sf + g;
    }
    clamp01(t.data);

    if (p.blur_sigma > 0) gaussian_blur(t, p.blur_sigma);

    for (const Box& b : p.cutouts) {
        const int x0 = static_cast<int>(std::floor(b.x0 * t.width)), x1 = static_cast<int>(std::ceil((b.x0 + b.width) * t.width));
        const int y0 = static_cast<int>(std::floor(b.y0 * t.height)), y1 = static_cast<int>(std::ceil((b.y0 + b.height) * t.height));
        for (int c = 0; c < 3; ++c) {
            for (int y = std::max(0, y0); y < std::min(t.height, y1); ++y) {
                for (int x = std::max(0, x0); x < std::min(t.width, x1); ++x) t(c, y, x) = p.fill[c];
            }
        }
    }
    clamp01(t.data);
}

}  // namespace

Augmented apply(const AugSpec& spec, const ImageTensor& image, const std::optional<SoftMask>& mask) {
    if (mask && (mask->height() != image.height() || mask->width() != image.width())) {
        throw ShapeError("augment::apply: mask shape does not match image");
    }
    const Geometry& g = spec.geometry;
    const auto& src = image.pixels();
    Tensor3<float> out(3, g.output_height, g.output_width);
    for (int c = 0; c < 3; ++c) {
        resample(src.channel(c).data(), src.height, src.width, out.channel(c).data(), g);
    }
    if (spec.photometric) photometric(out, *spec.photometric);
    clamp01(out.data);

    Augmented result{ImageTensor(std::move(out)), std::nullopt};
    if (mask) {
        Plane<float> m(g.output_height, g.output_width);
        resample(mask->values().data.data(), mask->height(), mask->width(), m.data.data(), g);
        clamp01(m.data);
        result.mask = SoftMask(std::move(m));
    }
    return result;
}

std::array<float, 3> mean_color(const std::vector<const ImageTensor*>& images) {
    std::array<double, 3> sum{};
    double count = 0;
    for (const ImageTensor* img : images) {
        for (int c = 0; c < 3; ++c) {
            for (float v : img->pixels().channel(c)) sum[c] += v;
        }
        count += static_cast<double>(img->pixels().plane_size());
    }
    if (count == 0) return {0.5f, 0.5f, 0.5f};
    return {static_cast<float>(sum[0] / count), static_cast<float>(sum[1] / count), static_cast<float>(sum[2] / count)};
}

}  // namespace csrda::augment
