#include "csrda/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "csrda/rng.hpp"

namespace csrda::synth {

namespace {

using Color = std::array<double, 3>;

constexpr std::uint64_t kBankSeed = 0x5eed0bac4ULL;

// Hash-based value noise, evaluable at arbitrary coordinates so a texture can
// be re-sampled at an offset.
double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t salt) {
    const std::uint64_t h = splitmix64(salt ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ULL +
                                                          static_cast<std::uint64_t>(iy) * 0x85EBCA77ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(double x, double y, std::uint64_t salt) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = smooth(x - fx), ty = smooth(y - fy);
    const double a = lattice(ix, iy, salt), b = lattice(ix + 1, iy, salt);
    const double c = lattice(ix, iy + 1, salt), d = lattice(ix + 1, iy + 1, salt);
    return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
}

double fbm(double x, double y, double base_freq, int octaves, std::uint64_t salt) {
    double sum = 0, norm = 0, amp = 1, freq = base_freq;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(x * freq, y * freq, salt + static_cast<std::uint64_t>(o) * 7919);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

Color random_color(Rng& rng) { return {uniform(rng, 0.08, 0.92), uniform(rng, 0.08, 0.92), uniform(rng, 0.08, 0.92)}; }

Color lerp(const Color& a, const Color& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

// Value noise is concentrated around 0.5; stretch it before colorizing.
double stretch(double n) { return std::clamp((n - 0.5) * 2.2 + 0.5, 0.0, 1.0); }

struct Background {
    std::array<Color, 3> palette;
    double base_freq;
    std::uint64_t salt;

    Color at(double u, double v) const {
        const double t = stretch(fbm(u, v, base_freq, 4, salt));
        return t < 0.5 ? lerp(palette[0], palette[1], t * 2) : lerp(palette[1], palette[2], (t - 0.5) * 2);
    }
};

enum class Family { stripes, spots, checker, marble };

struct TexturePrototype {
    Family family;
    double freq;
    double angle;
};

std::vector<TexturePrototype> texture_bank(int count) {
    std::vector<TexturePrototype> bank;
    Rng rng(kBankSeed);
    for (int i = 0; i < count; ++i) {
        bank.push_back({static_cast<Family>(i % 4), uniform(rng, 4.0, 11.0), uniform(rng, 0.0, std::numbers::pi)});
    }
    return bank;
}

struct ObjectTexture {
    TexturePrototype proto;
    Color a, b;
    double phase;
    std::uint64_t salt;

    Color at(double u, double v) const {
        const double c = std::cos(proto.angle), s = std::sin(proto.angle);
        const double ru = c * u + s * v, rv = -s * u + c * v;
        double t = 0;
        switch (proto.family) {
            case Family::stripes:
                t = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * proto.freq * ru + phase);
                break;
            case Family::spots: {
                // Nearest jittered feature point in a square grid.
                const double gu = ru * proto.freq, gv = rv * proto.freq;
                const double cu = std::floor(gu), cv = std::floor(gv);
                double best = 1e9;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const auto ix = static_cast<std::int64_t>(cu) + dx, iy = static_cast<std::int64_t>(cv) + dy;
                        const double px = static_cast<double>(ix) + lattice(ix, iy, salt);
                        const double py = static_cast<double>(iy) + lattice(ix, iy, salt + 1);
                        best = std::min(best, std::hypot(gu - px, gv - py));
                    }
                }
                t = std::clamp(best * 1.6, 0.0, 1.0);
                break;
            }
            case Family::checker: {
                const auto cell = static_cast<std::int64_t>(std::floor(ru * proto.freq)) +
                                  static_cast<std::int64_t>(std::floor(rv * proto.freq));
                t = (cell & 1) ? 0.85 : 0.15;
                break;
            }
            case Family::marble:
                t = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * proto.freq * ru + 6.0 * fbm(u, v, 3.0, 3, salt));
                break;
        }
        return lerp(a, b, t);
    }
};

Plane<float> make_shape(Rng& rng, int h, int w) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int kind = uniform_int(rng, 0, 2);
        const double area = uniform(rng, 0.04, 0.3) * h * w;
        const double r = std::sqrt(area / std::numbers::pi);
        const double q = uniform(rng, 0.5, 1.0);
        const double ax = r / std::sqrt(q), ay = r * std::sqrt(q);
        const double rot = uniform(rng, 0.0, std::numbers::pi);
        const double cx = uniform(rng, 0.15, 0.85) * w, cy = uniform(rng, 0.15, 0.85) * h;
        const double cr = std::cos(rot), sr = std::sin(rot);
        const std::uint64_t salt = rng();

        std::vector<std::pair<double, double>> poly;
        if (kind == 2) {
            const int k = uniform_int(rng, 5, 9);
            std::vector<double> angles(k);
            for (auto& a : angles) a = uniform(rng, 0.0, 2 * std::numbers::pi);
            std::sort(angles.begin(), angles.end());
            for (double a : angles) {
                const double px = ax * std::cos(a), py = ay * std::sin(a);
                poly.emplace_back(cx + cr * px - sr * py, cy + sr * px + cr * py);
            }
        }

        Plane<float> mask(h, w);
        int inside = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                const double lx = (cr * dx + sr * dy) / ax, ly = (-sr * dx + cr * dy) / ay;
                bool in = false;
                if (kind == 0) {
                    in = lx * lx + ly * ly <= 1.0;
                } else if (kind == 1) {
                    const double falloff = 1.0 - std::sqrt(lx * lx + ly * ly) / 1.3;
                    const double n = fbm((x + 0.5) / w, (y + 0.5) / h, 4.0, 3, salt);
                    in = falloff + 0.9 * (n - 0.5) > 0.25;
                } else {
                    // Vertices are angle-sorted on an ellipse, so the polygon
                    // is convex: inside iff left of every edge.
                    in = poly.size() >= 3;
                    for (std::size_t i = 0; i < poly.size() && in; ++i) {
                        const auto& [x0, y0] = poly[i];
                        const auto& [x1, y1] = poly[(i + 1) % poly.size()];
                        in = (x1 - x0) * (y + 0.5 - y0) - (y1 - y0) * (x + 0.5 - x0) >= 0;
                    }
                }
                if (in) {
                    mask(y, x) = 1.0f;
                    ++inside;
                }
            }
        }
        const double frac = static_cast<double>(inside) / (static_cast<double>(h) * w);
        if (frac >= 0.02 && frac <= 0.5) return mask;
    }
    // Fallback: centered disc covering ~10% of the frame.
    Plane<float> mask(h, w);
    const double r = std::sqrt(0.1 * h * w / std::numbers::pi);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (std::hypot(x + 0.5 - w / 2.0, y + 0.5 - h / 2.0) <= r) mask(y, x) = 1.0f;
        }
    }
    return mask;
}

enum class Domain { source, target };

Sample make_sample(const GenConfig& cfg, const std::vector<TexturePrototype>& bank, Domain domain, int index) {
    // The per-sample stream depends only on (seed, index): source and target
    // splits with the same seed share backgrounds, shapes and object textures
    // and differ only in the pairing rule.
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(index)}));
    const int h = cfg.height, w = cfg.width;

    Background bg{{random_color(rng), random_color(rng), random_color(rng)}, uniform(rng, 3.0, 7.0), rng()};
    Plane<float> mask = make_shape(rng, h, w);
    ObjectTexture tex{bank[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(bank.size()) - 1))],
                      random_color(rng), random_color(rng), uniform(rng, 0.0, 2 * std::numbers::pi), rng()};

    // Camouflage copy: the background texture re-sampled at an offset with a
    // small brightness/colour jitter.
    const double off_u = (bernoulli(rng, 0.5) ? 1 : -1) * uniform(rng, 0.15, 0.35);
    const double off_v = (bernoulli(rng, 0.5) ? 1 : -1) * uniform(rng, 0.15, 0.35);
    const double shift = uniform(rng, -0.08, 0.08);
    const Color gain{uniform(rng, 0.9, 1.1), uniform(rng, 0.9, 1.1), uniform(rng, 0.9, 1.1)};

    const double blend = domain == Domain::source ? 0.0 : cfg.gap;

    Tensor3<float> px(3, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w, v = (y + 0.5) / h;
            Color out;
            if (mask(y, x) > 0.5f) {
                const Color t = tex.at(u, v);
                Color cam = bg.at(u + off_u, v + off_v);
                for (int c = 0; c < 3; ++c) cam[c] = cam[c] * gain[c] + shift;
                for (int c = 0; c < 3; ++c) out[c] = (1.0 - blend) * t[c] + blend * cam[c];
            } else {
                out = bg.at(u, v);
            }
            for (int c = 0; c < 3; ++c) px(c, y, x) = static_cast<float>(std::clamp(out[c], 0.0, 1.0));
        }
    }

    Sample s;
    char id[64];
    std::snprintf(id, sizeof id, "%s%llu_%05d", domain == Domain::source ? "src" : "tgt",
                  static_cast<unsigned long long>(cfg.seed), index);
    s.id = id;
    s.image = ImageTensor(std::move(px));
    s.label = SoftMask(std::move(mask));
    return s;
}

DomainDataset generate(const GenConfig& cfg, Domain domain, bool keep_labels, DomainTag tag, std::string name) {
    cfg.validate();
    const auto bank = texture_bank(cfg.texture_bank);
    std::vector<Sample> samples(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        samples[i] = make_sample(cfg, bank, domain, i);
        samples[i].domain_tag = tag;
        if (!keep_labels) samples[i].label.reset();
    }
    return DomainDataset(std::move(name), std::move(samples));
}

}  // namespace

void GenConfig::validate() const {
    if (!(gap >= 0.0 && gap <= 1.0)) throw ConfigError("GenConfig: gap must lie in [0,1]");
    if (count < 1) throw ConfigError("GenConfig: count must be >= 1");
    if (height < 32 || width < 32) throw ConfigError("GenConfig: size components must be >= 32");
    if (texture_bank < 1) throw ConfigError("GenConfig: texture_bank must be >= 1");
}

void to_json(nlohmann::json& j, const GenConfig& cfg) {
    j = nlohmann::json{{"seed", cfg.seed},   {"count", cfg.count}, {"size", {cfg.height, cfg.width}},
                       {"gap", cfg.gap},     {"texture_bank", cfg.texture_bank}};
}

void from_json(const nlohmann::json& j, GenConfig& cfg) {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.count = j.value("count", cfg.count);
    if (j.contains("size")) {
        cfg.height = j.at("size").at(0).get<int>();
        cfg.width = j.at("size").at(1).get<int>();
    }
    cfg.gap = j.value("gap", cfg.gap);
    cfg.texture_bank = j.value("texture_bank", cfg.texture_bank);
}

DomainDataset generate_source(const GenConfig& cfg) {
    return generate(cfg, Domain::source, true, DomainTag::source, "synthetic-source");
}

DomainDataset generate_target(const GenConfig& cfg, bool with_labels) {
    return generate(cfg, Domain::target, with_labels, with_labels ? DomainTag::source : DomainTag::target,
                    with_labels ? "target-test" : "target-train");
}

double foreground_fraction(const SoftMask& mask) {
    double sum = 0;
    for (float v : mask.values().data) sum += v;
    return sum / static_cast<double>(mask.values().size());
}

double boundary_texture_distance(const ImageTensor& image, const SoftMask& mask, int band) {
    const int h = mask.height(), w = mask.width();
    const auto& m = mask.values();
    // Pixel is in the band when a pixel of the opposite class lies within
    // Euclidean distance `band`.
    std::array<double, 3> sum_in{}, sq_in{}, sum_out{}, sq_out{};
    double n_in = 0, n_out = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool fg = m(y, x) > 0.5f;
            bool near = false;
            for (int dy = -band; dy <= band && !near; ++dy) {
                for (int dx = -band; dx <= band && !near; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w || dx * dx + dy * dy > band * band) continue;
                    near = (m(yy, xx) > 0.5f) != fg;
                }
            }
            if (!near) continue;
            auto& sum = fg ? sum_in : sum_out;
            auto& sq = fg ? sq_in : sq_out;
            (fg ? n_in : n_out) += 1;
            for (int c = 0; c < 3; ++c) {
                const double v = image.pixels()(c, y, x);
                sum[c] += v;
                sq[c] += v * v;
            }
        }
    }
    if (n_in == 0 || n_out == 0) return 0.0;
    double d = 0;
    for (int c = 0; c < 3; ++c) {
        const double mi = sum_in[c] / n_in, mo = sum_out[c] / n_out;
        const double si = std::sqrt(std::max(0.0, sq_in[c] / n_in - mi * mi));
        const double so = std::sqrt(std::max(0.0, sq_out[c] / n_out - mo * mo));
        d += std::abs(mi - mo) + std::abs(si - so);
    }
    return d / 3.0;
}

std::uint64_t split_seed(std::uint64_t master, int split_index) {
    return master * 16 + static_cast<std::uint64_t>(split_index);
}

void write_splits(const SplitPlan& plan, const std::filesystem::path& out) {
    auto cfg_for = [&](int index, int count) {
        GenConfig c = plan.base;
        c.seed = split_seed(plan.base.seed, index);
        c.count = count;
        return c;
    };
    nlohmann::json manifest;
    manifest["base"] = plan.base;
    const struct {
        const char* name;
        int index;
        int count;
        bool target;
        bool labels;
    } splits[] = {{"source", 0, plan.source, false, true},
                  {"source_test", 1, plan.source_test, false, true},
                  {"target_train", 2, plan.target_train, true, false},
                  {"target_test", 3, plan.target_test, true, true}};
    for (const auto& s : splits) {
        if (s.count <= 0) continue;
        const GenConfig c = cfg_for(s.index, s.count);
        const DomainDataset d = s.target ? generate_target(c, s.labels) : generate_source(c);
        save_dataset(d, out / s.name);
        manifest["splits"][s.name] = c;
    }
    const auto path = out / "gen_manifest.json";
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string(), {path.string()});
    os << manifest.dump(2) << "\n";
}

}  // namespace csrda::synth
