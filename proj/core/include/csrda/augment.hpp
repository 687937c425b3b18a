#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "csrda/tensor.hpp"

namespace csrda::augment {

// Rectangle in normalized [0,1]^2 image coordinates.
struct Box {
    double x0 = 0, y0 = 0, width = 1, height = 1;
    double area() const noexcept { return width * height; }
    friend bool operator==(const Box&, const Box&) = default;
};

struct Geometry {
    bool flip = false;
    Box crop;
    int output_height = 64;
    int output_width = 64;
    friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct Photometric {
    double brightness = 0;  // multiplicative delta: factor = 1 + brightness
    double contrast = 0;
    double saturation = 0;
    double blur_sigma = 0;  // 0 disables blur
    std::vector<Box> cutouts;
    std::array<float, 3> fill{0.5f, 0.5f, 0.5f};
    friend bool operator==(const Photometric&, const Photometric&) = default;
};

enum class Kind { weak, strong };

struct AugSpec {
    Kind kind = Kind::weak;
    std::uint64_t seed = 0;
    Geometry geometry;
    std::optional<Photometric> photometric;  // strong only
    friend bool operator==(const AugSpec&, const AugSpec&) = default;
};

// Magnitudes of the weak/strong pipelines (the `augment:` config section).
struct AugConfig {
    int output_height = 64;
    int output_width = 64;
    double flip_p = 0.5;
    double min_crop_area = 0.5;
    double brightness = 0.3;
    double contrast = 0.3;
    double saturation = 0.2;
    double blur_p = 0.5;
    double blur_sigma_min = 0.1;
    double blur_sigma_max = 1.5;
    int cutout_min = 1;
    int cutout_max = 3;
    double cutout_max_area = 0.1;
    std::array<float, 3> fill{0.5f, 0.5f, 0.5f};

    void validate() const;
};

struct AugPair {
    AugSpec weak;
    AugSpec strong;
};

// Weak and strong specs share their geometry verbatim; only the strong one
// carries photometric parameters.
AugPair sample_paired_specs(std::uint64_t rng_seed, const AugConfig& cfg = {});

// The spec that reproduces the input (resized to the given output size).
AugSpec identity_spec(int output_height, int output_width);

struct Augmented {
    ImageTensor image;
    std::optional<SoftMask> mask;
};

// Geometry (crop, resize, flip) applies to image and mask alike; the
// photometric stage touches the image only.
Augmented apply(const AugSpec& spec, const ImageTensor& image, const std::optional<SoftMask>& mask = std::nullopt);

// Mean RGB color over a set of images, used as the cutout fill.
std::array<float, 3> mean_color(const std::vector<const ImageTensor*>& images);

}  // namespace csrda::augment
