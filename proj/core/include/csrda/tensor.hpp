#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csrda/error.hpp"

namespace csrda {

// Dense single-channel map, row-major.
template <typename T>
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Plane() = default;
    Plane(int h, int w, T fill = T(0)) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    T& operator()(int y, int x) noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& operator()(int y, int x) const noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
    bool same_shape(const Plane& o) const noexcept { return height == o.height && width == o.width; }

    template <typename U>
    Plane<U> cast() const {
        Plane<U> out(height, width);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    friend bool operator==(const Plane&, const Plane&) = default;
};

// Dense (channels, height, width) array, channel-major.
template <typename T>
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height) * width; }
    T& operator()(int c, int y, int x) noexcept {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    const T& operator()(int c, int y, int x) const noexcept {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::span<T> channel(int c) noexcept { return {data.data() + c * plane_size(), plane_size()}; }
    std::span<const T> channel(int c) const noexcept { return {data.data() + c * plane_size(), plane_size()}; }

    template <typename U>
    Tensor3<U> cast() const {
        Tensor3<U> out(channels, height, width);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

inline constexpr int kMinImageSide = 16;

// RGB image with values in [0,1]. Validated on construction and immutable
// afterwards.
class ImageTensor {
public:
    ImageTensor() = default;
    explicit ImageTensor(Tensor3<float> pixels);

    int height() const noexcept { return pixels_.height; }
    int width() const noexcept { return pixels_.width; }
    const Tensor3<float>& pixels() const noexcept { return pixels_; }
    bool empty() const noexcept { return pixels_.data.empty(); }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    Tensor3<float> pixels_;
};

// Probability map with values in [0,1].
class SoftMask {
public:
    SoftMask() = default;
    explicit SoftMask(Plane<float> values);
    SoftMask(int height, int width, float fill);

    int height() const noexcept { return values_.height; }
    int width() const noexcept { return values_.width; }
    const Plane<float>& values() const noexcept { return values_; }
    float operator()(int y, int x) const noexcept { return values_(y, x); }
    bool same_shape(const SoftMask& o) const noexcept { return values_.same_shape(o.values_); }

    friend bool operator==(const SoftMask&, const SoftMask&) = default;

private:
    Plane<float> values_;
};

}  // namespace csrda
