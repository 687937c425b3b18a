#include "csrda/tensor.hpp"

#include <cmath>
#include <string>

namespace csrda {

namespace {

template <typename Range>
void require_unit_range(const Range& values, const char* what) {
    for (float v : values) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            throw DataError(std::string(what) + ": value " + std::to_string(v) + " outside [0,1]");
        }
    }
}

}  // namespace

ImageTensor::ImageTensor(Tensor3<float> pixels) : pixels_(std::move(pixels)) {
    if (pixels_.channels != 3) {
        throw ShapeError("ImageTensor: expected 3 channels, got " + std::to_string(pixels_.channels));
    }
    if (pixels_.height < kMinImageSide || pixels_.width < kMinImageSide) {
        throw ShapeError("ImageTensor: spatial size " + std::to_string(pixels_.height) + "x" +
                         std::to_string(pixels_.width) + " below minimum " + std::to_string(kMinImageSide));
    }
    require_unit_range(pixels_.data, "ImageTensor");
}

SoftMask::SoftMask(Plane<float> values) : values_(std::move(values)) {
    if (values_.height <= 0 || values_.width <= 0) throw ShapeError("SoftMask: empty shape");
    require_unit_range(values_.data, "SoftMask");
}

SoftMask::SoftMask(int height, int width, float fill) : SoftMask(Plane<float>(height, width, fill)) {}

}  // namespace csrda
