#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace csrda {

// 8-bit raster as decoded from / encoded to PNG. Pixels interleaved.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> pixels;
};

// Decodes any PNG into 8-bit gray (channels=1) or RGB (channels=3).
// Palette and 16-bit inputs are converted; alpha is dropped.
RawImage read_png(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it into place.
void write_png(const std::filesystem::path& path, const RawImage& image);

}  // namespace csrda
