#include "csrda/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "csrda/error.hpp"

namespace csrda {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(const std::filesystem::path& path, const char* what) {
    throw DataError("PNG " + std::string(what) + ": " + path.string(), {path.string()});
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) png_fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) png_fail(path, "read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        png_fail(path, "info struct allocation failed");
    }

    RawImage out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        png_fail(path, "decode error");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    if (out.channels != 1 && out.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        png_fail(path, "unsupported channel layout");
    }
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) {
        rows[y] = out.pixels.data() + static_cast<std::size_t>(y) * out.width * out.channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
    if (image.channels != 1 && image.channels != 3) png_fail(path, "unsupported channel count");
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) png_fail(path, "cannot open for writing");

        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) png_fail(path, "write struct allocation failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            png_fail(path, "info struct allocation failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            png_fail(path, "encode error");
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, image.width, image.height, 8,
                     image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<png_bytep> rows(image.height);
        for (int y = 0; y < image.height; ++y) {
            rows[y] = const_cast<png_bytep>(image.pixels.data() +
                                            static_cast<std::size_t>(y) * image.width * image.channels);
        }
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
        if (std::fflush(fp.get()) != 0) png_fail(path, "flush failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) png_fail(path, "rename failed");
}

}  // namespace csrda
