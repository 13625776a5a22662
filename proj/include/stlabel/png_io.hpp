#ifndef STLABEL_PNG_IO_HPP
#define STLABEL_PNG_IO_HPP

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "errors.hpp"

/**
 * @file png_io.hpp
 *
 * Grayscale PNG read/write on top of libpng. Instance maps use 16-bit
 * samples, type maps 8-bit. 16-bit samples are packed big-endian by hand so
 * the on-disk bytes do not depend on host endianness, and compression
 * settings are pinned so identical pixels produce identical files.
 */

namespace stlabel {

namespace png_detail {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) {
            std::fclose(fp);
        }
    }
};

inline void configure_deterministic(png_structp png) {
    png_set_compression_level(png, 6);
    png_set_compression_strategy(png, 0 /* Z_DEFAULT_STRATEGY */);
    png_set_filter(png, 0, PNG_FILTER_NONE);
}

}  // namespace png_detail

/// Write one grayscale PNG. `bit_depth` is 8 or 16; for 16 the samples in
/// `data` are host-order uint16 values passed as pairs of bytes already
/// packed big-endian by the caller-facing overloads below.
inline void write_png_gray(const std::string& path, int64_t width, int64_t height,
                           const std::vector<uint8_t>& packed_rows, int bit_depth) {
    if (width <= 0 || height <= 0) {
        throw ValidationError("write_png_gray: empty image " + path);
    }
    const size_t row_bytes = static_cast<size_t>(width) * (bit_depth == 16 ? 2 : 1);
    if (packed_rows.size() != row_bytes * static_cast<size_t>(height)) {
        throw ValidationError("write_png_gray: pixel buffer does not match dimensions for "
                              + path);
    }

    png_detail::FileCloser file;
    file.fp = std::fopen(path.c_str(), "wb");
    if (!file.fp) {
        throw IoError("cannot open " + path + " for writing");
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw IoError("libpng: failed to create write struct");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng: failed to create info struct");
    }

    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (size_t y = 0; y < rows.size(); ++y) {
        rows[y] = const_cast<png_bytep>(packed_rows.data() + y * row_bytes);
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng: error while writing " + path);
    }

    png_init_io(png, file.fp);
    png_detail::configure_deterministic(png);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void write_png_gray8(const std::string& path, int64_t width, int64_t height,
                            const std::vector<uint8_t>& pixels) {
    write_png_gray(path, width, height, pixels, 8);
}

inline void write_png_gray16(const std::string& path, int64_t width, int64_t height,
                             const std::vector<uint16_t>& pixels) {
    std::vector<uint8_t> packed(pixels.size() * 2);
    for (size_t i = 0; i < pixels.size(); ++i) {
        packed[2 * i] = static_cast<uint8_t>(pixels[i] >> 8);
        packed[2 * i + 1] = static_cast<uint8_t>(pixels[i] & 0xFF);
    }
    write_png_gray(path, width, height, packed, 16);
}

struct GrayImage8 {
    int64_t width = 0;
    int64_t height = 0;
    std::vector<uint8_t> pixels;  // row-major
};

struct GrayImage16 {
    int64_t width = 0;
    int64_t height = 0;
    std::vector<uint16_t> pixels;  // row-major, host order
};

namespace png_detail {

inline void read_png_gray(const std::string& path, int expected_depth, int64_t& width,
                          int64_t& height, std::vector<uint8_t>& packed_rows) {
    FileCloser file;
    file.fp = std::fopen(path.c_str(), "rb");
    if (!file.fp) {
        throw IoError("cannot open " + path);
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw IoError("libpng: failed to create read struct");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng: failed to create info struct");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng: error while reading " + path);
    }

    png_init_io(png, file.fp);
    png_read_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || depth != expected_depth) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError(path + ": expected " + std::to_string(expected_depth)
                              + "-bit grayscale PNG");
    }
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const size_t row_bytes = png_get_rowbytes(png, info);
    packed_rows.assign(row_bytes * static_cast<size_t>(height), 0);
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (size_t y = 0; y < rows.size(); ++y) {
        rows[y] = packed_rows.data() + y * row_bytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace png_detail

inline GrayImage8 read_png_gray8(const std::string& path) {
    GrayImage8 img;
    png_detail::read_png_gray(path, 8, img.width, img.height, img.pixels);
    return img;
}

inline GrayImage16 read_png_gray16(const std::string& path) {
    GrayImage16 img;
    std::vector<uint8_t> packed;
    png_detail::read_png_gray(path, 16, img.width, img.height, packed);
    img.pixels.resize(packed.size() / 2);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = static_cast<uint16_t>((packed[2 * i] << 8) | packed[2 * i + 1]);
    }
    return img;
}

}

#endif
