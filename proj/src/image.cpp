#include "herd/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace herd {

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("Image: dimensions must be positive");
    rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill[0];
        rgb[i + 1] = fill[1];
        rgb[i + 2] = fill[2];
    }
}

bool operator==(const Image& a, const Image& b) {
    return a.width == b.width && a.height == b.height && a.rgb == b.rgb;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("load_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("load_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img(static_cast<int>(w), static_cast<int>(h));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.rgb.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const Image& img, const std::string& path) {
    if (img.empty()) throw std::invalid_argument("save_png: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("save_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("save_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Rgb dc_color(const Image& frame) {
    if (frame.empty()) throw std::invalid_argument("dc_color: empty frame");
    std::uint64_t sum[3] = {0, 0, 0};
    for (std::size_t i = 0; i < frame.rgb.size(); i += 3) {
        sum[0] += frame.rgb[i];
        sum[1] += frame.rgb[i + 1];
        sum[2] += frame.rgb[i + 2];
    }
    const std::uint64_t n = static_cast<std::uint64_t>(frame.width) * frame.height;
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        // round half-up: floor(mean + 1/2) = (2*sum + n) / (2*n) in integers
        out[static_cast<std::size_t>(c)] =
            static_cast<std::uint8_t>((2 * sum[c] + n) / (2 * n));
    }
    return out;
}

Image resize_nearest(const Image& src, int out_w, int out_h) {
    if (src.empty()) throw std::invalid_argument("resize_nearest: empty image");
    if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resize_nearest: bad output size");
    Image out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        int sy = static_cast<int>((static_cast<std::int64_t>(y) * 2 + 1) * src.height / (2 * out_h));
        sy = std::min(sy, src.height - 1);
        for (int x = 0; x < out_w; ++x) {
            int sx = static_cast<int>((static_cast<std::int64_t>(x) * 2 + 1) * src.width / (2 * out_w));
            sx = std::min(sx, src.width - 1);
            out.set(x, y, src.at(sx, sy));
        }
    }
    return out;
}

Image crop(const Image& src, int x, int y, int w, int h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("crop: bad crop size");
    if (x < 0 || y < 0 || x + w > src.width || y + h > src.height) {
        throw std::invalid_argument("crop: region outside image");
    }
    Image out(w, h);
    for (int r = 0; r < h; ++r) {
        const std::uint8_t* s = src.px(x, y + r);
        std::uint8_t* d = out.px(0, r);
        std::copy(s, s + static_cast<std::size_t>(w) * 3, d);
    }
    return out;
}

} // namespace herd
