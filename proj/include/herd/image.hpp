#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace herd {

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb; // width*height*3, row-major

    Image() = default;
    Image(int w, int h, Rgb fill = {0, 0, 0});

    std::uint8_t* px(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    Rgb at(int x, int y) const {
        const std::uint8_t* p = px(x, y);
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c) {
        std::uint8_t* p = px(x, y);
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }
    bool empty() const { return width <= 0 || height <= 0; }
};

bool operator==(const Image& a, const Image& b);

Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path);

// Per-channel arithmetic mean of the whole frame (the zero-frequency term),
// rounded half-up to integer channel values. Throws on an empty frame.
Rgb dc_color(const Image& frame);

// Nearest-neighbor resample to out_w x out_h.
Image resize_nearest(const Image& src, int out_w, int out_h);

Image crop(const Image& src, int x, int y, int w, int h);

} // namespace herd
