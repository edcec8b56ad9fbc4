#include "support.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace fs = std::filesystem;

namespace testsup {

namespace {
std::atomic<unsigned> g_tempdir_counter{0};
}

TempDir::TempDir(const std::string& prefix) {
    const unsigned n = g_tempdir_counter.fetch_add(1);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s-%d-%u", prefix.c_str(), static_cast<int>(::getpid()), n);
    fs::path p = fs::temp_directory_path() / buf;
    fs::remove_all(p);
    fs::create_directories(p);
    path_ = p.string();
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const {
    return (fs::path(path_) / name).string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

herd::Mask random_mask(herd::Rng& rng, int w, int h, double density) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
    for (auto& b : bits) b = rng.bernoulli(density) ? 1 : 0;
    return herd::Mask::from_bitmap(w, h, bits);
}

herd::Aabb random_box(herd::Rng& rng, double span, double min_side, double max_side) {
    herd::Aabb b;
    b.w = rng.uniform(min_side, max_side);
    b.h = rng.uniform(min_side, max_side);
    b.x = rng.uniform(0.0, span - b.w);
    b.y = rng.uniform(0.0, span - b.h);
    return b;
}

herd::Obb random_obb(herd::Rng& rng, double span, double min_side, double max_side) {
    const double w = rng.uniform(min_side, max_side);
    const double h = rng.uniform(min_side, max_side);
    const double margin = 0.5 * std::sqrt(w * w + h * h);
    return herd::Obb::canonical(rng.uniform(margin, span - margin),
                                rng.uniform(margin, span - margin), w, h,
                                rng.uniform(-1.5707963267948966, 1.5707963267948966));
}

herd::Aabb strip_box(double x, double w, double y) { return {x, y, w, 1.0}; }

herd::RgbMaskSample color_sample(int resolution, herd::Rgb color, const std::string& day,
                                 double timestamp, const std::string& identity) {
    herd::RgbMaskSample s;
    s.pixels = herd::Image(resolution, resolution, color);
    s.day_id = day;
    s.timestamp = timestamp;
    s.identity = identity;
    s.source_track = identity;
    s.background = color;
    return s;
}

} // namespace testsup
