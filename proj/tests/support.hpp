#pragma once

#include "herd/dataset.hpp"
#include "herd/geometry.hpp"
#include "herd/image.hpp"
#include "herd/rng.hpp"

#include <string>
#include <vector>

namespace testsup {

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const;

private:
    std::string path_;
};

std::string read_file(const std::string& path);

// Random test-data builders. All deterministic via the passed rng.
herd::Mask random_mask(herd::Rng& rng, int w, int h, double density);
herd::Aabb random_box(herd::Rng& rng, double span, double min_side, double max_side);
herd::Obb random_obb(herd::Rng& rng, double span, double min_side, double max_side);

// 1x1-pixel-tall boxes on a line give exact rational IoUs; handy for
// hand-building match scenarios.
herd::Aabb strip_box(double x, double w, double y = 0.0);

// Small solid-color sample for embedder tests.
herd::RgbMaskSample color_sample(int resolution, herd::Rgb color, const std::string& day,
                                 double timestamp, const std::string& identity);

} // namespace testsup
