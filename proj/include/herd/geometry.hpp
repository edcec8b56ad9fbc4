#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace herd {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned box, (x,y) = top-left corner, in pixels. Never clipped
// implicitly; callers decide whether frame clipping applies.
struct Aabb {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }
};

bool operator==(const Aabb& a, const Aabb& b);

// Oriented box: center, dims, rotation. Canonical form keeps w >= h and
// theta in [-pi/2, pi/2); equal dims tie-break to the smaller theta.
struct Obb {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;

    static Obb canonical(double cx, double cy, double w, double h, double theta);

    std::array<Vec2, 4> corners() const; // counter-clockwise winding
    double area() const { return w * h; }
};

// Binary foreground mask stored as row-major run-length counts, alternating
// background/foreground with the background count first (possibly 0).
// Construction canonicalizes: interior zero-length runs are merged away.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, std::vector<std::uint32_t> runs);

    static Mask from_bitmap(int width, int height, const std::vector<std::uint8_t>& bitmap);
    std::vector<std::uint8_t> to_bitmap() const;

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint32_t>& runs() const { return runs_; }
    std::uint64_t foreground_area() const { return foreground_; }
    bool empty() const { return foreground_ == 0; }

    // per-row foreground column extents as (row, min_col, max_col)
    std::vector<std::array<int, 3>> row_extents() const;

    bool pixel(int x, int y) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> runs_;
    std::uint64_t foreground_ = 0;
};

bool operator==(const Mask& a, const Mask& b);

double aabb_iou(const Aabb& a, const Aabb& b);
double obb_iou(const Obb& a, const Obb& b);

// nullopt when both masks are empty (the ratio is undefined); throws
// std::invalid_argument on grid dimension mismatch.
std::optional<double> mask_iou(const Mask& a, const Mask& b);

std::uint64_t mask_intersection_area(const Mask& a, const Mask& b);

// Tight axis-aligned bounds of the foreground; throws on empty mask.
Aabb mask_to_aabb(const Mask& m);

// Minimum-area enclosing rectangle of the foreground pixel squares
// (convex hull + rotating calipers). A pixel (i,j) occupies the unit
// square [i,i+1)x[j,j+1), so a single pixel yields a 1x1 box.
// Throws on empty mask.
Obb min_area_obb(const Mask& m);

// Sutherland-Hodgman clip of one convex CCW polygon against another.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);
double polygon_area(const std::vector<Vec2>& poly); // shoelace, absolute

} // namespace herd
