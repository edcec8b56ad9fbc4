#include "herd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

// wrap into [-pi/2, pi/2)
double wrap_theta(double t) {
    t = std::remainder(t, kPi);
    if (t >= kHalfPi) t -= kPi;
    if (t < -kHalfPi) t += kPi;
    return t;
}

} // namespace

bool operator==(const Aabb& a, const Aabb& b) {
    return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
}

Obb Obb::canonical(double cx, double cy, double w, double h, double theta) {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("Obb::canonical: dimensions must be positive");
    }
    if (w < h) {
        std::swap(w, h);
        theta += kHalfPi;
    }
    theta = wrap_theta(theta);
    if (w == h) {
        theta = std::min(theta, wrap_theta(theta + kHalfPi));
    }
    return Obb{cx, cy, w, h, theta};
}

std::array<Vec2, 4> Obb::corners() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double hw = 0.5 * w;
    const double hh = 0.5 * h;
    const double dx[4] = {-hw, hw, hw, -hw};
    const double dy[4] = {-hh, -hh, hh, hh};
    std::array<Vec2, 4> out;
    for (int i = 0; i < 4; ++i) {
        out[i] = Vec2{cx + dx[i] * c - dy[i] * s, cy + dx[i] * s + dy[i] * c};
    }
    return out;
}

Mask::Mask(int width, int height, std::vector<std::uint32_t> runs) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("Mask: grid dimensions must be positive");
    }
    // canonicalize: drop zero-length runs, merge adjacent same-parity runs
    std::vector<std::pair<int, std::uint64_t>> seq;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const int v = static_cast<int>(i % 2);
        const std::uint64_t c = runs[i];
        if (c == 0) continue;
        if (!seq.empty() && seq.back().first == v) {
            seq.back().second += c;
        } else {
            seq.emplace_back(v, c);
        }
    }
    std::uint64_t total = 0;
    std::vector<std::uint32_t> canon;
    if (seq.empty() || seq.front().first == 1) canon.push_back(0);
    for (const auto& [v, c] : seq) {
        (void)v;
        canon.push_back(static_cast<std::uint32_t>(c));
        total += c;
        if (v == 1) foreground_ += c;
    }
    if (total != static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height)) {
        throw std::invalid_argument("Mask: run lengths do not sum to width*height");
    }
    width_ = width;
    height_ = height;
    runs_ = std::move(canon);
}

Mask Mask::from_bitmap(int width, int height, const std::vector<std::uint8_t>& bitmap) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("Mask: grid dimensions must be positive");
    }
    if (bitmap.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::invalid_argument("Mask: bitmap size does not match grid");
    }
    std::vector<std::uint32_t> runs;
    std::uint8_t cur = 0;
    std::uint32_t count = 0;
    for (std::uint8_t px : bitmap) {
        const std::uint8_t v = px ? 1 : 0;
        if (v == cur) {
            ++count;
        } else {
            runs.push_back(count);
            cur = v;
            count = 1;
        }
    }
    runs.push_back(count);
    return Mask(width, height, std::move(runs));
}

std::vector<std::uint8_t> Mask::to_bitmap() const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_, 0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        const std::uint8_t v = static_cast<std::uint8_t>(i % 2);
        for (std::uint32_t k = 0; k < runs_[i]; ++k) out[pos++] = v;
    }
    return out;
}

std::vector<std::array<int, 3>> Mask::row_extents() const {
    std::vector<std::array<int, 2>> ext(static_cast<std::size_t>(height_), {-1, -1});
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        const std::uint64_t len = runs_[i];
        if (i % 2 == 1 && len > 0) {
            const std::uint64_t last = pos + len - 1;
            const int r0 = static_cast<int>(pos / width_);
            const int r1 = static_cast<int>(last / width_);
            for (int r = r0; r <= r1; ++r) {
                const int c0 = (r == r0) ? static_cast<int>(pos % width_) : 0;
                const int c1 = (r == r1) ? static_cast<int>(last % width_) : width_ - 1;
                auto& e = ext[static_cast<std::size_t>(r)];
                if (e[0] < 0 || c0 < e[0]) e[0] = c0;
                if (c1 > e[1]) e[1] = c1;
            }
        }
        pos += len;
    }
    std::vector<std::array<int, 3>> out;
    for (int r = 0; r < height_; ++r) {
        if (ext[static_cast<std::size_t>(r)][0] >= 0) {
            out.push_back({r, ext[static_cast<std::size_t>(r)][0], ext[static_cast<std::size_t>(r)][1]});
        }
    }
    return out;
}

bool Mask::pixel(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
    const std::uint64_t target = static_cast<std::uint64_t>(y) * width_ + x;
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
        pos += runs_[i];
        if (target < pos) return i % 2 == 1;
    }
    return false;
}

bool operator==(const Mask& a, const Mask& b) {
    return a.width() == b.width() && a.height() == b.height() && a.runs() == b.runs();
}

double aabb_iou(const Aabb& a, const Aabb& b) {
    const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    const double iou = inter / uni;
    return std::clamp(iou, 0.0, 1.0);
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
    std::vector<Vec2> poly = subject;
    std::vector<Vec2> next;
    const std::size_t n = clip.size();
    for (std::size_t e = 0; e < n && !poly.empty(); ++e) {
        const Vec2 a = clip[e];
        const Vec2 b = clip[(e + 1) % n];
        const double ex = b.x - a.x;
        const double ey = b.y - a.y;
        next.clear();
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 p = poly[i];
            const Vec2 q = poly[(i + 1) % m];
            const double sp = ex * (p.y - a.y) - ey * (p.x - a.x);
            const double sq = ex * (q.y - a.y) - ey * (q.x - a.x);
            const bool in_p = sp >= 0.0; // left of edge for a CCW clip polygon
            const bool in_q = sq >= 0.0;
            if (in_p) next.push_back(p);
            if (in_p != in_q) {
                const double t = sp / (sp - sq);
                next.push_back(Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
            }
        }
        poly.swap(next);
    }
    return poly;
}

double polygon_area(const std::vector<Vec2>& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    return std::abs(s) * 0.5;
}

double obb_iou(const Obb& a, const Obb& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::vector<Vec2> pa(ca.begin(), ca.end());
    const std::vector<Vec2> pb(cb.begin(), cb.end());
    double inter = polygon_area(clip_convex(pa, pb));
    const double area_a = a.area();
    const double area_b = b.area();
    inter = std::min(inter, std::min(area_a, area_b));
    const double uni = area_a + area_b - inter;
    if (!(uni > 0.0) || !(inter > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::uint64_t mask_intersection_area(const Mask& a, const Mask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument("mask_intersection_area: grid dimension mismatch");
    }
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    std::size_t ia = 0, ib = 0;
    std::uint64_t la = ra.empty() ? 0 : ra[0];
    std::uint64_t lb = rb.empty() ? 0 : rb[0];
    std::uint64_t inter = 0;
    while (ia < ra.size() && ib < rb.size()) {
        const std::uint64_t step = std::min(la, lb);
        if (ia % 2 == 1 && ib % 2 == 1) inter += step;
        la -= step;
        lb -= step;
        if (la == 0) {
            ++ia;
            if (ia < ra.size()) la = ra[ia];
        }
        if (lb == 0) {
            ++ib;
            if (ib < rb.size()) lb = rb[ib];
        }
    }
    return inter;
}

std::optional<double> mask_iou(const Mask& a, const Mask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument("mask_iou: grid dimension mismatch");
    }
    const std::uint64_t fa = a.foreground_area();
    const std::uint64_t fb = b.foreground_area();
    if (fa == 0 && fb == 0) return std::nullopt;
    const std::uint64_t inter = mask_intersection_area(a, b);
    const std::uint64_t uni = fa + fb - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Aabb mask_to_aabb(const Mask& m) {
    if (m.empty()) throw std::invalid_argument("mask_to_aabb: empty mask");
    const auto rows = m.row_extents();
    int minx = m.width(), maxx = -1;
    const int miny = rows.front()[0];
    const int maxy = rows.back()[0];
    for (const auto& r : rows) {
        minx = std::min(minx, r[1]);
        maxx = std::max(maxx, r[2]);
    }
    return Aabb{static_cast<double>(minx), static_cast<double>(miny),
                static_cast<double>(maxx - minx + 1), static_cast<double>(maxy - miny + 1)};
}

namespace {

struct IPoint {
    std::int64_t x;
    std::int64_t y;
    bool operator<(const IPoint& o) const { return x < o.x || (x == o.x && y < o.y); }
    bool operator==(const IPoint& o) const { return x == o.x && y == o.y; }
};

std::int64_t cross(const IPoint& o, const IPoint& a, const IPoint& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain; collinear points dropped.
std::vector<IPoint> convex_hull(std::vector<IPoint> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<IPoint> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace

Obb min_area_obb(const Mask& m) {
    if (m.empty()) throw std::invalid_argument("min_area_obb: empty mask");

    // The hull over pixel-square corners only needs each row's extreme columns.
    std::vector<IPoint> pts;
    for (const auto& r : m.row_extents()) {
        const std::int64_t y = r[0];
        const std::int64_t x0 = r[1];
        const std::int64_t x1 = r[2] + 1;
        pts.push_back({x0, y});
        pts.push_back({x0, y + 1});
        pts.push_back({x1, y});
        pts.push_back({x1, y + 1});
    }
    const std::vector<IPoint> hull = convex_hull(std::move(pts));

    const std::size_t n = hull.size();
    double best_area = -1.0;
    double best_cx = 0, best_cy = 0, best_w = 0, best_h = 0, best_theta = 0;
    for (std::size_t e = 0; e < n; ++e) {
        const IPoint& p0 = hull[e];
        const IPoint& p1 = hull[(e + 1) % n];
        const double dx = static_cast<double>(p1.x - p0.x);
        const double dy = static_cast<double>(p1.y - p0.y);
        const double len = std::hypot(dx, dy);
        if (len == 0.0) continue;
        const double ux = dx / len, uy = dy / len;   // edge direction
        const double vx = -uy, vy = ux;              // edge normal
        double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
        for (const IPoint& q : hull) {
            const double u = ux * static_cast<double>(q.x) + uy * static_cast<double>(q.y);
            const double v = vx * static_cast<double>(q.x) + vy * static_cast<double>(q.y);
            umin = std::min(umin, u);
            umax = std::max(umax, u);
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        const double w = umax - umin;
        const double h = vmax - vmin;
        const double area = w * h;
        if (best_area < 0.0 || area < best_area) {
            best_area = area;
            const double cu = 0.5 * (umin + umax);
            const double cv = 0.5 * (vmin + vmax);
            best_cx = ux * cu + vx * cv;
            best_cy = uy * cu + vy * cv;
            best_w = w;
            best_h = h;
            best_theta = std::atan2(uy, ux);
        }
    }
    if (best_area < 0.0) {
        // degenerate hull cannot occur for a nonempty mask of unit squares
        throw std::runtime_error("min_area_obb: degenerate hull");
    }
    return Obb::canonical(best_cx, best_cy, best_w, best_h, best_theta);
}

} // namespace herd
