#include "herd/refine.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace herd {

bool operator==(const Detection& a, const Detection& b) {
    return a.frame_id == b.frame_id && a.box == b.box && a.score == b.score &&
           a.mask == b.mask && a.track_id == b.track_id;
}

std::vector<Detection> area_ratio_filter(const std::vector<Detection>& dets, int frame_w,
                                         int frame_h, const RefineConfig& cfg) {
    if (frame_w <= 0 || frame_h <= 0) {
        throw std::invalid_argument("area_ratio_filter: frame dimensions must be positive");
    }
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (const Detection& d : dets) {
        double ratio = 0.0;
        switch (cfg.ratio_mode) {
            case RatioMode::kArea:
                ratio = d.box.area() / (static_cast<double>(frame_w) * frame_h);
                break;
            case RatioMode::kSide:
                ratio = std::max(d.box.w / frame_w, d.box.h / frame_h);
                break;
            case RatioMode::kAspect:
                ratio = std::min(d.box.w, d.box.h) / std::max(d.box.w, d.box.h);
                break;
        }
        if (ratio >= cfg.area_ratio_lo && ratio <= cfg.area_ratio_hi) out.push_back(d);
    }
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const Detection& a = dets[i];
        const Detection& b = dets[j];
        if (a.score != b.score) return a.score > b.score;
        if (a.box.x != b.box.x) return a.box.x < b.box.x;
        return a.box.y < b.box.y;
    });
    std::vector<Detection> kept;
    std::vector<bool> suppressed(dets.size(), false);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (suppressed[i]) continue;
        kept.push_back(dets[i]);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (!suppressed[j] && aabb_iou(dets[i].box, dets[j].box) > iou_threshold) {
                suppressed[j] = true;
            }
        }
    }
    return kept;
}

std::vector<Detection> refine(const std::vector<Detection>& dets, int frame_w, int frame_h,
                              const RefineConfig& cfg) {
    std::vector<Detection> out = area_ratio_filter(dets, frame_w, frame_h, cfg);
    out = nms(out, cfg.nms_iou_threshold);
    std::erase_if(out, [&](const Detection& d) { return d.score < cfg.score_floor; });
    return out;
}

} // namespace herd
