#pragma once

#include <optional>
#include <string>
#include <vector>

#include "herd/geometry.hpp"

namespace herd {

// How the 2.5%-7.5% size gate reads a box against its frame. Area is the
// default (a percentage of a frame is an area); the side and aspect readings
// stay selectable for experimentation.
enum class RatioMode {
    kArea,   // box area / frame area
    kSide,   // max(w/frame_w, h/frame_h)
    kAspect, // min(w,h) / max(w,h), frame-independent
};

struct RefineConfig {
    double area_ratio_lo = 0.025;
    double area_ratio_hi = 0.075;
    double nms_iou_threshold = 0.5;
    double score_floor = 0.0;
    RatioMode ratio_mode = RatioMode::kArea;
};

struct Detection {
    std::string frame_id;
    Aabb box;
    double score = 0.0;
    std::optional<Mask> mask;
    std::optional<std::string> track_id;
};

bool operator==(const Detection& a, const Detection& b);

// Keeps detections whose size ratio lies in [lo, hi] (closed interval);
// input order preserved.
std::vector<Detection> area_ratio_filter(const std::vector<Detection>& dets, int frame_w,
                                         int frame_h, const RefineConfig& cfg);

// Greedy descending-score suppression on axis-aligned IoU. Ties broken by
// (score desc, x asc, y asc). Survivors come out in pick order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

// area_ratio_filter, then nms, then the score-floor cut. Idempotent.
std::vector<Detection> refine(const std::vector<Detection>& dets, int frame_w, int frame_h,
                              const RefineConfig& cfg);

} // namespace herd
