#pragma once

#include "herd/dataset.hpp"
#include "herd/geometry.hpp"
#include "herd/refine.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace herd {

enum class GeometryMode { kAabb, kObb, kMask };

enum class TpAccuracyMode {
    kFractionWellDetected, // fraction of individuals whose average IoU clears the threshold
    kMeanIouWellDetected   // mean IoU over those individuals
};

struct MatchPair {
    std::string gt_identity;
    std::size_t det_index = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::string frame_id;
    std::vector<MatchPair> pairs;
    std::vector<std::string> unmatched_gt;
    std::vector<std::size_t> unmatched_det;

    std::size_t gt_count() const { return pairs.size() + unmatched_gt.size(); }
    std::size_t det_count() const { return pairs.size() + unmatched_det.size(); }
};

struct FrameStats {
    std::string frame_id;
    std::optional<double> mean_iou;   // null when the frame has no ground truth
    std::optional<double> usage_rate; // null when the frame has no detections
};

struct LocalisationReport {
    double mean_iou = 0.0;
    double tp_accuracy = 0.0;
    std::optional<double> usage_rate; // null when there are no detections at all
    double matching_rate = 0.0;
    std::vector<FrameStats> per_frame;
    std::map<std::string, double> per_individual;
};

/**
 * One-to-one matching between a frame's annotations and detections that
 * maximizes total IoU; zero-IoU pairs are dropped afterwards. Mode kMask
 * requires masks on both sides; kObb derives boxes from masks when present
 * and falls back to the axis-aligned box otherwise.
 */
MatchResult match_frame(const FrameAnnotations& gt, const FrameDetections& dets,
                        GeometryMode mode);

/**
 * Majority-vote association from detection track_id to ground-truth identity
 * over a clip's match results. Ties go to the lexicographically smallest
 * identity.
 */
std::map<std::string, std::string> associate_tracks(const std::vector<MatchResult>& matches,
                                                    const std::vector<FrameDetections>& dets);

/**
 * Per identity, the mean IoU over every frame whose ground truth contains the
 * identity; frames where it went unmatched contribute 0.
 */
std::map<std::string, double> per_individual_iou(const std::vector<MatchResult>& matches);

LocalisationReport localisation_metrics(const std::vector<MatchResult>& matches,
                                        double well_detected_threshold = 0.7,
                                        TpAccuracyMode tp_mode = TpAccuracyMode::kFractionWellDetected);

} // namespace herd
