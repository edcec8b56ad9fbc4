#include "herd/loceval.hpp"

#include "herd/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herd {

namespace {

Obb obb_of_annotation(const Annotation& a) { return min_area_obb(a.mask); }

Obb obb_of_detection(const Detection& d) {
    if (d.mask && d.mask->foreground_area() > 0) return min_area_obb(*d.mask);
    return Obb::canonical(d.box.x + d.box.w / 2.0, d.box.y + d.box.h / 2.0, d.box.w, d.box.h, 0.0);
}

double pair_iou(const Annotation& a, const Detection& d, GeometryMode mode) {
    switch (mode) {
    case GeometryMode::kAabb:
        return aabb_iou(a.box, d.box);
    case GeometryMode::kObb:
        return obb_iou(obb_of_annotation(a), obb_of_detection(d));
    case GeometryMode::kMask: {
        if (!d.mask) throw std::invalid_argument("match_frame: mask mode but detection has no mask");
        const std::optional<double> iou = mask_iou(a.mask, *d.mask);
        return iou.value_or(0.0);
    }
    }
    return 0.0;
}

} // namespace

MatchResult match_frame(const FrameAnnotations& gt, const FrameDetections& dets,
                        GeometryMode mode) {
    MatchResult res;
    res.frame_id = gt.frame_id;

    const std::size_t ng = gt.items.size();
    const std::size_t nd = dets.items.size();
    if (ng == 0 || nd == 0) {
        for (const Annotation& a : gt.items) res.unmatched_gt.push_back(a.identity);
        for (std::size_t j = 0; j < nd; ++j) res.unmatched_det.push_back(j);
        return res;
    }

    CostMatrix m;
    m.rows = ng;
    m.cols = nd;
    m.cost.assign(ng * nd, 0.0);
    std::vector<double> ious(ng * nd, 0.0);
    for (std::size_t i = 0; i < ng; ++i) {
        for (std::size_t j = 0; j < nd; ++j) {
            const double iou = pair_iou(gt.items[i], dets.items[j], mode);
            ious[i * nd + j] = iou;
            m.at(i, j) = -iou;
        }
    }

    const AssignmentResult assign = solve_assignment(m);
    std::vector<char> det_used(nd, 0);
    for (std::size_t i = 0; i < ng; ++i) {
        const int j = assign.assignment[i];
        const double iou = j >= 0 ? ious[i * nd + static_cast<std::size_t>(j)] : 0.0;
        if (j >= 0 && iou > 0.0) {
            res.pairs.push_back({gt.items[i].identity, static_cast<std::size_t>(j), iou});
            det_used[static_cast<std::size_t>(j)] = 1;
        } else {
            res.unmatched_gt.push_back(gt.items[i].identity);
        }
    }
    for (std::size_t j = 0; j < nd; ++j) {
        if (!det_used[j]) res.unmatched_det.push_back(j);
    }
    return res;
}

std::map<std::string, std::string> associate_tracks(const std::vector<MatchResult>& matches,
                                                    const std::vector<FrameDetections>& dets) {
    // votes[track][identity] = matched-frame count
    std::map<std::string, std::map<std::string, std::size_t>> votes;
    for (const MatchResult& m : matches) {
        const FrameDetections* frame = nullptr;
        for (const FrameDetections& fd : dets) {
            if (fd.frame_id == m.frame_id) {
                frame = &fd;
                break;
            }
        }
        if (!frame) continue;
        for (const MatchPair& p : m.pairs) {
            if (p.det_index >= frame->items.size()) continue;
            const std::optional<std::string>& track = frame->items[p.det_index].track_id;
            if (track) ++votes[*track][p.gt_identity];
        }
    }
    std::map<std::string, std::string> out;
    for (const auto& [track, counts] : votes) {
        std::size_t best = 0;
        std::string winner;
        for (const auto& [identity, n] : counts) {
            if (n > best) {
                best = n;
                winner = identity;
            }
        }
        out[track] = winner;
    }
    return out;
}

std::map<std::string, double> per_individual_iou(const std::vector<MatchResult>& matches) {
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const MatchResult& m : matches) {
        for (const MatchPair& p : m.pairs) {
            sums[p.gt_identity] += p.iou;
            ++counts[p.gt_identity];
        }
        for (const std::string& id : m.unmatched_gt) {
            sums[id] += 0.0;
            ++counts[id];
        }
    }
    std::map<std::string, double> out;
    for (const auto& [id, s] : sums) out[id] = s / static_cast<double>(counts[id]);
    return out;
}

LocalisationReport localisation_metrics(const std::vector<MatchResult>& matches,
                                        double well_detected_threshold,
                                        TpAccuracyMode tp_mode) {
    LocalisationReport rep;
    rep.per_individual = per_individual_iou(matches);

    double iou_sum = 0.0;
    std::size_t gt_total = 0;
    std::size_t det_total = 0;
    std::size_t det_used = 0;
    std::size_t gt_hit = 0;

    for (const MatchResult& m : matches) {
        double frame_iou = 0.0;
        std::size_t frame_used = 0;
        for (const MatchPair& p : m.pairs) {
            iou_sum += p.iou;
            frame_iou += p.iou;
            if (p.iou > well_detected_threshold) {
                ++det_used;
                ++frame_used;
                ++gt_hit;
            }
        }
        gt_total += m.gt_count();
        det_total += m.det_count();

        FrameStats fs;
        fs.frame_id = m.frame_id;
        if (m.gt_count() > 0) fs.mean_iou = frame_iou / static_cast<double>(m.gt_count());
        if (m.det_count() > 0) {
            fs.usage_rate = static_cast<double>(frame_used) / static_cast<double>(m.det_count());
        }
        rep.per_frame.push_back(std::move(fs));
    }

    rep.mean_iou = gt_total > 0 ? iou_sum / static_cast<double>(gt_total) : 0.0;
    if (det_total > 0) rep.usage_rate = static_cast<double>(det_used) / static_cast<double>(det_total);
    rep.matching_rate = gt_total > 0 ? static_cast<double>(gt_hit) / static_cast<double>(gt_total) : 0.0;

    std::size_t well = 0;
    double well_iou = 0.0;
    for (const auto& [id, avg] : rep.per_individual) {
        if (avg > well_detected_threshold) {
            ++well;
            well_iou += avg;
        }
    }
    const std::size_t individuals = rep.per_individual.size();
    if (tp_mode == TpAccuracyMode::kFractionWellDetected) {
        rep.tp_accuracy = individuals > 0 ? static_cast<double>(well) / static_cast<double>(individuals) : 0.0;
    } else {
        rep.tp_accuracy = well > 0 ? well_iou / static_cast<double>(well) : 0.0;
    }
    return rep;
}

} // namespace herd
