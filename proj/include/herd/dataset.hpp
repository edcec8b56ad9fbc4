#pragma once

#include <optional>
#include <string>
#include <vector>

#include "herd/geometry.hpp"
#include "herd/image.hpp"
#include "herd/refine.hpp"

namespace herd {

struct FrameInfo {
    std::string frame_id;
    double timestamp = 0.0; // seconds since day start
    std::string image_path;
    int width = 0;
    int height = 0;
};

struct DayRecord {
    std::string day_id; // ISO date
    std::vector<FrameInfo> frames;
};

struct DatasetManifest {
    std::vector<DayRecord> days;

    const FrameInfo* find_frame(const std::string& frame_id) const;
    std::size_t frame_count() const;
    void validate() const; // throws on invariant violations
};

struct Annotation {
    Aabb box;
    Mask mask;
    std::string identity;
    std::optional<std::string> track_id;
};

struct FrameAnnotations {
    std::string frame_id;
    std::vector<Annotation> items;
};

struct AnnotationSet {
    std::vector<FrameAnnotations> frames;
    const FrameAnnotations* find(const std::string& frame_id) const;
};

struct FrameDetections {
    std::string frame_id;
    std::vector<Detection> items;
};

struct DetectionSet {
    std::vector<FrameDetections> frames;
    const FrameDetections* find(const std::string& frame_id) const;
};

// File formats (see README): manifest.json is a single JSON document with a
// version field; detections.jsonl / annotations.jsonl are line-delimited JSON
// with a leading {"version":1} record. Loaders validate every invariant and
// raise distinct diagnostics (malformed record, RLE length mismatch,
// duplicate identity, unknown frame_id).
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

DetectionSet load_detections(const std::string& path, const DatasetManifest& manifest);
void save_detections(const DetectionSet& dets, const std::string& path);

AnnotationSet load_annotations(const std::string& path, const DatasetManifest& manifest);
void save_annotations(const AnnotationSet& anns, const std::string& path);

// Greedily keeps the first frame at or after each whole-second boundary,
// boundaries starting from the first frame's second.
std::vector<FrameInfo> sample_once_per_second(const std::vector<FrameInfo>& frames);

// Identity-bearing patch: tight AABB crop of the mask, foreground from the
// frame, background set to the frame's DC color, resized to a square.
struct RgbMaskSample {
    Image pixels;
    double timestamp = 0.0;
    std::string day_id;
    std::optional<std::string> identity;
    std::string source_track;
    Rgb background = {0, 0, 0};
};

RgbMaskSample build_rgb_mask(const Image& frame, const Mask& mask, int out_resolution);

// On-disk sample index (samples.jsonl next to one PNG per sample).
struct SampleMeta {
    std::string sample_id;
    std::string day_id;
    double timestamp = 0.0;
    std::optional<std::string> identity;
    std::string source_track;
    std::string path;
    Rgb background = {0, 0, 0};
};

std::vector<SampleMeta> load_sample_index(const std::string& path);
void save_sample_index(const std::vector<SampleMeta>& samples, const std::string& path);

} // namespace herd
