#include "herd/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace herd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::runtime_error(where + ": " + what);
}

json parse_line(const std::string& where, const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        fail(where, std::string("malformed record: ") + e.what());
    }
}

Aabb box_from_json(const std::string& where, const json& j) {
    if (!j.is_array() || j.size() != 4) fail(where, "malformed box, expected [x,y,w,h]");
    Aabb b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!(b.w > 0.0) || !(b.h > 0.0)) fail(where, "malformed box, non-positive size");
    return b;
}

json box_to_json(const Aabb& b) { return json::array({b.x, b.y, b.w, b.h}); }

Mask mask_from_json(const std::string& where, const json& counts, const FrameInfo& frame) {
    std::vector<std::uint32_t> runs;
    if (!counts.is_array()) fail(where, "malformed rle, expected an array of counts");
    runs.reserve(counts.size());
    for (const auto& c : counts) {
        if (!c.is_number_unsigned()) fail(where, "malformed rle, counts must be non-negative integers");
        runs.push_back(c.get<std::uint32_t>());
    }
    try {
        return Mask(frame.width, frame.height, std::move(runs));
    } catch (const std::invalid_argument& e) {
        fail(where, std::string("rle length mismatch for frame \"") + frame.frame_id + "\": " + e.what());
    }
}

} // namespace

const FrameInfo* DatasetManifest::find_frame(const std::string& frame_id) const {
    for (const DayRecord& d : days) {
        for (const FrameInfo& f : d.frames) {
            if (f.frame_id == frame_id) return &f;
        }
    }
    return nullptr;
}

std::size_t DatasetManifest::frame_count() const {
    std::size_t n = 0;
    for (const DayRecord& d : days) n += d.frames.size();
    return n;
}

void DatasetManifest::validate() const {
    std::unordered_set<std::string> ids;
    std::unordered_set<std::string> day_ids;
    for (const DayRecord& d : days) {
        if (!day_ids.insert(d.day_id).second) {
            fail("manifest", "duplicate day_id \"" + d.day_id + "\"");
        }
        double prev = -1.0;
        bool first = true;
        for (const FrameInfo& f : d.frames) {
            if (!ids.insert(f.frame_id).second) {
                fail("manifest", "duplicate frame_id \"" + f.frame_id + "\"");
            }
            if (f.width <= 0 || f.height <= 0) {
                fail("manifest", "frame \"" + f.frame_id + "\" has non-positive dimensions");
            }
            if (!first && !(f.timestamp > prev)) {
                fail("manifest", "timestamps not strictly increasing in day \"" + d.day_id + "\"");
            }
            prev = f.timestamp;
            first = false;
        }
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("manifest", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("manifest", std::string("malformed file: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) fail("manifest", "unsupported version");
        DatasetManifest m;
        for (const auto& dj : j.at("days")) {
            DayRecord day;
            day.day_id = dj.at("day_id").get<std::string>();
            for (const auto& fj : dj.at("frames")) {
                FrameInfo f;
                f.frame_id = fj.at("frame_id").get<std::string>();
                f.timestamp = fj.at("timestamp").get<double>();
                f.image_path = fj.at("image_path").get<std::string>();
                f.width = fj.at("width").get<int>();
                f.height = fj.at("height").get<int>();
                day.frames.push_back(std::move(f));
            }
            m.days.push_back(std::move(day));
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        fail("manifest", std::string("malformed file: ") + e.what());
    }
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json days = json::array();
    for (const DayRecord& d : m.days) {
        json frames = json::array();
        for (const FrameInfo& f : d.frames) {
            frames.push_back({{"frame_id", f.frame_id},
                              {"timestamp", f.timestamp},
                              {"image_path", f.image_path},
                              {"width", f.width},
                              {"height", f.height}});
        }
        days.push_back({{"day_id", d.day_id}, {"frames", std::move(frames)}});
    }
    json j{{"version", 1}, {"days", std::move(days)}};
    std::ofstream out(path);
    if (!out) fail("manifest", "cannot write " + path);
    out << j.dump(2) << "\n";
}

const FrameAnnotations* AnnotationSet::find(const std::string& frame_id) const {
    for (const FrameAnnotations& f : frames) {
        if (f.frame_id == frame_id) return &f;
    }
    return nullptr;
}

const FrameDetections* DetectionSet::find(const std::string& frame_id) const {
    for (const FrameDetections& f : frames) {
        if (f.frame_id == frame_id) return &f;
    }
    return nullptr;
}

namespace {

// Shared jsonl scaffolding: a leading {"version":1} record, then one record
// per frame.
template <typename PerFrame>
void load_jsonl(const std::string& path, const std::string& label, PerFrame&& per_frame) {
    std::ifstream in(path);
    if (!in) fail(label, "cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    bool saw_version = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = label + " line " + std::to_string(lineno);
        json j = parse_line(where, line);
        if (!saw_version) {
            if (!j.contains("version")) fail(where, "missing leading version record");
            if (j["version"].get<int>() != 1) fail(where, "unsupported version");
            saw_version = true;
            continue;
        }
        per_frame(where, j);
    }
    if (!saw_version) fail(label, "empty file, expected a version record");
}

} // namespace

DetectionSet load_detections(const std::string& path, const DatasetManifest& manifest) {
    DetectionSet out;
    std::unordered_set<std::string> seen_frames;
    load_jsonl(path, "detections", [&](const std::string& where, const json& j) {
        try {
            FrameDetections fd;
            fd.frame_id = j.at("frame_id").get<std::string>();
            const FrameInfo* frame = manifest.find_frame(fd.frame_id);
            if (!frame) fail(where, "unknown frame_id \"" + fd.frame_id + "\"");
            if (!seen_frames.insert(fd.frame_id).second) {
                fail(where, "duplicate record for frame \"" + fd.frame_id + "\"");
            }
            for (const auto& dj : j.at("detections")) {
                Detection d;
                d.frame_id = fd.frame_id;
                d.box = box_from_json(where, dj.at("box"));
                d.score = dj.at("score").get<double>();
                if (d.score < 0.0 || d.score > 1.0) fail(where, "score outside [0,1]");
                if (dj.contains("track_id")) d.track_id = dj["track_id"].get<std::string>();
                if (dj.contains("rle")) d.mask = mask_from_json(where, dj["rle"], *frame);
                fd.items.push_back(std::move(d));
            }
            out.frames.push_back(std::move(fd));
        } catch (const json::exception& e) {
            fail(where, std::string("malformed record: ") + e.what());
        }
    });
    return out;
}

void save_detections(const DetectionSet& dets, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("detections", "cannot write " + path);
    out << json{{"version", 1}}.dump() << "\n";
    for (const FrameDetections& fd : dets.frames) {
        json items = json::array();
        for (const Detection& d : fd.items) {
            json dj{{"box", box_to_json(d.box)}, {"score", d.score}};
            if (d.track_id) dj["track_id"] = *d.track_id;
            if (d.mask) dj["rle"] = d.mask->runs();
            items.push_back(std::move(dj));
        }
        out << json{{"frame_id", fd.frame_id}, {"detections", std::move(items)}}.dump() << "\n";
    }
}

AnnotationSet load_annotations(const std::string& path, const DatasetManifest& manifest) {
    AnnotationSet out;
    std::unordered_set<std::string> seen_frames;
    load_jsonl(path, "annotations", [&](const std::string& where, const json& j) {
        try {
            FrameAnnotations fa;
            fa.frame_id = j.at("frame_id").get<std::string>();
            const FrameInfo* frame = manifest.find_frame(fa.frame_id);
            if (!frame) fail(where, "unknown frame_id \"" + fa.frame_id + "\"");
            if (!seen_frames.insert(fa.frame_id).second) {
                fail(where, "duplicate record for frame \"" + fa.frame_id + "\"");
            }
            std::unordered_set<std::string> identities;
            for (const auto& aj : j.at("annotations")) {
                Annotation a;
                a.box = box_from_json(where, aj.at("box"));
                a.identity = aj.at("identity").get<std::string>();
                if (!identities.insert(a.identity).second) {
                    fail(where, "duplicate identity \"" + a.identity + "\" in frame \"" + fa.frame_id + "\"");
                }
                if (aj.contains("track_id")) a.track_id = aj["track_id"].get<std::string>();
                a.mask = mask_from_json(where, aj.at("rle"), *frame);
                fa.items.push_back(std::move(a));
            }
            out.frames.push_back(std::move(fa));
        } catch (const json::exception& e) {
            fail(where, std::string("malformed record: ") + e.what());
        }
    });
    return out;
}

void save_annotations(const AnnotationSet& anns, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("annotations", "cannot write " + path);
    out << json{{"version", 1}}.dump() << "\n";
    for (const FrameAnnotations& fa : anns.frames) {
        json items = json::array();
        for (const Annotation& a : fa.items) {
            json aj{{"box", box_to_json(a.box)}, {"identity", a.identity}, {"rle", a.mask.runs()}};
            if (a.track_id) aj["track_id"] = *a.track_id;
            items.push_back(std::move(aj));
        }
        out << json{{"frame_id", fa.frame_id}, {"annotations", std::move(items)}}.dump() << "\n";
    }
}

std::vector<FrameInfo> sample_once_per_second(const std::vector<FrameInfo>& frames) {
    std::vector<FrameInfo> out;
    if (frames.empty()) return out;
    double next_boundary = std::floor(frames.front().timestamp);
    for (const FrameInfo& f : frames) {
        if (f.timestamp >= next_boundary) {
            out.push_back(f);
            next_boundary = std::floor(f.timestamp) + 1.0;
        }
    }
    return out;
}

RgbMaskSample build_rgb_mask(const Image& frame, const Mask& mask, int out_resolution) {
    if (mask.empty()) throw std::invalid_argument("build_rgb_mask: empty mask");
    if (mask.width() != frame.width || mask.height() != frame.height) {
        throw std::invalid_argument("build_rgb_mask: mask does not fit frame");
    }
    if (out_resolution <= 0) throw std::invalid_argument("build_rgb_mask: bad output resolution");

    const Rgb dc = dc_color(frame);
    const Aabb bounds = mask_to_aabb(mask);
    const int x0 = static_cast<int>(bounds.x);
    const int y0 = static_cast<int>(bounds.y);
    const int w = static_cast<int>(bounds.w);
    const int h = static_cast<int>(bounds.h);

    Image patch(w, h, dc);
    const std::vector<std::uint8_t> bits = mask.to_bitmap();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx =
                static_cast<std::size_t>(y0 + y) * frame.width + static_cast<std::size_t>(x0 + x);
            if (bits[idx]) patch.set(x, y, frame.at(x0 + x, y0 + y));
        }
    }

    RgbMaskSample s;
    s.pixels = resize_nearest(patch, out_resolution, out_resolution);
    s.background = dc;
    return s;
}

std::vector<SampleMeta> load_sample_index(const std::string& path) {
    std::vector<SampleMeta> out;
    load_jsonl(path, "samples", [&](const std::string& where, const json& j) {
        try {
            SampleMeta s;
            s.sample_id = j.at("sample_id").get<std::string>();
            s.day_id = j.at("day_id").get<std::string>();
            s.timestamp = j.at("timestamp").get<double>();
            if (j.contains("identity") && !j["identity"].is_null()) {
                s.identity = j["identity"].get<std::string>();
            }
            s.source_track = j.at("source_track").get<std::string>();
            s.path = j.at("path").get<std::string>();
            const auto& bg = j.at("background");
            for (int c = 0; c < 3; ++c) {
                s.background[static_cast<std::size_t>(c)] =
                    static_cast<std::uint8_t>(bg.at(static_cast<std::size_t>(c)).get<int>());
            }
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            fail(where, std::string("malformed record: ") + e.what());
        }
    });
    return out;
}

void save_sample_index(const std::vector<SampleMeta>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("samples", "cannot write " + path);
    out << json{{"version", 1}}.dump() << "\n";
    for (const SampleMeta& s : samples) {
        json j{{"sample_id", s.sample_id}, {"day_id", s.day_id},   {"timestamp", s.timestamp},
               {"source_track", s.source_track}, {"path", s.path},
               {"background", json::array({s.background[0], s.background[1], s.background[2]})}};
        if (s.identity) j["identity"] = *s.identity;
        out << j.dump() << "\n";
    }
}

} // namespace herd
