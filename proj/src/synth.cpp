#include "herd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <stdexcept>

namespace herd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr Rgb kGround = {92, 118, 82};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = std::fmod(std::fmod(h, 1.0) + 1.0, 1.0) * 6.0;
    const int i = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    double r = 0, g = 0, b = 0;
    switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
    }
    const auto ch = [](double x) { return static_cast<std::uint8_t>(std::lround(x * 255.0)); };
    return {ch(r), ch(g), ch(b)};
}

double pattern_fraction_diff(const Image& a, const Image& b) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.rgb.size(); i += 3) {
        if (a.rgb[i] != b.rgb[i]) ++diff;
    }
    return static_cast<double>(diff) / (static_cast<double>(a.rgb.size()) / 3.0);
}

struct Body {
    std::size_t identity_index;
    double cx, cy, theta;
};

// Smallest center distance two bodies may have; overlap 0 keeps their
// bounding circles (radius = semi-major axis) apart.
double min_center_distance(const SynthConfig& cfg) {
    const double r = std::max(cfg.body_w, cfg.body_h) / 2.0;
    return std::max(0.0, 1.0 - cfg.overlap_target) * 2.0 * r;
}

bool placement_ok(const std::vector<Body>& bodies, std::size_t upto, double cx, double cy,
                  double dmin) {
    for (std::size_t i = 0; i < upto; ++i) {
        const double dx = bodies[i].cx - cx;
        const double dy = bodies[i].cy - cy;
        if (dx * dx + dy * dy < dmin * dmin) return false;
    }
    return true;
}

} // namespace

Image gen_identity_pattern(const IdentitySpec& spec) {
    if (spec.body_w <= 0 || spec.body_h <= 0) {
        throw std::invalid_argument("identity pattern: non-positive dims");
    }
    Image patch(spec.body_w, spec.body_h, {255, 255, 255});
    if (spec.solid_color) {
        for (int y = 0; y < patch.height; ++y) {
            for (int x = 0; x < patch.width; ++x) patch.set(x, y, spec.color);
        }
        return patch;
    }
    if (spec.blob_density <= 0.0) return patch;

    // Value noise: random lattice values, bilinear interpolation, threshold.
    const double cell = std::max(1.0, spec.blob_scale);
    const int gw = static_cast<int>(std::ceil(spec.body_w / cell)) + 2;
    const int gh = static_cast<int>(std::ceil(spec.body_h / cell)) + 2;
    Rng rng(mix_seed(spec.pattern_seed, stream_id("pattern")));
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = rng.uniform();

    for (int y = 0; y < spec.body_h; ++y) {
        for (int x = 0; x < spec.body_w; ++x) {
            const double gx = x / cell;
            const double gy = y / cell;
            const int x0 = static_cast<int>(gx);
            const int y0 = static_cast<int>(gy);
            const double fx = gx - x0;
            const double fy = gy - y0;
            const auto at = [&](int ix, int iy) {
                return lattice[static_cast<std::size_t>(iy) * gw + ix];
            };
            const double v = at(x0, y0) * (1 - fx) * (1 - fy) + at(x0 + 1, y0) * fx * (1 - fy) +
                             at(x0, y0 + 1) * (1 - fx) * fy + at(x0 + 1, y0 + 1) * fx * fy;
            if (v < spec.blob_density) patch.set(x, y, {0, 0, 0});
        }
    }
    return patch;
}

std::vector<IdentityAppearance> make_identities(const SynthConfig& cfg) {
    if (cfg.identities <= 0) throw std::invalid_argument("synth: need at least one identity");
    if (cfg.body_w <= 0 || cfg.body_h <= 0) throw std::invalid_argument("synth: bad body dims");

    std::vector<IdentityAppearance> out;
    Rng theta_rng(mix_seed(cfg.seed, stream_id("headings")));
    for (int i = 0; i < cfg.identities; ++i) {
        IdentityAppearance app;
        char name[16];
        std::snprintf(name, sizeof name, "cow%03d", i);
        app.spec.identity = name;
        app.spec.body_w = cfg.body_w;
        app.spec.body_h = cfg.body_h;
        app.spec.blob_density = cfg.blob_density;
        app.spec.blob_scale = cfg.blob_scale;
        app.spec.base_theta = theta_rng.uniform(-kPi, kPi);
        if (cfg.solid_colors) {
            app.spec.solid_color = true;
            app.spec.color = hsv_to_rgb(static_cast<double>(i) / cfg.identities, 0.85, 0.95);
            app.spec.pattern_seed = mix_seed(cfg.seed, stream_id("color") + i);
            app.texture = gen_identity_pattern(app.spec);
        } else {
            // Regenerate until the new pattern differs from every earlier one
            // in at least 5% of pixels.
            for (std::uint64_t attempt = 0;; ++attempt) {
                if (attempt > 64) throw std::runtime_error("synth: cannot find distinct patterns");
                app.spec.pattern_seed =
                    mix_seed(cfg.seed, stream_id("pattern") + static_cast<std::uint64_t>(i) * 131 + attempt);
                app.texture = gen_identity_pattern(app.spec);
                bool distinct = true;
                for (const IdentityAppearance& prev : out) {
                    if (pattern_fraction_diff(app.texture, prev.texture) < 0.05) {
                        distinct = false;
                        break;
                    }
                }
                if (distinct) break;
            }
        }
        out.push_back(std::move(app));
    }
    return out;
}

DayScene gen_day(const SynthConfig& cfg, const std::vector<IdentityAppearance>& identities,
                 const std::string& day_id, std::uint64_t day_seed) {
    if (cfg.frames_per_day <= 0) throw std::invalid_argument("synth: need at least one frame");
    if (cfg.frame_w <= 0 || cfg.frame_h <= 0) throw std::invalid_argument("synth: bad frame dims");
    const double margin = std::max(cfg.body_w, cfg.body_h) / 2.0 + 2.0;
    if (cfg.frame_w <= 2 * margin || cfg.frame_h <= 2 * margin) {
        throw std::invalid_argument("synth: frame too small for the body size");
    }

    Rng rng(mix_seed(day_seed, stream_id("placement")));
    const double dmin = min_center_distance(cfg);

    std::vector<Body> bodies;
    bodies.reserve(identities.size());
    for (std::size_t i = 0; i < identities.size(); ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 20000; ++attempt) {
            const double cx = rng.uniform(margin, cfg.frame_w - margin);
            const double cy = rng.uniform(margin, cfg.frame_h - margin);
            if (placement_ok(bodies, bodies.size(), cx, cy, dmin)) {
                bodies.push_back({i, cx, cy, identities[i].spec.base_theta});
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw std::invalid_argument("synth: cannot place all identities at this crowding");
        }
    }

    DayScene scene;
    scene.day.day_id = day_id;

    const double a = cfg.body_w / 2.0;
    const double b = cfg.body_h / 2.0;

    for (int f = 0; f < cfg.frames_per_day; ++f) {
        if (f > 0) {
            // Random-walk step per body; a move that would crowd or leave the
            // frame is skipped.
            for (std::size_t i = 0; i < bodies.size(); ++i) {
                const double ang = rng.uniform(0.0, 2.0 * kPi);
                const double nx = bodies[i].cx + cfg.motion_step * std::cos(ang);
                const double ny = bodies[i].cy + cfg.motion_step * std::sin(ang);
                if (nx < margin || nx > cfg.frame_w - margin || ny < margin ||
                    ny > cfg.frame_h - margin) {
                    continue;
                }
                const double keep_cx = bodies[i].cx, keep_cy = bodies[i].cy;
                bodies[i].cx = nx;
                bodies[i].cy = ny;
                bool ok = true;
                for (std::size_t j = 0; j < bodies.size(); ++j) {
                    if (j == i) continue;
                    const double dx = bodies[j].cx - nx;
                    const double dy = bodies[j].cy - ny;
                    if (dx * dx + dy * dy < dmin * dmin) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) {
                    bodies[i].cx = keep_cx;
                    bodies[i].cy = keep_cy;
                }
            }
        }
        for (Body& body : bodies) {
            body.theta = identities[body.identity_index].spec.base_theta + rng.uniform(-0.15, 0.15);
        }

        // Painter's algorithm: identity order is the fixed depth order, the
        // last listed body is closest to the camera.
        std::vector<int> owner(static_cast<std::size_t>(cfg.frame_w) * cfg.frame_h, -1);
        for (const Body& body : bodies) {
            const double reach = std::max(a, b);
            const int x0 = std::max(0, static_cast<int>(std::floor(body.cx - reach)));
            const int x1 = std::min(cfg.frame_w - 1, static_cast<int>(std::ceil(body.cx + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(body.cy - reach)));
            const int y1 = std::min(cfg.frame_h - 1, static_cast<int>(std::ceil(body.cy + reach)));
            const double c = std::cos(body.theta), s = std::sin(body.theta);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x + 0.5 - body.cx;
                    const double dy = y + 0.5 - body.cy;
                    const double u = c * dx + s * dy;
                    const double v = -s * dx + c * dy;
                    if ((u / a) * (u / a) + (v / b) * (v / b) <= 1.0) {
                        owner[static_cast<std::size_t>(y) * cfg.frame_w + x] =
                            static_cast<int>(body.identity_index);
                    }
                }
            }
        }

        Image frame(cfg.frame_w, cfg.frame_h, kGround);
        std::vector<std::vector<std::uint8_t>> bitmaps(
            identities.size(),
            std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.frame_w) * cfg.frame_h, 0));
        for (int y = 0; y < cfg.frame_h; ++y) {
            for (int x = 0; x < cfg.frame_w; ++x) {
                const int id = owner[static_cast<std::size_t>(y) * cfg.frame_w + x];
                if (id < 0) continue;
                bitmaps[static_cast<std::size_t>(id)][static_cast<std::size_t>(y) * cfg.frame_w + x] = 1;
                const Body& body = bodies[static_cast<std::size_t>(id)];
                const double c = std::cos(body.theta), si = std::sin(body.theta);
                const double dx = x + 0.5 - body.cx;
                const double dy = y + 0.5 - body.cy;
                const double u = c * dx + si * dy + a;
                const double v = -si * dx + c * dy + b;
                const Image& tex = identities[static_cast<std::size_t>(id)].texture;
                const int tx = std::clamp(static_cast<int>(u), 0, tex.width - 1);
                const int ty = std::clamp(static_cast<int>(v), 0, tex.height - 1);
                frame.set(x, y, tex.at(tx, ty));
            }
        }

        char frame_name[64];
        std::snprintf(frame_name, sizeof frame_name, "%s-f%03d", day_id.c_str(), f);
        FrameInfo info;
        info.frame_id = frame_name;
        info.timestamp = static_cast<double>(f);
        info.width = cfg.frame_w;
        info.height = cfg.frame_h;
        scene.day.frames.push_back(info);

        FrameAnnotations fa;
        fa.frame_id = frame_name;
        for (std::size_t i = 0; i < identities.size(); ++i) {
            Mask mask = Mask::from_bitmap(cfg.frame_w, cfg.frame_h, bitmaps[i]);
            if (mask.foreground_area() == 0) {
                scene.warnings.push_back(std::string(frame_name) + ": identity " +
                                         identities[i].spec.identity + " fully occluded, dropped");
                continue;
            }
            Annotation ann{mask_to_aabb(mask), std::move(mask), identities[i].spec.identity,
                           identities[i].spec.identity};
            fa.items.push_back(std::move(ann));
        }
        scene.frames.push_back(std::move(frame));
        scene.annotations.push_back(std::move(fa));
    }
    return scene;
}

namespace {

SynthCorpus gen_corpus_impl(const SynthConfig& cfg,
                            const std::function<void(const FrameInfo&, const Image&)>& sink,
                            std::vector<Image>* keep_frames) {
    if (cfg.days <= 0) throw std::invalid_argument("synth: need at least one day");
    const std::vector<IdentityAppearance> identities = make_identities(cfg);

    SynthCorpus corpus;
    for (int d = 0; d < cfg.days; ++d) {
        char day_id[32];
        // Day ids follow the recording-campaign date style.
        std::snprintf(day_id, sizeof day_id, "2024-11-%02d", d + 1);
        DayScene scene = gen_day(cfg, identities, day_id, mix_seed(cfg.seed, stream_id(day_id)));
        for (std::size_t f = 0; f < scene.frames.size(); ++f) {
            FrameInfo& info = scene.day.frames[f];
            if (sink) sink(info, scene.frames[f]);
            if (keep_frames) keep_frames->push_back(std::move(scene.frames[f]));
        }
        corpus.manifest.days.push_back(std::move(scene.day));
        for (FrameAnnotations& fa : scene.annotations) {
            corpus.annotations.frames.push_back(std::move(fa));
        }
        for (std::string& w : scene.warnings) corpus.warnings.push_back(std::move(w));
    }
    corpus.manifest.validate();
    return corpus;
}

} // namespace

SynthCorpus write_corpus(const SynthConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "frames");

    std::vector<std::pair<FrameInfo*, std::string>> paths;
    SynthCorpus corpus = gen_corpus_impl(
        cfg,
        [&](const FrameInfo& info, const Image& frame) {
            const std::string rel = "frames/" + info.frame_id + ".png";
            save_png(frame, (fs::path(out_dir) / rel).string());
        },
        nullptr);
    for (DayRecord& day : corpus.manifest.days) {
        for (FrameInfo& info : day.frames) info.image_path = "frames/" + info.frame_id + ".png";
    }
    save_manifest(corpus.manifest, (fs::path(out_dir) / "manifest.json").string());
    save_annotations(corpus.annotations, (fs::path(out_dir) / "annotations.jsonl").string());
    return corpus;
}

MemoryCorpus gen_corpus(const SynthConfig& cfg) {
    MemoryCorpus out;
    out.corpus = gen_corpus_impl(cfg, nullptr, &out.frames);
    return out;
}

namespace {

Mask shift_mask(const Mask& m, int dx, int dy) {
    const std::vector<std::uint8_t> src = m.to_bitmap();
    std::vector<std::uint8_t> dst(src.size(), 0);
    const int w = m.width(), h = m.height();
    for (int y = 0; y < h; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= h) continue;
        for (int x = 0; x < w; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= w) continue;
            dst[static_cast<std::size_t>(y) * w + x] = src[static_cast<std::size_t>(sy) * w + sx];
        }
    }
    return Mask::from_bitmap(w, h, dst);
}

std::pair<Mask, Mask> split_mask(const Mask& m) {
    const Aabb box = mask_to_aabb(m);
    const std::vector<std::uint8_t> src = m.to_bitmap();
    std::vector<std::uint8_t> first(src.size(), 0), second(src.size(), 0);
    const int w = m.width();
    const bool split_x = box.w >= box.h;
    const double mid = split_x ? box.x + box.w / 2.0 : box.y + box.h / 2.0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            if (!src[static_cast<std::size_t>(y) * w + x]) continue;
            const bool in_first = split_x ? (x + 0.5 < mid) : (y + 0.5 < mid);
            (in_first ? first : second)[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }
    return {Mask::from_bitmap(w, m.height(), first), Mask::from_bitmap(w, m.height(), second)};
}

Mask union_mask(const Mask& a, const Mask& b) {
    std::vector<std::uint8_t> bits = a.to_bitmap();
    const std::vector<std::uint8_t> other = b.to_bitmap();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bits[i] | other[i];
    return Mask::from_bitmap(a.width(), a.height(), bits);
}

} // namespace

DetectionSet corrupt(const AnnotationSet& gt, const DatasetManifest& manifest,
                     const CorruptionSpec& spec) {
    if (spec.drop_rate < 0 || spec.drop_rate > 1 || spec.split_rate < 0 || spec.split_rate > 1 ||
        spec.merge_rate < 0 || spec.merge_rate > 1) {
        throw std::invalid_argument("corrupt: rates must lie in [0,1]");
    }
    Rng rng(mix_seed(spec.seed, stream_id("corrupt")));

    DetectionSet out;
    for (const FrameAnnotations& fa : gt.frames) {
        const FrameInfo* frame = manifest.find_frame(fa.frame_id);
        if (!frame) throw std::invalid_argument("corrupt: frame not in manifest: " + fa.frame_id);

        FrameDetections fd;
        fd.frame_id = fa.frame_id;

        struct Working {
            Mask mask;
            std::optional<std::string> track;
        };
        std::vector<Working> work;

        for (const Annotation& ann : fa.items) {
            if (spec.drop_rate > 0.0 && rng.bernoulli(spec.drop_rate)) continue;
            Mask mask = ann.mask;
            if (spec.jitter_sigma > 0.0) {
                const int dx = static_cast<int>(std::lround(rng.normal(0.0, spec.jitter_sigma)));
                const int dy = static_cast<int>(std::lround(rng.normal(0.0, spec.jitter_sigma)));
                mask = shift_mask(mask, dx, dy);
                if (mask.foreground_area() == 0) continue; // jittered out of frame
            }
            if (spec.split_rate > 0.0 && rng.bernoulli(spec.split_rate)) {
                auto [first, second] = split_mask(mask);
                if (first.foreground_area() > 0) work.push_back({std::move(first), ann.track_id});
                if (second.foreground_area() > 0) work.push_back({std::move(second), ann.track_id});
                continue;
            }
            work.push_back({std::move(mask), ann.track_id});
        }

        if (spec.merge_rate > 0.0 && work.size() >= 2) {
            std::vector<Working> merged;
            for (std::size_t i = 0; i < work.size(); ++i) {
                if (i + 1 < work.size() && rng.bernoulli(spec.merge_rate)) {
                    work[i + 1].mask = union_mask(work[i].mask, work[i + 1].mask);
                    work[i + 1].track = work[i].track;
                    continue;
                }
                merged.push_back(std::move(work[i]));
            }
            work = std::move(merged);
        }

        for (Working& wk : work) {
            Detection det;
            det.frame_id = fa.frame_id;
            det.box = mask_to_aabb(wk.mask);
            det.mask = std::move(wk.mask);
            det.track_id = std::move(wk.track);
            det.score = std::clamp(1.0 - spec.score_noise * rng.uniform(), 0.0, 1.0);
            fd.items.push_back(std::move(det));
        }
        out.frames.push_back(std::move(fd));
    }
    return out;
}

} // namespace herd
