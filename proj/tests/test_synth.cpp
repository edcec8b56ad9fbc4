#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "herd/synth.hpp"
#include "support.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using herd::Annotation;
using herd::CorruptionSpec;
using herd::IdentitySpec;
using herd::Image;
using herd::Rgb;
using herd::SynthConfig;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.days = 2;
    cfg.identities = 4;
    cfg.frames_per_day = 3;
    cfg.frame_w = 320;
    cfg.frame_h = 240;
    cfg.body_w = 40;
    cfg.body_h = 24;
    cfg.seed = 7;
    return cfg;
}

std::size_t count_black(const Image& img) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        if (img.rgb[i] == 0) ++n;
    }
    return n;
}

double fraction_differing(const Image& a, const Image& b) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.rgb.size(); i += 3) {
        if (a.rgb[i] != b.rgb[i]) ++diff;
    }
    return static_cast<double>(diff) * 3.0 / static_cast<double>(a.rgb.size());
}

} // namespace

TEST_CASE("identity patterns are deterministic black-and-white noise") {
    IdentitySpec spec;
    spec.identity = "c";
    spec.pattern_seed = 99;
    spec.body_w = 60;
    spec.body_h = 40;

    const Image a = herd::gen_identity_pattern(spec);
    const Image b = herd::gen_identity_pattern(spec);
    CHECK(a.rgb == b.rgb);
    CHECK(a.width == 60);
    CHECK(a.height == 40);
    for (std::size_t i = 0; i < a.rgb.size(); i += 3) {
        const bool black = a.rgb[i] == 0 && a.rgb[i + 1] == 0 && a.rgb[i + 2] == 0;
        const bool white = a.rgb[i] == 255 && a.rgb[i + 1] == 255 && a.rgb[i + 2] == 255;
        CHECK((black || white));
    }
    const std::size_t blacks = count_black(a);
    CHECK(blacks > 0);
    CHECK(blacks < static_cast<std::size_t>(60 * 40));

    spec.pattern_seed = 100;
    CHECK(herd::gen_identity_pattern(spec).rgb != a.rgb);

    spec.body_w = 0;
    CHECK_THROWS_AS(herd::gen_identity_pattern(spec), std::invalid_argument);
}

TEST_CASE("raising blob density only adds black pixels") {
    IdentitySpec lo, hi;
    lo.pattern_seed = hi.pattern_seed = 5;
    lo.body_w = hi.body_w = 50;
    lo.body_h = hi.body_h = 30;
    lo.blob_density = 0.2;
    hi.blob_density = 0.7;
    const Image a = herd::gen_identity_pattern(lo);
    const Image b = herd::gen_identity_pattern(hi);
    std::size_t a_black = 0, b_black = 0;
    for (std::size_t i = 0; i < a.rgb.size(); i += 3) {
        const bool la = a.rgb[i] == 0, lb = b.rgb[i] == 0;
        if (la) {
            ++a_black;
            CHECK(lb); // same lattice, lower threshold: black stays black
        }
        if (lb) ++b_black;
    }
    CHECK(a_black < b_black);

    IdentitySpec zero = lo;
    zero.blob_density = 0.0;
    CHECK(count_black(herd::gen_identity_pattern(zero)) == 0);

    IdentitySpec solid = lo;
    solid.solid_color = true;
    solid.color = {12, 34, 56};
    const Image s = herd::gen_identity_pattern(solid);
    for (std::size_t i = 0; i < s.rgb.size(); i += 3) {
        CHECK(s.rgb[i] == 12);
        CHECK(s.rgb[i + 1] == 34);
        CHECK(s.rgb[i + 2] == 56);
    }
}

TEST_CASE("make_identities yields pairwise distinct appearances") {
    SynthConfig cfg = small_config();
    cfg.identities = 6;
    const auto ids = herd::make_identities(cfg);
    REQUIRE(ids.size() == 6);
    CHECK(ids[0].spec.identity == "cow000");
    CHECK(ids[5].spec.identity == "cow005");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            CHECK(fraction_differing(ids[i].texture, ids[j].texture) >= 0.05);
        }
    }

    cfg.solid_colors = true;
    const auto solids = herd::make_identities(cfg);
    std::set<std::array<std::uint8_t, 3>> colors;
    for (const auto& app : solids) {
        CHECK(app.spec.solid_color);
        colors.insert(app.spec.color);
    }
    CHECK(colors.size() == solids.size());

    cfg.identities = 0;
    CHECK_THROWS_AS(herd::make_identities(cfg), std::invalid_argument);
}

TEST_CASE("gen_day keeps disjoint bodies and exact masks") {
    SynthConfig cfg = small_config();
    const auto ids = herd::make_identities(cfg);
    const herd::DayScene scene = herd::gen_day(cfg, ids, "2024-11-01", 123);

    REQUIRE(scene.frames.size() == 3);
    REQUIRE(scene.annotations.size() == 3);
    REQUIRE(scene.day.frames.size() == 3);
    CHECK(scene.warnings.empty());

    for (std::size_t f = 0; f < scene.annotations.size(); ++f) {
        const herd::FrameInfo& info = scene.day.frames[f];
        char expect[32];
        std::snprintf(expect, sizeof expect, "2024-11-01-f%03zu", f);
        CHECK(info.frame_id == expect);
        CHECK(info.timestamp == static_cast<double>(f));
        CHECK(info.width == cfg.frame_w);
        CHECK(info.height == cfg.frame_h);

        const auto& items = scene.annotations[f].items;
        REQUIRE(items.size() == 4); // overlap 0: nobody is occluded
        for (const Annotation& ann : items) {
            CHECK(ann.mask.foreground_area() > 0);
            REQUIRE(ann.track_id.has_value());
            CHECK(*ann.track_id == ann.identity);
            const herd::Aabb tight = herd::mask_to_aabb(ann.mask);
            CHECK(ann.box.x == tight.x);
            CHECK(ann.box.y == tight.y);
            CHECK(ann.box.w == tight.w);
            CHECK(ann.box.h == tight.h);
        }
        for (std::size_t i = 0; i < items.size(); ++i) {
            for (std::size_t j = i + 1; j < items.size(); ++j) {
                CHECK(herd::mask_intersection_area(items[i].mask, items[j].mask) == 0);
            }
        }
    }

    // same seed, same scene
    const herd::DayScene again = herd::gen_day(cfg, ids, "2024-11-01", 123);
    CHECK(again.frames[0].rgb == scene.frames[0].rgb);
    const herd::DayScene moved = herd::gen_day(cfg, ids, "2024-11-01", 124);
    CHECK(moved.frames[0].rgb != scene.frames[0].rgb);
}

TEST_CASE("crowded solid-color scenes stay consistent under occlusion") {
    SynthConfig cfg = small_config();
    cfg.identities = 6;
    cfg.overlap_target = 0.9;
    cfg.solid_colors = true;
    cfg.frames_per_day = 2;
    const auto ids = herd::make_identities(cfg);
    const herd::DayScene scene = herd::gen_day(cfg, ids, "2024-11-02", 31);

    const Rgb ground{92, 118, 82};
    std::size_t dropped = 0;
    for (std::size_t f = 0; f < scene.annotations.size(); ++f) {
        const Image& frame = scene.frames[f];
        const auto& items = scene.annotations[f].items;
        dropped += ids.size() - items.size();

        // visible masks never overlap, and each covers pixels of its own color
        std::vector<std::uint8_t> covered(static_cast<std::size_t>(cfg.frame_w) * cfg.frame_h, 0);
        for (const Annotation& ann : items) {
            Rgb expected{};
            for (const auto& app : ids) {
                if (app.spec.identity == ann.identity) expected = app.spec.color;
            }
            const auto bitmap = ann.mask.to_bitmap();
            for (int y = 0; y < cfg.frame_h; ++y) {
                for (int x = 0; x < cfg.frame_w; ++x) {
                    const std::size_t idx = static_cast<std::size_t>(y) * cfg.frame_w + x;
                    if (!bitmap[idx]) continue;
                    CHECK_FALSE(covered[idx]);
                    covered[idx] = 1;
                    CHECK(frame.at(x, y) == expected);
                }
            }
        }
        // nothing outside the masks wears a body color
        for (int y = 0; y < cfg.frame_h; ++y) {
            for (int x = 0; x < cfg.frame_w; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * cfg.frame_w + x;
                if (!covered[idx]) CHECK(frame.at(x, y) == ground);
            }
        }
    }
    CHECK(scene.warnings.size() == dropped);
}

TEST_CASE("gen_day rejects impossible crowding") {
    SynthConfig cfg = small_config();
    cfg.frame_w = 100;
    cfg.frame_h = 80;
    cfg.identities = 10;
    const auto ids = herd::make_identities(cfg);
    CHECK_THROWS_AS(herd::gen_day(cfg, ids, "2024-11-01", 1), std::invalid_argument);
}

TEST_CASE("corpus day and frame naming") {
    SynthConfig cfg = small_config();
    cfg.days = 3;
    cfg.frames_per_day = 2;
    const herd::MemoryCorpus mem = herd::gen_corpus(cfg);
    const auto& days = mem.corpus.manifest.days;
    REQUIRE(days.size() == 3);
    CHECK(days[0].day_id == "2024-11-01");
    CHECK(days[1].day_id == "2024-11-02");
    CHECK(days[2].day_id == "2024-11-03");
    CHECK(days[2].frames[1].frame_id == "2024-11-03-f001");
    CHECK(mem.frames.size() == 6);
    CHECK(mem.corpus.annotations.frames.size() == 6);
    for (const auto& day : days) {
        for (std::size_t f = 0; f < day.frames.size(); ++f) {
            CHECK(day.frames[f].timestamp == static_cast<double>(f));
        }
    }
}

TEST_CASE("written corpora load back cleanly") {
    testsup::TempDir dir("herd-synth");
    SynthConfig cfg = small_config();
    const herd::SynthCorpus written = herd::write_corpus(cfg, dir.path());

    namespace fs = std::filesystem;
    CHECK(fs::exists(dir.file("manifest.json")));
    CHECK(fs::exists(dir.file("annotations.jsonl")));

    const herd::DatasetManifest manifest = herd::load_manifest(dir.file("manifest.json"));
    REQUIRE(manifest.days.size() == 2);
    for (const auto& day : manifest.days) {
        for (const auto& frame : day.frames) {
            const Image img = herd::load_png((fs::path(dir.path()) / frame.image_path).string());
            CHECK(img.width == cfg.frame_w);
            CHECK(img.height == cfg.frame_h);
        }
    }

    const herd::AnnotationSet anns =
        herd::load_annotations(dir.file("annotations.jsonl"), manifest);
    REQUIRE(anns.frames.size() == written.annotations.frames.size());
    for (std::size_t f = 0; f < anns.frames.size(); ++f) {
        CHECK(anns.frames[f].frame_id == written.annotations.frames[f].frame_id);
        REQUIRE(anns.frames[f].items.size() == written.annotations.frames[f].items.size());
        for (std::size_t i = 0; i < anns.frames[f].items.size(); ++i) {
            CHECK(anns.frames[f].items[i].mask == written.annotations.frames[f].items[i].mask);
            CHECK(anns.frames[f].items[i].identity == written.annotations.frames[f].items[i].identity);
        }
    }
}

TEST_CASE("corrupt with a zero spec is the identity mapping") {
    const herd::MemoryCorpus mem = herd::gen_corpus(small_config());
    const herd::DetectionSet dets =
        herd::corrupt(mem.corpus.annotations, mem.corpus.manifest, CorruptionSpec{});
    REQUIRE(dets.frames.size() == mem.corpus.annotations.frames.size());
    for (std::size_t f = 0; f < dets.frames.size(); ++f) {
        const auto& gt = mem.corpus.annotations.frames[f];
        const auto& fd = dets.frames[f];
        CHECK(fd.frame_id == gt.frame_id);
        REQUIRE(fd.items.size() == gt.items.size());
        for (std::size_t i = 0; i < fd.items.size(); ++i) {
            CHECK(fd.items[i].score == 1.0);
            CHECK(fd.items[i].mask.has_value());
            CHECK(*fd.items[i].mask == gt.items[i].mask);
            CHECK(fd.items[i].box.x == gt.items[i].box.x);
            CHECK(fd.items[i].box.y == gt.items[i].box.y);
            CHECK(fd.items[i].box.w == gt.items[i].box.w);
            CHECK(fd.items[i].box.h == gt.items[i].box.h);
            CHECK(fd.items[i].track_id == gt.items[i].track_id);
        }
    }
}

TEST_CASE("corrupt rates have the advertised effect") {
    const herd::MemoryCorpus mem = herd::gen_corpus(small_config());
    const auto& gt = mem.corpus.annotations;
    const auto& manifest = mem.corpus.manifest;

    CorruptionSpec drop;
    drop.drop_rate = 1.0;
    for (const auto& fd : herd::corrupt(gt, manifest, drop).frames) CHECK(fd.items.empty());

    CorruptionSpec jitter;
    jitter.jitter_sigma = 2.0;
    jitter.seed = 9;
    const herd::DetectionSet j1 = herd::corrupt(gt, manifest, jitter);
    const herd::DetectionSet j2 = herd::corrupt(gt, manifest, jitter);
    bool any_moved = false;
    for (std::size_t f = 0; f < j1.frames.size(); ++f) {
        REQUIRE(j1.frames[f].items.size() == gt.frames[f].items.size());
        for (std::size_t i = 0; i < j1.frames[f].items.size(); ++i) {
            CHECK(j1.frames[f].items[i].track_id == gt.frames[f].items[i].track_id);
            CHECK(*j1.frames[f].items[i].mask == *j2.frames[f].items[i].mask);
            if (j1.frames[f].items[i].box.x != gt.frames[f].items[i].box.x) any_moved = true;
        }
    }
    CHECK(any_moved);
    jitter.seed = 10;
    bool seed_matters = false;
    const herd::DetectionSet j3 = herd::corrupt(gt, manifest, jitter);
    for (std::size_t f = 0; f < j1.frames.size() && !seed_matters; ++f) {
        for (std::size_t i = 0; i < j1.frames[f].items.size(); ++i) {
            if (!(*j1.frames[f].items[i].mask == *j3.frames[f].items[i].mask)) {
                seed_matters = true;
                break;
            }
        }
    }
    CHECK(seed_matters);

    CorruptionSpec split;
    split.split_rate = 1.0;
    const herd::DetectionSet sp = herd::corrupt(gt, manifest, split);
    for (std::size_t f = 0; f < sp.frames.size(); ++f) {
        CHECK(sp.frames[f].items.size() == 2 * gt.frames[f].items.size());
        for (std::size_t i = 0; i < sp.frames[f].items.size(); i += 2) {
            CHECK(sp.frames[f].items[i].track_id == sp.frames[f].items[i + 1].track_id);
        }
    }

    CorruptionSpec merge;
    merge.merge_rate = 1.0;
    const herd::DetectionSet mg = herd::corrupt(gt, manifest, merge);
    for (std::size_t f = 0; f < mg.frames.size(); ++f) {
        REQUIRE(mg.frames[f].items.size() == 1);
        std::uint64_t total = 0;
        for (const Annotation& ann : gt.frames[f].items) total += ann.mask.foreground_area();
        CHECK(mg.frames[f].items[0].mask->foreground_area() == total);
        CHECK(mg.frames[f].items[0].track_id == gt.frames[f].items[0].track_id);
    }

    CorruptionSpec noisy;
    noisy.score_noise = 0.3;
    bool any_below_one = false;
    for (const auto& fd : herd::corrupt(gt, manifest, noisy).frames) {
        for (const auto& det : fd.items) {
            CHECK(det.score <= 1.0);
            CHECK(det.score >= 0.7);
            if (det.score < 1.0) any_below_one = true;
        }
    }
    CHECK(any_below_one);

    CorruptionSpec bad;
    bad.drop_rate = 1.5;
    CHECK_THROWS_AS(herd::corrupt(gt, manifest, bad), std::invalid_argument);
}
