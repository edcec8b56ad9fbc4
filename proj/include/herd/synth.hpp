#pragma once

#include "herd/dataset.hpp"
#include "herd/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace herd {

struct IdentitySpec {
    std::string identity;
    std::uint64_t pattern_seed = 0;
    int body_w = 90; // texture patch dims; the body ellipse inscribes this box
    int body_h = 50;
    double blob_density = 0.5; // fraction of the noise field rendered black
    double blob_scale = 10.0;  // noise cell size in pixels
    bool solid_color = false;
    Rgb color = {255, 255, 255}; // used when solid_color
    double base_theta = 0.0;     // habitual heading, radians
};

/** Seeded value-noise threshold texture; black blobs on white. */
Image gen_identity_pattern(const IdentitySpec& spec);

struct SynthConfig {
    int days = 9;
    int identities = 20;
    int frames_per_day = 8; // one frame per second
    int frame_w = 960;
    int frame_h = 720;
    double overlap_target = 0.0; // 0 keeps bodies disjoint; 1 lets centers touch
    double motion_step = 12.0;   // random-walk step between frames, pixels
    int body_w = 90;
    int body_h = 50;
    double blob_density = 0.5;
    double blob_scale = 10.0;
    bool solid_colors = false;
    std::uint64_t seed = 0;
};

/**
 * Per-identity appearances: distinct seeds, and patterns regenerated until
 * every pair differs in at least 5% of pixels. Solid-color mode spreads hues.
 */
struct IdentityAppearance {
    IdentitySpec spec;
    Image texture;
};

std::vector<IdentityAppearance> make_identities(const SynthConfig& cfg);

struct DayScene {
    DayRecord day; // image_path left empty; the writer fills it
    std::vector<Image> frames;
    std::vector<FrameAnnotations> annotations;
    std::vector<std::string> warnings; // identities dropped as fully occluded
};

/**
 * Renders one day: elliptical bodies with the identity texture, painter's
 * algorithm in identity order (later identities closer), exact visible-pixel
 * ground-truth masks. Placement is a min-distance random walk; the distance
 * floor shrinks with overlap_target.
 */
DayScene gen_day(const SynthConfig& cfg, const std::vector<IdentityAppearance>& identities,
                 const std::string& day_id, std::uint64_t day_seed);

struct SynthCorpus {
    DatasetManifest manifest;
    AnnotationSet annotations;
    std::vector<std::string> warnings;
};

/** Renders the corpus and writes manifest + PNG frames + annotations under out_dir. */
SynthCorpus write_corpus(const SynthConfig& cfg, const std::string& out_dir);

/** Renders the corpus keeping all frames in memory (tests, small configs). */
struct MemoryCorpus {
    SynthCorpus corpus;
    std::vector<Image> frames; // parallel to manifest frame order
};
MemoryCorpus gen_corpus(const SynthConfig& cfg);

struct CorruptionSpec {
    double jitter_sigma = 0.0; // Gaussian box/mask offset, pixels
    double drop_rate = 0.0;
    double split_rate = 0.0; // one mask into its two longer-axis halves
    double merge_rate = 0.0; // union of two neighbouring masks
    double score_noise = 0.0;
    std::uint64_t seed = 0;
};

/**
 * Turns ground truth into synthetic detector output. With all rates and
 * sigma zero this is the identity mapping (scores exactly 1).
 */
DetectionSet corrupt(const AnnotationSet& gt, const DatasetManifest& manifest,
                     const CorruptionSpec& spec);

} // namespace herd
