/**
 * @file herdkit_main.cpp
 * Command-line front end: synthetic corpus generation, detection refinement,
 * RGB-mask sample construction, localisation evaluation, embedder training,
 * and the cross-validation protocols. One JSON config file per run plus a few
 * flag overrides; every artifact lands in the output directory.
 */

#include "herd/dataset.hpp"
#include "herd/embedder.hpp"
#include "herd/loceval.hpp"
#include "herd/refine.hpp"
#include "herd/reideval.hpp"
#include "herd/report_io.hpp"
#include "herd/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

struct RunContext {
    json config; // whole config file ({} when none given)
    std::string config_text;
    std::string out_dir;
    std::uint64_t seed = 0;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    if (!fs::exists(path)) throw std::invalid_argument("config not found: " + path);
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    return j;
}

RunContext make_context(const GlobalOpts& opts, const char* command) {
    RunContext ctx;
    ctx.config = load_config(opts.config_path);
    ctx.config_text = ctx.config.dump();
    ctx.out_dir = opts.out_dir;
    ctx.seed = opts.seed_given ? opts.seed : ctx.config.value("seed", std::uint64_t{0});
    fs::create_directories(ctx.out_dir);
    herd::write_run_meta((fs::path(ctx.out_dir) / "run_meta.json").string(), command,
                         ctx.config_text, ctx.seed);
    return ctx;
}

json section(const json& config, const char* name) {
    if (!config.contains(name)) return json::object();
    if (!config[name].is_object()) {
        throw std::invalid_argument(std::string("config: section \"") + name + "\" must be an object");
    }
    return config[name];
}

std::string required_path(const json& io, const char* key, const char* label) {
    if (!io.contains(key)) {
        throw std::invalid_argument(std::string("config: io.") + key + " is required");
    }
    const std::string path = io[key].get<std::string>();
    if (!fs::exists(path)) throw std::invalid_argument(std::string(label) + " not found: " + path);
    return path;
}

std::string out_file(const RunContext& ctx, const std::string& name) {
    return (fs::path(ctx.out_dir) / name).string();
}

herd::RefineConfig refine_config(const json& config) {
    const json r = section(config, "refine");
    herd::RefineConfig cfg;
    cfg.area_ratio_lo = r.value("area_ratio_lo", cfg.area_ratio_lo);
    cfg.area_ratio_hi = r.value("area_ratio_hi", cfg.area_ratio_hi);
    cfg.nms_iou_threshold = r.value("nms_iou_threshold", cfg.nms_iou_threshold);
    cfg.score_floor = r.value("score_floor", cfg.score_floor);
    const std::string mode = r.value("ratio_mode", std::string("area"));
    if (mode == "area") {
        cfg.ratio_mode = herd::RatioMode::kArea;
    } else if (mode == "side") {
        cfg.ratio_mode = herd::RatioMode::kSide;
    } else if (mode == "aspect") {
        cfg.ratio_mode = herd::RatioMode::kAspect;
    } else {
        throw std::invalid_argument("config: refine.ratio_mode must be area, side, or aspect");
    }
    if (!(cfg.area_ratio_lo >= 0.0 && cfg.area_ratio_lo < cfg.area_ratio_hi &&
          cfg.area_ratio_hi <= 1.0)) {
        throw std::invalid_argument("config: refine ratio bounds must satisfy 0 <= lo < hi <= 1");
    }
    if (!(cfg.nms_iou_threshold > 0.0 && cfg.nms_iou_threshold < 1.0)) {
        throw std::invalid_argument("config: refine.nms_iou_threshold must lie in (0,1)");
    }
    return cfg;
}

herd::SynthConfig synth_config(const json& config, std::uint64_t seed) {
    const json s = section(config, "synth");
    herd::SynthConfig cfg;
    cfg.days = s.value("days", cfg.days);
    cfg.identities = s.value("identities", cfg.identities);
    cfg.frames_per_day = s.value("frames_per_day", cfg.frames_per_day);
    cfg.frame_w = s.value("frame_w", cfg.frame_w);
    cfg.frame_h = s.value("frame_h", cfg.frame_h);
    cfg.overlap_target = s.value("overlap_target", cfg.overlap_target);
    cfg.motion_step = s.value("motion_step", cfg.motion_step);
    cfg.body_w = s.value("body_w", cfg.body_w);
    cfg.body_h = s.value("body_h", cfg.body_h);
    cfg.blob_density = s.value("blob_density", cfg.blob_density);
    cfg.blob_scale = s.value("blob_scale", cfg.blob_scale);
    cfg.solid_colors = s.value("solid_colors", cfg.solid_colors);
    cfg.seed = seed;
    if (cfg.days < 1 || cfg.identities < 1 || cfg.frames_per_day < 1) {
        throw std::invalid_argument("config: synth needs at least one day, identity, and frame");
    }
    return cfg;
}

herd::CorruptionSpec corruption_spec(const json& synth_section, std::uint64_t seed) {
    const json c = synth_section.value("corruption", json::object());
    herd::CorruptionSpec spec;
    spec.jitter_sigma = c.value("jitter_sigma", spec.jitter_sigma);
    spec.drop_rate = c.value("drop_rate", spec.drop_rate);
    spec.split_rate = c.value("split_rate", spec.split_rate);
    spec.merge_rate = c.value("merge_rate", spec.merge_rate);
    spec.score_noise = c.value("score_noise", spec.score_noise);
    spec.seed = herd::mix_seed(seed, herd::stream_id("detections"));
    return spec;
}

herd::TrainConfig train_config(const json& config, std::uint64_t seed) {
    const json t = section(config, "train");
    herd::TrainConfig cfg;
    cfg.epochs = t.value("epochs", cfg.epochs);
    cfg.lr = t.value("lr", cfg.lr);
    cfg.momentum = t.value("momentum", cfg.momentum);
    cfg.tau = t.value("tau", cfg.tau);
    cfg.augmentation = t.value("augmentation", cfg.augmentation);
    cfg.val_check_interval = t.value("val_check_interval", cfg.val_check_interval);
    cfg.knn_k = t.value("knn_k", cfg.knn_k);
    cfg.seed = seed;
    cfg.model.input_resolution = t.value("input_resolution", cfg.model.input_resolution);
    cfg.model.feature_resolution = t.value("feature_resolution", cfg.model.feature_resolution);
    cfg.model.hidden = t.value("hidden", cfg.model.hidden);
    cfg.model.embed_dim = t.value("embed_dim", cfg.model.embed_dim);
    const std::string nl = t.value("nonlinearity", std::string("tanh"));
    if (nl == "tanh") {
        cfg.model.nonlinearity = herd::Nonlinearity::kTanh;
    } else if (nl == "relu") {
        cfg.model.nonlinearity = herd::Nonlinearity::kRelu;
    } else {
        throw std::invalid_argument("config: train.nonlinearity must be tanh or relu");
    }
    if (cfg.epochs < 1) throw std::invalid_argument("config: train.epochs must be at least 1");
    if (cfg.tau <= 0.0) throw std::invalid_argument("config: train.tau must be positive");
    return cfg;
}

struct LoadedSamples {
    std::vector<herd::SampleMeta> meta;
    std::vector<herd::RgbMaskSample> samples;
};

LoadedSamples load_samples(const std::string& index_path) {
    LoadedSamples out;
    out.meta = herd::load_sample_index(index_path);
    const fs::path base = fs::path(index_path).parent_path();
    int resolution = -1;
    for (const herd::SampleMeta& m : out.meta) {
        herd::RgbMaskSample s;
        s.pixels = herd::load_png((base / m.path).string());
        if (s.pixels.width != s.pixels.height) {
            throw std::runtime_error("samples: " + m.sample_id + " is not square");
        }
        if (resolution < 0) resolution = s.pixels.width;
        if (s.pixels.width != resolution) {
            throw std::runtime_error("samples: mixed resolutions in " + index_path);
        }
        s.timestamp = m.timestamp;
        s.day_id = m.day_id;
        s.identity = m.identity;
        s.source_track = m.source_track;
        s.background = m.background;
        out.samples.push_back(std::move(s));
    }
    return out;
}

int sample_resolution(const LoadedSamples& s) {
    return s.samples.empty() ? 0 : s.samples.front().pixels.width;
}

// ---------------------------------------------------------------------------

int cmd_synth(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "synth");
    const herd::SynthConfig cfg = synth_config(ctx.config, ctx.seed);

    const herd::SynthCorpus corpus = herd::write_corpus(cfg, ctx.out_dir);
    for (const std::string& w : corpus.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    const json synth_section = section(ctx.config, "synth");
    if (synth_section.contains("corruption")) {
        const herd::CorruptionSpec spec = corruption_spec(synth_section, ctx.seed);
        const herd::DetectionSet dets = herd::corrupt(corpus.annotations, corpus.manifest, spec);
        herd::save_detections(dets, out_file(ctx, "detections.jsonl"));
    }
    std::printf("synth: %zu days, %zu frames, %zu warnings\n", corpus.manifest.days.size(),
                corpus.manifest.frame_count(), corpus.warnings.size());
    return 0;
}

int cmd_refine(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "refine");
    const json io = section(ctx.config, "io");
    const std::string manifest_path = required_path(io, "manifest", "manifest");
    const std::string det_path = required_path(io, "detections", "detections");

    const herd::DatasetManifest manifest = herd::load_manifest(manifest_path);
    const herd::DetectionSet dets = herd::load_detections(det_path, manifest);
    const herd::RefineConfig cfg = refine_config(ctx.config);

    herd::DetectionSet refined;
    std::size_t in_count = 0, out_count = 0;
    for (const herd::FrameDetections& fd : dets.frames) {
        const herd::FrameInfo* frame = manifest.find_frame(fd.frame_id);
        herd::FrameDetections out_fd;
        out_fd.frame_id = fd.frame_id;
        out_fd.items = herd::refine(fd.items, frame->width, frame->height, cfg);
        in_count += fd.items.size();
        out_count += out_fd.items.size();
        refined.frames.push_back(std::move(out_fd));
    }
    herd::save_detections(refined, out_file(ctx, "detections.jsonl"));
    std::printf("refine: kept %zu of %zu detections (dropped %zu)\n", out_count, in_count,
                in_count - out_count);
    return 0;
}

int cmd_build_masks(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "build-masks");
    const json io = section(ctx.config, "io");
    const std::string manifest_path = required_path(io, "manifest", "manifest");
    const herd::DatasetManifest manifest = herd::load_manifest(manifest_path);
    const fs::path image_base = fs::path(manifest_path).parent_path();
    const int resolution = io.value("sample_resolution", 128);
    if (resolution < 8) throw std::invalid_argument("config: io.sample_resolution too small");

    const bool from_annotations = io.contains("annotations");
    if (!from_annotations && !io.contains("detections")) {
        throw std::invalid_argument("config: io.annotations or io.detections is required");
    }

    herd::AnnotationSet anns;
    herd::DetectionSet dets;
    if (from_annotations) {
        anns = herd::load_annotations(required_path(io, "annotations", "annotations"), manifest);
    } else {
        dets = herd::load_detections(required_path(io, "detections", "detections"), manifest);
    }

    fs::create_directories(fs::path(ctx.out_dir) / "samples");
    std::vector<herd::SampleMeta> index;
    std::size_t skipped = 0;

    for (const herd::DayRecord& day : manifest.days) {
        for (const herd::FrameInfo& frame : herd::sample_once_per_second(day.frames)) {
            struct Item {
                const herd::Mask* mask;
                std::optional<std::string> identity;
                std::string track;
            };
            std::vector<Item> items;
            if (from_annotations) {
                if (const herd::FrameAnnotations* fa = anns.find(frame.frame_id)) {
                    for (const herd::Annotation& a : fa->items) {
                        items.push_back({&a.mask, a.identity, a.track_id.value_or(a.identity)});
                    }
                }
            } else {
                if (const herd::FrameDetections* fd = dets.find(frame.frame_id)) {
                    for (std::size_t i = 0; i < fd->items.size(); ++i) {
                        const herd::Detection& d = fd->items[i];
                        if (!d.mask) continue;
                        char fallback[32];
                        std::snprintf(fallback, sizeof fallback, "det%03zu", i);
                        items.push_back({&*d.mask, std::nullopt, d.track_id.value_or(fallback)});
                    }
                }
            }
            if (items.empty()) continue;

            const herd::Image pixels = herd::load_png((image_base / frame.image_path).string());
            if (pixels.width != frame.width || pixels.height != frame.height) {
                throw std::runtime_error("frame " + frame.frame_id + ": image size disagrees with manifest");
            }
            std::set<std::string> used;
            for (const Item& item : items) {
                if (item.mask->empty()) {
                    ++skipped;
                    continue;
                }
                herd::RgbMaskSample sample = herd::build_rgb_mask(pixels, *item.mask, resolution);
                herd::SampleMeta meta;
                std::string sid = frame.frame_id + "-" + item.track;
                while (used.count(sid)) sid += "x";
                used.insert(sid);
                meta.sample_id = sid;
                meta.day_id = day.day_id;
                meta.timestamp = frame.timestamp;
                meta.identity = item.identity;
                meta.source_track = item.track;
                meta.path = "samples/" + sid + ".png";
                meta.background = sample.background;
                herd::save_png(sample.pixels, (fs::path(ctx.out_dir) / meta.path).string());
                index.push_back(std::move(meta));
            }
        }
    }
    herd::save_sample_index(index, out_file(ctx, "samples.jsonl"));
    std::printf("build-masks: wrote %zu samples (%zu skipped empty)\n", index.size(), skipped);
    return 0;
}

int cmd_loceval(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "loceval");
    const json io = section(ctx.config, "io");
    const herd::DatasetManifest manifest =
        herd::load_manifest(required_path(io, "manifest", "manifest"));
    const herd::AnnotationSet anns =
        herd::load_annotations(required_path(io, "annotations", "annotations"), manifest);
    const herd::DetectionSet dets =
        herd::load_detections(required_path(io, "detections", "detections"), manifest);

    const json le = section(ctx.config, "loceval");
    const double threshold = le.value("threshold", 0.7);
    const std::string tp = le.value("tp_mode", std::string("fraction"));
    herd::TpAccuracyMode tp_mode;
    if (tp == "fraction") {
        tp_mode = herd::TpAccuracyMode::kFractionWellDetected;
    } else if (tp == "mean_iou") {
        tp_mode = herd::TpAccuracyMode::kMeanIouWellDetected;
    } else {
        throw std::invalid_argument("config: loceval.tp_mode must be fraction or mean_iou");
    }
    std::vector<std::string> geometries =
        le.value("geometry", std::vector<std::string>{"obb", "mask"});

    herd::CsvTable metrics;
    metrics.header = {"geometry", "metric", "value"};
    for (const std::string& geom : geometries) {
        herd::GeometryMode mode;
        if (geom == "aabb") {
            mode = herd::GeometryMode::kAabb;
        } else if (geom == "obb") {
            mode = herd::GeometryMode::kObb;
        } else if (geom == "mask") {
            mode = herd::GeometryMode::kMask;
        } else {
            throw std::invalid_argument("config: loceval.geometry entries must be aabb, obb, or mask");
        }

        std::vector<herd::MatchResult> matches;
        for (const herd::FrameAnnotations& fa : anns.frames) {
            static const herd::FrameDetections kNone;
            const herd::FrameDetections* fd = dets.find(fa.frame_id);
            herd::FrameDetections empty;
            empty.frame_id = fa.frame_id;
            matches.push_back(herd::match_frame(fa, fd ? *fd : empty, mode));
        }
        const herd::LocalisationReport report =
            herd::localisation_metrics(matches, threshold, tp_mode);

        for (auto& row : herd::localisation_csv(report, geom).rows) metrics.rows.push_back(row);
        herd::write_csv(herd::per_frame_csv(report), out_file(ctx, "per_frame_" + geom + ".csv"));

        herd::SeriesPlot plot;
        plot.title = "Per-frame localisation (" + geom + ")";
        plot.y_label = "value";
        std::vector<std::optional<double>> ious, usage;
        for (const herd::FrameStats& fs_row : report.per_frame) {
            plot.x_labels.push_back(fs_row.frame_id);
            ious.push_back(fs_row.mean_iou);
            usage.push_back(fs_row.usage_rate);
        }
        plot.series.push_back({"mean IoU", std::move(ious)});
        plot.series.push_back({"usage rate", std::move(usage)});
        herd::write_line_svg(plot, out_file(ctx, "series_" + geom + ".svg"));
    }
    herd::write_csv(metrics, out_file(ctx, "loc_metrics.csv"));
    std::printf("loceval: wrote metrics for %zu geometry mode(s)\n", geometries.size());
    return 0;
}

int cmd_train(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "train");
    const json io = section(ctx.config, "io");
    const LoadedSamples data = load_samples(required_path(io, "samples", "samples"));
    if (data.samples.empty()) throw std::invalid_argument("train: no samples in index");

    herd::TrainConfig cfg = train_config(ctx.config, ctx.seed);
    cfg.model.input_resolution = sample_resolution(data);

    const herd::TrainResult result = herd::train(data.samples, cfg);
    herd::save_model(result.model, out_file(ctx, "model.bin"));
    herd::write_csv(herd::losses_csv(result.epoch_losses), out_file(ctx, "losses.csv"));
    std::printf("train: %d epochs, final loss %s\n", cfg.epochs,
                herd::format_value(result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back())
                    .c_str());
    return 0;
}

int cmd_reideval(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "reideval");
    const json io = section(ctx.config, "io");
    const LoadedSamples data = load_samples(required_path(io, "samples", "samples"));
    const herd::EmbedderModel model = herd::load_model(required_path(io, "model", "model"));
    if (data.samples.empty()) throw std::invalid_argument("reideval: no samples in index");
    for (const herd::SampleMeta& m : data.meta) {
        if (!m.identity) {
            throw std::invalid_argument("reideval: sample " + m.sample_id + " has no identity label");
        }
    }
    if (sample_resolution(data) != model.config.input_resolution) {
        throw std::invalid_argument("reideval: sample resolution does not match the model");
    }

    const json re = section(ctx.config, "reideval");
    const int knn_k = re.value("knn_k", 5);

    const std::vector<herd::Point> embeddings = herd::embed_all(model, data.samples);
    std::vector<std::string> labels;
    for (const herd::SampleMeta& m : data.meta) labels.push_back(*m.identity);

    // 80/20 holdout for kNN, clustering on the full set.
    std::vector<std::size_t> order(embeddings.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    herd::Rng rng(herd::mix_seed(ctx.seed, herd::stream_id("reideval-split")));
    rng.shuffle(order);
    const std::size_t split = order.size() * 4 / 5;
    std::vector<herd::Point> gallery, queries;
    std::vector<std::string> gallery_labels, query_labels;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < split) {
            gallery.push_back(embeddings[order[i]]);
            gallery_labels.push_back(labels[order[i]]);
        } else {
            queries.push_back(embeddings[order[i]]);
            query_labels.push_back(labels[order[i]]);
        }
    }
    if (gallery.empty() || queries.empty()) {
        throw std::invalid_argument("reideval: too few samples for an 80/20 split");
    }

    std::set<std::string> identities(labels.begin(), labels.end());
    if (identities.size() < 2) throw std::invalid_argument("reideval: need at least 2 identities");

    herd::ProtocolReport report;
    herd::FoldReport fr;
    fr.fold = "eval";
    fr.knn_accuracy =
        herd::knn_classify(gallery, gallery_labels, queries, query_labels,
                           std::min<std::size_t>(static_cast<std::size_t>(knn_k), gallery.size()))
            .accuracy;
    const herd::KmeansResult km = herd::kmeans(embeddings, identities.size(),
                                               herd::mix_seed(ctx.seed, herd::stream_id("kmeans")));
    const std::vector<int> truth = herd::encode_labels(labels);
    fr.ari = herd::ari(truth, km.labels);
    fr.ami = herd::ami(truth, km.labels);
    fr.nmi = herd::nmi(truth, km.labels);
    fr.ha_accuracy = herd::hungarian_accuracy(truth, km.labels);
    for (const herd::SampleMeta& m : data.meta) fr.test_sample_ids.push_back(m.sample_id);
    fr.test_labels = labels;
    fr.kmeans_labels = km.labels;
    fr.test_embeddings = embeddings;
    report.folds.push_back(std::move(fr));
    report.knn = herd::aggregate_of({report.folds[0].knn_accuracy});
    report.ari = herd::aggregate_of({report.folds[0].ari});
    report.ami = herd::aggregate_of({report.folds[0].ami});
    report.nmi = herd::aggregate_of({report.folds[0].nmi});
    report.ha = herd::aggregate_of({report.folds[0].ha_accuracy});

    herd::write_csv(herd::reid_report_csv(report), out_file(ctx, "reid_report.csv"));
    herd::write_csv(herd::embeddings_csv(report), out_file(ctx, "embeddings.csv"));

    const std::vector<std::array<double, 2>> proj = herd::pca_project_2d(embeddings);
    herd::ScatterPlot truth_plot{"Embedding projection (identity)", proj, labels};
    herd::write_scatter_svg(truth_plot, out_file(ctx, "projection_truth.svg"));
    std::vector<std::string> km_labels;
    for (int c : km.labels) km_labels.push_back("c" + std::to_string(c));
    herd::ScatterPlot km_plot{"Embedding projection (k-means)", proj, km_labels};
    herd::write_scatter_svg(km_plot, out_file(ctx, "projection_kmeans.svg"));

    std::printf("reideval: knn %s, ha %s\n",
                herd::format_value(report.folds[0].knn_accuracy).c_str(),
                herd::format_value(report.folds[0].ha_accuracy).c_str());
    return 0;
}

int cmd_crossval(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "crossval");
    const json io = section(ctx.config, "io");
    LoadedSamples data = load_samples(required_path(io, "samples", "samples"));
    if (data.samples.empty()) throw std::invalid_argument("crossval: no samples in index");

    const json re = section(ctx.config, "reideval");
    const std::string mode_name = re.value("fold_mode", std::string("day_wise"));
    herd::FoldMode mode;
    if (mode_name == "within_day_k5") {
        mode = herd::FoldMode::kWithinDayK5;
    } else if (mode_name == "day_wise") {
        mode = herd::FoldMode::kDayWise;
    } else if (mode_name == "single_day") {
        mode = herd::FoldMode::kSingleDay;
    } else {
        throw std::invalid_argument(
            "config: reideval.fold_mode must be within_day_k5, day_wise, or single_day");
    }

    if (re.contains("day")) {
        const std::string day = re["day"].get<std::string>();
        LoadedSamples filtered;
        for (std::size_t i = 0; i < data.meta.size(); ++i) {
            if (data.meta[i].day_id != day) continue;
            filtered.meta.push_back(data.meta[i]);
            filtered.samples.push_back(std::move(data.samples[i]));
        }
        if (filtered.meta.empty()) {
            throw std::invalid_argument("crossval: no samples from day " + day);
        }
        data = std::move(filtered);
    }

    herd::TrainConfig cfg = train_config(ctx.config, ctx.seed);
    cfg.model.input_resolution = sample_resolution(data);

    const herd::FoldPlan plan = herd::make_fold_plan(data.meta, mode, ctx.seed);
    const herd::ProtocolReport report = herd::run_protocol(data.meta, data.samples, plan, cfg);

    herd::write_csv(herd::reid_report_csv(report), out_file(ctx, "reid_report.csv"));
    herd::write_csv(herd::embeddings_csv(report), out_file(ctx, "embeddings.csv"));
    for (const herd::FoldReport& fr : report.folds) {
        herd::write_csv(herd::losses_csv(fr.epoch_losses),
                        out_file(ctx, "losses_" + fr.fold + ".csv"));
        if (fr.test_embeddings.size() >= 2) {
            const std::vector<std::array<double, 2>> proj =
                herd::pca_project_2d(fr.test_embeddings);
            herd::write_scatter_svg({"Fold " + fr.fold + " (identity)", proj, fr.test_labels},
                                    out_file(ctx, "projection_" + fr.fold + "_truth.svg"));
            std::vector<std::string> km_labels;
            for (int c : fr.kmeans_labels) km_labels.push_back("c" + std::to_string(c));
            herd::write_scatter_svg({"Fold " + fr.fold + " (k-means)", proj, km_labels},
                                    out_file(ctx, "projection_" + fr.fold + "_kmeans.svg"));
        }
    }
    std::printf("crossval: %zu folds, knn %s+/-%s, ha %s+/-%s\n", report.folds.size(),
                herd::format_value(report.knn.mean).c_str(),
                herd::format_value(report.knn.stddev).c_str(),
                herd::format_value(report.ha.mean).c_str(),
                herd::format_value(report.ha.stddev).c_str());
    return 0;
}

int cmd_report(const GlobalOpts& opts) {
    const RunContext ctx = make_context(opts, "report");
    const json io = section(ctx.config, "io");
    bool produced = false;

    if (io.contains("per_frame")) {
        const herd::CsvTable t = herd::read_csv(required_path(io, "per_frame", "per-frame csv"));
        herd::SeriesPlot plot;
        plot.title = "Per-frame localisation";
        plot.y_label = "value";
        std::vector<std::optional<double>> ious, usage;
        for (const auto& row : t.rows) {
            if (row.size() < 3) continue;
            plot.x_labels.push_back(row[0]);
            ious.push_back(row[1].empty() ? std::nullopt
                                          : std::make_optional(std::stod(row[1])));
            usage.push_back(row[2].empty() ? std::nullopt
                                           : std::make_optional(std::stod(row[2])));
        }
        plot.series.push_back({"mean IoU", std::move(ious)});
        plot.series.push_back({"usage rate", std::move(usage)});
        herd::write_line_svg(plot, out_file(ctx, "series.svg"));
        produced = true;
    }

    if (io.contains("losses")) {
        const herd::CsvTable t = herd::read_csv(required_path(io, "losses", "losses csv"));
        herd::SeriesPlot plot;
        plot.title = "Training loss";
        plot.y_label = "NT-Xent loss";
        std::vector<std::optional<double>> losses;
        for (const auto& row : t.rows) {
            if (row.size() < 2) continue;
            plot.x_labels.push_back(row[0]);
            losses.push_back(std::stod(row[1]));
        }
        plot.series.push_back({"loss", std::move(losses)});
        herd::write_line_svg(plot, out_file(ctx, "losses.svg"));
        produced = true;
    }

    if (io.contains("embeddings")) {
        const herd::CsvTable t = herd::read_csv(required_path(io, "embeddings", "embeddings csv"));
        if (t.header.size() < 5) throw std::invalid_argument("report: embeddings csv too narrow");
        std::vector<herd::Point> points;
        std::vector<std::string> labels;
        for (const auto& row : t.rows) {
            herd::Point p;
            for (std::size_t c = 4; c < row.size(); ++c) p.push_back(std::stod(row[c]));
            points.push_back(std::move(p));
            labels.push_back(row[2]);
        }
        if (points.size() >= 2) {
            const std::vector<std::array<double, 2>> proj = herd::pca_project_2d(points);
            herd::write_scatter_svg({"Embedding projection (identity)", proj, labels},
                                    out_file(ctx, "projection_truth.svg"));
        }
        produced = true;
    }

    if (!produced) {
        throw std::invalid_argument(
            "config: report needs io.per_frame, io.losses, or io.embeddings");
    }
    std::printf("report: plots written to %s\n", ctx.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cattle re-identification pipeline toolkit"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "JSON run-config file");
    app.add_option("--out", opts.out_dir, "Output directory (default: out)");
    CLI::Option* seed_opt = app.add_option("--seed", opts.seed, "Seed override");

    int (*handler)(const GlobalOpts&) = nullptr;
    app.add_subcommand("synth", "Generate a synthetic corpus")
        ->callback([&] { handler = cmd_synth; });
    app.add_subcommand("refine", "Filter raw detections")
        ->callback([&] { handler = cmd_refine; });
    app.add_subcommand("build-masks", "Cut RGB-mask samples from frames")
        ->callback([&] { handler = cmd_build_masks; });
    app.add_subcommand("loceval", "Localisation metrics against ground truth")
        ->callback([&] { handler = cmd_loceval; });
    app.add_subcommand("train", "Train the contrastive embedder")
        ->callback([&] { handler = cmd_train; });
    app.add_subcommand("reideval", "Evaluate a trained embedder")
        ->callback([&] { handler = cmd_reideval; });
    app.add_subcommand("crossval", "Cross-validation protocols")
        ->callback([&] { handler = cmd_crossval; });
    app.add_subcommand("report", "Replot existing CSV artifacts")
        ->callback([&] { handler = cmd_report; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    opts.seed_given = seed_opt->count() > 0;

    try {
        return handler(opts);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
