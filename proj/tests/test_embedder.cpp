#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "herd/clustering.hpp"
#include "herd/embedder.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

using herd::AugmentParams;
using herd::EmbedderConfig;
using herd::EmbedderModel;
using herd::RgbMaskSample;

namespace {

EmbedderConfig toy_config() {
    EmbedderConfig cfg;
    cfg.input_resolution = 4;
    cfg.feature_resolution = 4;
    cfg.hidden = 8;
    cfg.embed_dim = 4;
    return cfg;
}

std::vector<double> random_features(herd::Rng& rng, int len) {
    std::vector<double> f(static_cast<std::size_t>(len));
    for (auto& v : f) v = rng.uniform();
    return f;
}

double batch_loss(const EmbedderModel& model, const std::vector<std::vector<double>>& feats,
                  double tau) {
    std::vector<Eigen::VectorXd> z;
    for (const auto& f : feats) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) x(static_cast<Eigen::Index>(i)) = f[i];
        z.push_back(herd::forward(model, x));
    }
    return herd::ntxent_loss(z, tau);
}

Eigen::VectorXd unit2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

} // namespace

TEST_CASE("extract_features flattens the downsampled grid to [0,1]") {
    EmbedderConfig cfg = toy_config();
    RgbMaskSample s = testsup::color_sample(4, {0, 0, 0}, "d", 0.0, "a");
    s.pixels.set(2, 1, {255, 51, 102});
    const std::vector<double> f = herd::extract_features(s, cfg);
    REQUIRE(f.size() == 48);
    const std::size_t base = 3 * (1 * 4 + 2);
    CHECK(f[base + 0] == doctest::Approx(1.0));
    CHECK(f[base + 1] == doctest::Approx(51.0 / 255.0));
    CHECK(f[base + 2] == doctest::Approx(102.0 / 255.0));
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i < base || i > base + 2) CHECK(f[i] == 0.0);
    }

    // resolution mismatch is rejected
    CHECK_THROWS_AS(herd::extract_features(testsup::color_sample(8, {0, 0, 0}, "d", 0.0, "a"), cfg),
                    std::invalid_argument);
}

TEST_CASE("extract_features downsampling picks cell centers") {
    EmbedderConfig cfg;
    cfg.input_resolution = 4;
    cfg.feature_resolution = 2;
    cfg.hidden = 4;
    cfg.embed_dim = 2;
    RgbMaskSample s = testsup::color_sample(4, {10, 10, 10}, "d", 0.0, "a");
    // quadrant centers for a 4->2 nearest resample sit at odd coordinates
    s.pixels.set(1, 1, {200, 0, 0});
    s.pixels.set(3, 3, {0, 200, 0});
    const std::vector<double> f = herd::extract_features(s, cfg);
    REQUIRE(f.size() == 12);
    CHECK(f[0] == doctest::Approx(200.0 / 255.0));
    CHECK(f[3 * 3 + 1] == doctest::Approx(200.0 / 255.0));
}

TEST_CASE("forward output is unit length and bias-driven at zero weights") {
    EmbedderModel m = EmbedderModel::init(toy_config(), 17);
    herd::Rng rng(91);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd x(48);
        for (int i = 0; i < 48; ++i) x(i) = rng.uniform();
        CHECK(herd::forward(m, x).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }

    m.w1.setZero();
    m.w2.setZero();
    m.b2 << 3, 4, 0, 0;
    const Eigen::VectorXd z = herd::forward(m, Eigen::VectorXd::Zero(48));
    CHECK(z(0) == doctest::Approx(0.6));
    CHECK(z(1) == doctest::Approx(0.8));

    m.b2.setZero();
    CHECK_THROWS_AS(herd::forward(m, Eigen::VectorXd::Zero(48)), std::runtime_error);
    CHECK_THROWS_AS(herd::forward(m, Eigen::VectorXd::Zero(7)), std::invalid_argument);
}

TEST_CASE("ntxent matches the hand-computed two-pair case") {
    const std::vector<Eigen::VectorXd> z{unit2(1, 0), unit2(1, 0), unit2(0, 1), unit2(0, 1)};
    const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
    CHECK(herd::ntxent_loss(z, 1.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(herd::ntxent_anchor_term(1.0, {1.0, 0.0}, 1.0) ==
          doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 1.0))).epsilon(1e-12));

    // embeddings are normalized internally, so scale cannot matter
    const std::vector<Eigen::VectorXd> scaled{unit2(5, 0), unit2(0.2, 0), unit2(0, 9),
                                              unit2(0, 0.1)};
    CHECK(herd::ntxent_loss(scaled, 1.0) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(herd::ntxent_loss({unit2(1, 0), unit2(1, 0)}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(
        herd::ntxent_loss({unit2(1, 0), unit2(1, 0), unit2(0, 1), unit2(0, 1), unit2(1, 1)}, 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(herd::ntxent_loss(z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(herd::ntxent_anchor_term(1.0, {}, 1.0), std::invalid_argument);
}

TEST_CASE("ntxent agrees with the direct evaluation on random batches") {
    herd::Rng rng(97);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t pairs = 2 + rng.uniform_index(4);
        std::vector<Eigen::VectorXd> z;
        for (std::size_t i = 0; i < 2 * pairs; ++i) {
            Eigen::VectorXd v(5);
            for (int j = 0; j < 5; ++j) v(j) = rng.normal();
            z.push_back(v);
        }
        const double tau = 0.05 + rng.uniform() * 0.95;
        CHECK(herd::ntxent_loss(z, tau) ==
              doctest::Approx(oracle::ntxent_direct(z, tau)).epsilon(1e-9));
    }
}

TEST_CASE("ntxent_grad loss equals the forward-pass loss") {
    const EmbedderModel m = EmbedderModel::init(toy_config(), 23);
    herd::Rng rng(101);
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 6; ++i) feats.push_back(random_features(rng, 48));
    const herd::BatchGradients g = herd::ntxent_grad(m, feats, 0.2);
    CHECK(g.loss == doctest::Approx(batch_loss(m, feats, 0.2)).epsilon(1e-12));
    CHECK(g.dw1.rows() == m.w1.rows());
    CHECK(g.dw1.cols() == m.w1.cols());
    CHECK(g.dw2.rows() == m.w2.rows());
    CHECK(g.db1.size() == m.b1.size());
    CHECK(g.db2.size() == m.b2.size());
}

TEST_CASE("ntxent_grad survives central-difference scrutiny") {
    EmbedderModel m = EmbedderModel::init(toy_config(), 29);
    herd::Rng rng(103);
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 6; ++i) feats.push_back(random_features(rng, 48));
    const double tau = 0.2;
    const herd::BatchGradients g = herd::ntxent_grad(m, feats, tau);

    const double eps = 1e-4;
    const auto diff_at = [&](double* slot) {
        const double saved = *slot;
        *slot = saved + eps;
        const double up = batch_loss(m, feats, tau);
        *slot = saved - eps;
        const double down = batch_loss(m, feats, tau);
        *slot = saved;
        return (up - down) / (2.0 * eps);
    };
    const auto close = [](double got, double want) {
        return std::abs(got - want) <= 1e-6 + 1e-4 * std::abs(want);
    };

    for (Eigen::Index r = 0; r < m.w2.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.w2.cols(); ++c) {
            CHECK(close(g.dw2(r, c), diff_at(&m.w2(r, c))));
        }
    }
    for (Eigen::Index r = 0; r < m.b2.size(); ++r) CHECK(close(g.db2(r), diff_at(&m.b2(r))));
    for (Eigen::Index r = 0; r < m.b1.size(); ++r) CHECK(close(g.db1(r), diff_at(&m.b1(r))));
    // spot-check a spread of first-layer weights
    for (int t = 0; t < 60; ++t) {
        const Eigen::Index r = static_cast<Eigen::Index>(rng.uniform_index(8));
        const Eigen::Index c = static_cast<Eigen::Index>(rng.uniform_index(48));
        CHECK(close(g.dw1(r, c), diff_at(&m.w1(r, c))));
    }
}

TEST_CASE("default augment params are the identity") {
    RgbMaskSample s = testsup::color_sample(8, {30, 60, 90}, "d", 2.0, "a");
    herd::Rng rng(107);
    for (int i = 0; i < 40; ++i) {
        s.pixels.rgb[rng.uniform_index(s.pixels.rgb.size())] =
            static_cast<std::uint8_t>(rng.uniform_index(256));
    }
    const RgbMaskSample out = herd::apply_augment(s, AugmentParams{});
    CHECK(out.pixels.rgb == s.pixels.rgb);
    CHECK(out.day_id == s.day_id);
    CHECK(out.timestamp == s.timestamp);
    CHECK(out.identity == s.identity);
}

TEST_CASE("horizontal flip is an involution") {
    RgbMaskSample s = testsup::color_sample(6, {0, 0, 0}, "d", 0.0, "a");
    herd::Rng rng(109);
    for (auto& b : s.pixels.rgb) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    AugmentParams p;
    p.hflip = true;
    const RgbMaskSample once = herd::apply_augment(s, p);
    CHECK(once.pixels.rgb != s.pixels.rgb);
    CHECK(once.pixels.at(0, 2) == s.pixels.at(5, 2));
    const RgbMaskSample twice = herd::apply_augment(once, p);
    CHECK(twice.pixels.rgb == s.pixels.rgb);
}

TEST_CASE("crop zooms into the anchored corner") {
    RgbMaskSample s = testsup::color_sample(8, {10, 10, 10}, "d", 0.0, "a");
    s.pixels.set(1, 1, {250, 0, 0});
    AugmentParams p;
    p.crop_fraction = 0.5;
    p.crop_anchor_x = 0.0;
    p.crop_anchor_y = 0.0;
    const RgbMaskSample out = herd::apply_augment(s, p);
    CHECK(out.pixels.width == 8);
    CHECK(out.pixels.height == 8);
    // the top-left 4x4 now fills the frame; source (1,1) covers a 2x2 block
    CHECK(out.pixels.at(2, 2) == herd::Rgb{250, 0, 0});
    CHECK(out.pixels.at(2, 3) == herd::Rgb{250, 0, 0});
    CHECK(out.pixels.at(6, 6) == herd::Rgb{10, 10, 10});
}

TEST_CASE("brightness and contrast act about the documented pivot") {
    RgbMaskSample s = testsup::color_sample(2, {100, 128, 250}, "d", 0.0, "a");
    AugmentParams p;
    p.brightness = 1.2;
    const RgbMaskSample bright = herd::apply_augment(s, p);
    CHECK(bright.pixels.at(0, 0) == herd::Rgb{120, 154, 255});

    AugmentParams q;
    q.contrast = 0.5;
    const RgbMaskSample flat = herd::apply_augment(s, q);
    CHECK(flat.pixels.at(0, 0) == herd::Rgb{114, 128, 189});
}

TEST_CASE("augment is deterministic in the rng state") {
    RgbMaskSample s = testsup::color_sample(8, {40, 80, 120}, "d", 0.0, "a");
    herd::Rng fill(113);
    for (auto& b : s.pixels.rgb) b = static_cast<std::uint8_t>(fill.uniform_index(256));
    herd::Rng r1(555), r2(555), r3(556);
    bool any_differs = false;
    for (int i = 0; i < 10; ++i) {
        const RgbMaskSample a = herd::augment(s, r1);
        const RgbMaskSample b = herd::augment(s, r2);
        const RgbMaskSample c = herd::augment(s, r3);
        CHECK(a.pixels.rgb == b.pixels.rgb);
        if (a.pixels.rgb != c.pixels.rgb) any_differs = true;
    }
    CHECK(any_differs);
}

TEST_CASE("timestamp batches are pure and cover every eligible group") {
    std::vector<RgbMaskSample> data;
    herd::Rng rng(127);
    for (int i = 0; i < 200; ++i) {
        const std::string day = "day" + std::to_string(rng.uniform_index(3));
        const double ts = static_cast<double>(rng.uniform_index(5));
        data.push_back(testsup::color_sample(2, {0, 0, 0}, day, ts, "id"));
    }

    std::set<std::pair<std::string, double>> eligible;
    std::map<std::pair<std::string, double>, std::size_t> group_sizes;
    for (const auto& s : data) ++group_sizes[{s.day_id, s.timestamp}];
    for (const auto& [k, n] : group_sizes) {
        if (n >= 2) eligible.insert(k);
    }

    std::set<std::pair<std::string, double>> seen;
    for (int epoch = 0; epoch < 30; ++epoch) {
        const auto batch = herd::timestamp_batch(data, epoch, 777);
        REQUIRE_FALSE(batch.empty());
        const auto key = std::make_pair(data[batch[0]].day_id, data[batch[0]].timestamp);
        for (std::size_t idx : batch) {
            CHECK(data[idx].day_id == key.first);
            CHECK(data[idx].timestamp == key.second);
        }
        CHECK(batch.size() == group_sizes.at(key));
        seen.insert(key);

        // same epoch, same seed: identical batch
        CHECK(herd::timestamp_batch(data, epoch, 777) == batch);
    }
    CHECK(seen == eligible);

    // the rotation has period equal to the eligible group count
    const auto first = herd::timestamp_batch(data, 0, 777);
    const auto wrapped =
        herd::timestamp_batch(data, static_cast<int>(eligible.size()), 777);
    CHECK(first == wrapped);
}

TEST_CASE("timestamp_batch rejects data without repeated timestamps") {
    std::vector<RgbMaskSample> singles;
    for (int i = 0; i < 5; ++i) {
        singles.push_back(testsup::color_sample(2, {0, 0, 0}, "d", static_cast<double>(i), "id"));
    }
    CHECK_THROWS_AS(herd::timestamp_batch(singles, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(herd::timestamp_batch(singles, -1, 1), std::invalid_argument);
}

TEST_CASE("training is deterministic and separates solid colors") {
    EmbedderConfig mc;
    mc.input_resolution = 16;
    mc.feature_resolution = 8;
    mc.hidden = 16;
    mc.embed_dim = 8;

    const std::vector<herd::Rgb> colors{{220, 40, 40}, {40, 220, 40}, {40, 40, 220}, {220, 220, 40}};
    std::vector<RgbMaskSample> data, val;
    for (int ts = 0; ts < 2; ++ts) {
        for (std::size_t c = 0; c < colors.size(); ++c) {
            data.push_back(testsup::color_sample(16, colors[c], "2024-11-01",
                                                 static_cast<double>(ts),
                                                 "id" + std::to_string(c)));
        }
    }
    for (std::size_t c = 0; c < colors.size(); ++c) {
        val.push_back(
            testsup::color_sample(16, colors[c], "2024-11-02", 0.0, "id" + std::to_string(c)));
    }

    herd::TrainConfig cfg;
    cfg.model = mc;
    cfg.epochs = 10;
    cfg.seed = 42;
    cfg.val_check_interval = 4;
    cfg.knn_k = 1;

    const herd::TrainResult r1 = herd::train(data, cfg, &val);
    const herd::TrainResult r2 = herd::train(data, cfg, &val);

    REQUIRE(r1.epoch_losses.size() == 10);
    CHECK(r1.epoch_losses == r2.epoch_losses);
    CHECK(r1.model.w1 == r2.model.w1);
    CHECK(r1.model.w2 == r2.model.w2);
    CHECK(r1.model.b1 == r2.model.b1);
    CHECK(r1.model.b2 == r2.model.b2);

    // probes after epochs 4, 8 and the final epoch
    REQUIRE(r1.val_accuracy.size() == 3);
    CHECK(r1.val_accuracy[0].first == 4);
    CHECK(r1.val_accuracy[1].first == 8);
    CHECK(r1.val_accuracy[2].first == 10);
    CHECK(r1.best_epoch >= 1);

    double best = -1.0;
    for (const auto& [epoch, acc] : r1.val_accuracy) best = std::max(best, acc);
    CHECK(best == doctest::Approx(1.0));

    // the returned snapshot scores like the best probe
    const auto gallery = herd::embed_all(r1.model, data);
    std::vector<std::string> glabels, qlabels;
    for (const auto& s : data) glabels.push_back(*s.identity);
    for (const auto& s : val) qlabels.push_back(*s.identity);
    const herd::KnnResult probe =
        herd::knn_classify(gallery, glabels, herd::embed_all(r1.model, val), qlabels, 1);
    CHECK(probe.accuracy == doctest::Approx(best));
}

TEST_CASE("training without validation returns the final model") {
    EmbedderConfig mc;
    mc.input_resolution = 8;
    mc.feature_resolution = 4;
    mc.hidden = 8;
    mc.embed_dim = 4;
    std::vector<RgbMaskSample> data;
    data.push_back(testsup::color_sample(8, {200, 30, 30}, "d", 0.0, "a"));
    data.push_back(testsup::color_sample(8, {30, 200, 30}, "d", 0.0, "b"));

    herd::TrainConfig cfg;
    cfg.model = mc;
    cfg.epochs = 3;
    cfg.seed = 9;
    const herd::TrainResult r = herd::train(data, cfg);
    CHECK(r.best_epoch == -1);
    CHECK(r.val_accuracy.empty());
    CHECK(r.epoch_losses.size() == 3);

    for (const auto& e : herd::embed_all(r.model, data)) {
        double norm = 0.0;
        for (double v : e) norm += v * v;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("model files roundtrip exactly") {
    testsup::TempDir dir("herd-model");
    const EmbedderModel m = EmbedderModel::init(toy_config(), 31);
    const std::string path = dir.file("embedder.bin");
    herd::save_model(m, path);
    const EmbedderModel back = herd::load_model(path);
    CHECK(back.config.input_resolution == m.config.input_resolution);
    CHECK(back.config.feature_resolution == m.config.feature_resolution);
    CHECK(back.config.hidden == m.config.hidden);
    CHECK(back.config.embed_dim == m.config.embed_dim);
    CHECK(back.w1 == m.w1);
    CHECK(back.b1 == m.b1);
    CHECK(back.w2 == m.w2);
    CHECK(back.b2 == m.b2);

    CHECK_THROWS_AS(herd::load_model(dir.file("missing.bin")), std::runtime_error);
    std::ofstream bad(dir.file("bad.bin"), std::ios::binary);
    bad << "HERDEMB1garbage";
    bad.close();
    CHECK_THROWS_AS(herd::load_model(dir.file("bad.bin")), std::runtime_error);
}
