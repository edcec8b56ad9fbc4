#include "herd/embedder.hpp"

#include "herd/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace herd {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw std::runtime_error(std::string("embedder: non-finite ") + what);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

double sigma(double a, Nonlinearity nl) {
    return nl == Nonlinearity::kTanh ? std::tanh(a) : std::max(a, 0.0);
}

std::uint8_t clamp_channel(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

} // namespace

EmbedderModel EmbedderModel::init(const EmbedderConfig& cfg, std::uint64_t seed) {
    if (cfg.input_resolution <= 0 || cfg.feature_resolution <= 0 || cfg.hidden <= 0 ||
        cfg.embed_dim <= 0) {
        throw std::invalid_argument("embedder: non-positive config dimension");
    }
    EmbedderModel m;
    m.config = cfg;
    Rng rng(mix_seed(seed, stream_id("embedder-init")));
    const int f = cfg.feature_length();
    const double s1 = 1.0 / std::sqrt(static_cast<double>(f));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    m.w1.resize(cfg.hidden, f);
    for (int r = 0; r < cfg.hidden; ++r) {
        for (int c = 0; c < f; ++c) m.w1(r, c) = rng.normal() * s1;
    }
    m.b1 = Eigen::VectorXd::Zero(cfg.hidden);
    m.w2.resize(cfg.embed_dim, cfg.hidden);
    for (int r = 0; r < cfg.embed_dim; ++r) {
        for (int c = 0; c < cfg.hidden; ++c) m.w2(r, c) = rng.normal() * s2;
    }
    m.b2 = Eigen::VectorXd::Zero(cfg.embed_dim);
    return m;
}

namespace {

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || rows > (1u << 20) || cols > (1u << 20)) {
        throw std::runtime_error("model file: bad matrix header");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            m(r, c) = v;
        }
    }
    if (!in) throw std::runtime_error("model file: truncated matrix");
    return m;
}

constexpr char kModelMagic[8] = {'H', 'E', 'R', 'D', 'E', 'M', 'B', '1'};

} // namespace

void save_model(const EmbedderModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("model file: cannot write " + path);
    out.write(kModelMagic, sizeof kModelMagic);
    const std::int32_t header[5] = {model.config.input_resolution, model.config.feature_resolution,
                                    model.config.hidden, model.config.embed_dim,
                                    model.config.nonlinearity == Nonlinearity::kTanh ? 0 : 1};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    write_matrix(out, model.w1);
    write_matrix(out, model.b1);
    write_matrix(out, model.w2);
    write_matrix(out, model.b2);
    if (!out) throw std::runtime_error("model file: write failed for " + path);
}

EmbedderModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("model file: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
        throw std::runtime_error("model file: bad magic in " + path);
    }
    std::int32_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in) throw std::runtime_error("model file: truncated header in " + path);
    EmbedderModel m;
    m.config.input_resolution = header[0];
    m.config.feature_resolution = header[1];
    m.config.hidden = header[2];
    m.config.embed_dim = header[3];
    m.config.nonlinearity = header[4] == 0 ? Nonlinearity::kTanh : Nonlinearity::kRelu;
    m.w1 = read_matrix(in);
    m.b1 = read_matrix(in);
    m.w2 = read_matrix(in);
    m.b2 = read_matrix(in);
    return m;
}

std::vector<double> extract_features(const RgbMaskSample& sample, const EmbedderConfig& cfg) {
    if (sample.pixels.width != cfg.input_resolution ||
        sample.pixels.height != cfg.input_resolution) {
        throw std::invalid_argument("extract_features: sample resolution mismatch");
    }
    const Image small = cfg.feature_resolution == cfg.input_resolution
                            ? sample.pixels
                            : resize_nearest(sample.pixels, cfg.feature_resolution,
                                             cfg.feature_resolution);
    std::vector<double> out;
    out.reserve(small.rgb.size());
    for (std::uint8_t v : small.rgb) out.push_back(static_cast<double>(v) / 255.0);
    return out;
}

Eigen::VectorXd forward(const EmbedderModel& model, const Eigen::VectorXd& features) {
    if (features.size() != model.config.feature_length()) {
        throw std::invalid_argument("forward: feature length mismatch");
    }
    check_finite(model.w1, "parameters");
    check_finite(model.w2, "parameters");
    const Eigen::VectorXd a = model.w1 * features + model.b1;
    Eigen::VectorXd h(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) h(i) = sigma(a(i), model.config.nonlinearity);
    const Eigen::VectorXd e = model.w2 * h + model.b2;
    const double norm = e.norm();
    if (norm < 1e-12) throw std::runtime_error("forward: zero-norm embedding");
    return e / norm;
}

double ntxent_anchor_term(double sim_pos, const std::vector<double>& sims_nonself, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("ntxent: tau must be positive");
    if (sims_nonself.empty()) throw std::invalid_argument("ntxent: empty candidate set");
    double mx = sim_pos / tau;
    for (double s : sims_nonself) mx = std::max(mx, s / tau);
    double denom = 0.0;
    for (double s : sims_nonself) denom += std::exp(s / tau - mx);
    return -(sim_pos / tau - mx) + std::log(denom);
}

double ntxent_loss(const std::vector<Eigen::VectorXd>& embeddings, double tau) {
    const std::size_t m = embeddings.size();
    if (m < 4 || m % 2 != 0) {
        throw std::invalid_argument("ntxent: need at least two positive pairs");
    }
    if (tau <= 0.0) throw std::invalid_argument("ntxent: tau must be positive");

    std::vector<Eigen::VectorXd> z;
    z.reserve(m);
    for (const Eigen::VectorXd& e : embeddings) {
        const double n = e.norm();
        if (n < 1e-12) throw std::invalid_argument("ntxent: zero-norm embedding");
        z.push_back(e / n);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t p = i ^ 1u;
        std::vector<double> sims;
        sims.reserve(m - 1);
        double sim_pos = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) continue;
            const double s = z[i].dot(z[k]);
            sims.push_back(s);
            if (k == p) sim_pos = s;
        }
        total += ntxent_anchor_term(sim_pos, sims, tau);
    }
    return total / static_cast<double>(m);
}

BatchGradients ntxent_grad(const EmbedderModel& model,
                           const std::vector<std::vector<double>>& features, double tau) {
    const std::size_t m = features.size();
    if (m < 4 || m % 2 != 0) {
        throw std::invalid_argument("ntxent_grad: need at least two positive pairs");
    }
    if (tau <= 0.0) throw std::invalid_argument("ntxent_grad: tau must be positive");
    const int f = model.config.feature_length();
    const Eigen::Index n = static_cast<Eigen::Index>(m);

    Eigen::MatrixXd x(f, n);
    for (std::size_t i = 0; i < m; ++i) {
        if (static_cast<int>(features[i].size()) != f) {
            throw std::invalid_argument("ntxent_grad: feature length mismatch");
        }
        x.col(static_cast<Eigen::Index>(i)) = to_eigen(features[i]);
    }

    const Eigen::MatrixXd a = (model.w1 * x).colwise() + model.b1;
    Eigen::MatrixXd h(a.rows(), a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            h(r, c) = sigma(a(r, c), model.config.nonlinearity);
        }
    }
    const Eigen::MatrixXd e = (model.w2 * h).colwise() + model.b2;
    Eigen::MatrixXd z(e.rows(), e.cols());
    Eigen::VectorXd norms(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        norms(c) = e.col(c).norm();
        if (norms(c) < 1e-12) throw std::runtime_error("ntxent_grad: zero-norm embedding");
        z.col(c) = e.col(c) / norms(c);
    }

    const Eigen::MatrixXd sim = z.transpose() * z; // cosine, since columns are unit norm

    // g(i,j) = d(anchor_i loss)/d sim(i,j), j != i.
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index p = i ^ 1;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) mx = std::max(mx, sim(i, k) / tau);
        }
        double denom = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != i) denom += std::exp(sim(i, k) / tau - mx);
        }
        loss += -(sim(i, p) / tau - mx) + std::log(denom);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            const double soft = std::exp(sim(i, k) / tau - mx) / denom;
            g(i, k) = (soft - (k == p ? 1.0 : 0.0)) / tau;
        }
    }
    loss /= static_cast<double>(m);
    if (!std::isfinite(loss)) throw std::runtime_error("ntxent_grad: non-finite loss");

    // dL/dz_c = (1/m) * sum_j [g(c,j) + g(j,c)] z_j
    const Eigen::MatrixXd gsym = (g + g.transpose()) / static_cast<double>(m);
    const Eigen::MatrixXd dz = z * gsym; // column c = sum_j z_j gsym(j,c)

    // Through the normalization: de = (dz - z (z·dz)) / ||e||.
    Eigen::MatrixXd de(e.rows(), e.cols());
    for (Eigen::Index c = 0; c < n; ++c) {
        const double zd = z.col(c).dot(dz.col(c));
        de.col(c) = (dz.col(c) - z.col(c) * zd) / norms(c);
    }

    BatchGradients out;
    out.loss = loss;
    out.dw2 = de * h.transpose();
    out.db2 = de.rowwise().sum();

    Eigen::MatrixXd dh = model.w2.transpose() * de;
    for (Eigen::Index c = 0; c < dh.cols(); ++c) {
        for (Eigen::Index r = 0; r < dh.rows(); ++r) {
            const double deriv = model.config.nonlinearity == Nonlinearity::kTanh
                                     ? 1.0 - h(r, c) * h(r, c)
                                     : (a(r, c) > 0.0 ? 1.0 : 0.0);
            dh(r, c) *= deriv;
        }
    }
    out.dw1 = dh * x.transpose();
    out.db1 = dh.rowwise().sum();
    return out;
}

AugmentParams draw_augment_params(Rng& rng) {
    AugmentParams p;
    if (rng.bernoulli(0.5)) p.hflip = true;
    if (rng.bernoulli(0.5)) p.rotation_deg = rng.uniform(-15.0, 15.0);
    if (rng.bernoulli(0.5)) {
        p.crop_fraction = rng.uniform(0.8, 1.0);
        p.crop_anchor_x = rng.uniform();
        p.crop_anchor_y = rng.uniform();
    }
    if (rng.bernoulli(0.5)) {
        p.brightness = rng.uniform(0.8, 1.2);
        p.contrast = rng.uniform(0.8, 1.2);
    }
    return p;
}

RgbMaskSample apply_augment(const RgbMaskSample& sample, const AugmentParams& params) {
    RgbMaskSample out = sample;
    Image& img = out.pixels;
    const int w = img.width;
    const int h = img.height;

    if (params.hflip) {
        Image flipped(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) flipped.set(x, y, img.at(w - 1 - x, y));
        }
        img = std::move(flipped);
    }

    if (params.rotation_deg != 0.0) {
        const double rad = params.rotation_deg * kPi / 180.0;
        const double c = std::cos(rad), s = std::sin(rad);
        const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
        Image rot(w, h, sample.background);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                // Inverse rotation back into the source grid.
                const double dx = x - cx, dy = y - cy;
                const double sx = c * dx + s * dy + cx;
                const double sy = -s * dx + c * dy + cy;
                const int ix = static_cast<int>(std::lround(sx));
                const int iy = static_cast<int>(std::lround(sy));
                if (ix >= 0 && ix < w && iy >= 0 && iy < h) rot.set(x, y, img.at(ix, iy));
            }
        }
        img = std::move(rot);
    }

    if (params.crop_fraction < 1.0) {
        const int cw = std::max(1, static_cast<int>(std::lround(params.crop_fraction * w)));
        const int ch = std::max(1, static_cast<int>(std::lround(params.crop_fraction * h)));
        const int ox = static_cast<int>(std::lround(params.crop_anchor_x * (w - cw)));
        const int oy = static_cast<int>(std::lround(params.crop_anchor_y * (h - ch)));
        img = resize_nearest(crop(img, ox, oy, cw, ch), w, h);
    }

    if (params.brightness != 1.0 || params.contrast != 1.0) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                Rgb c = img.at(x, y);
                for (int ch2 = 0; ch2 < 3; ++ch2) {
                    double v = static_cast<double>(c[static_cast<std::size_t>(ch2)]);
                    v *= params.brightness;
                    v = (v - 128.0) * params.contrast + 128.0;
                    c[static_cast<std::size_t>(ch2)] = clamp_channel(v);
                }
                img.set(x, y, c);
            }
        }
    }
    return out;
}

RgbMaskSample augment(const RgbMaskSample& sample, Rng& rng) {
    return apply_augment(sample, draw_augment_params(rng));
}

std::vector<std::size_t> timestamp_batch(const std::vector<RgbMaskSample>& data, int epoch,
                                         std::uint64_t seed) {
    if (epoch < 0) throw std::invalid_argument("timestamp_batch: negative epoch");
    std::map<std::pair<std::string, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        groups[{data[i].day_id, data[i].timestamp}].push_back(i);
    }
    std::vector<std::vector<std::size_t>> eligible;
    for (auto& [key, members] : groups) {
        if (members.size() >= 2) eligible.push_back(std::move(members));
    }
    if (eligible.empty()) {
        throw std::invalid_argument("timestamp_batch: no timestamp with at least 2 samples");
    }
    std::vector<std::size_t> order(eligible.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, stream_id("timestamp-order")));
    rng.shuffle(order);
    return eligible[order[static_cast<std::size_t>(epoch) % order.size()]];
}

std::vector<std::vector<double>> embed_all(const EmbedderModel& model,
                                           const std::vector<RgbMaskSample>& data) {
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    for (const RgbMaskSample& s : data) {
        const Eigen::VectorXd z = forward(model, to_eigen(extract_features(s, model.config)));
        out.emplace_back(z.data(), z.data() + z.size());
    }
    return out;
}

TrainResult train(const std::vector<RgbMaskSample>& data, const TrainConfig& cfg,
                  const std::vector<RgbMaskSample>* val) {
    if (cfg.epochs < 0) throw std::invalid_argument("train: negative epochs");
    if (cfg.tau <= 0.0) throw std::invalid_argument("train: tau must be positive");

    TrainResult res;
    EmbedderModel model = EmbedderModel::init(cfg.model, cfg.seed);

    bool use_val = val != nullptr && !val->empty();
    if (use_val) {
        for (const RgbMaskSample& s : *val) {
            if (!s.identity) {
                use_val = false;
                break;
            }
        }
        for (const RgbMaskSample& s : data) {
            if (!s.identity) {
                use_val = false;
                break;
            }
        }
    }

    Eigen::MatrixXd vw1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
    Eigen::VectorXd vb1 = Eigen::VectorXd::Zero(model.b1.size());
    Eigen::MatrixXd vw2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
    Eigen::VectorXd vb2 = Eigen::VectorXd::Zero(model.b2.size());

    double best_val = -1.0;
    EmbedderModel best_model = model;

    const auto probe = [&](int epoch) {
        if (!use_val) return;
        std::vector<std::string> gallery_labels, query_labels;
        for (const RgbMaskSample& s : data) gallery_labels.push_back(*s.identity);
        for (const RgbMaskSample& s : *val) query_labels.push_back(*s.identity);
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.knn_k), data.size());
        const KnnResult r = knn_classify(embed_all(model, data), gallery_labels,
                                         embed_all(model, *val), query_labels, k);
        res.val_accuracy.emplace_back(epoch, r.accuracy);
        if (r.accuracy > best_val) {
            best_val = r.accuracy;
            best_model = model;
            res.best_epoch = epoch;
        }
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<std::size_t> batch = timestamp_batch(data, epoch, cfg.seed);

        std::vector<std::vector<double>> feats;
        feats.reserve(batch.size() * 2);
        for (std::size_t bi = 0; bi < batch.size(); ++bi) {
            const RgbMaskSample& s = data[batch[bi]];
            for (int view = 0; view < 2; ++view) {
                if (cfg.augmentation) {
                    const std::uint64_t sub = mix_seed(
                        mix_seed(mix_seed(cfg.seed, stream_id("augment")),
                                 static_cast<std::uint64_t>(epoch)),
                        (static_cast<std::uint64_t>(batch[bi]) << 1) |
                            static_cast<std::uint64_t>(view));
                    Rng rng(sub);
                    feats.push_back(extract_features(augment(s, rng), cfg.model));
                } else {
                    feats.push_back(extract_features(s, cfg.model));
                }
            }
        }

        const BatchGradients grads = ntxent_grad(model, feats, cfg.tau);
        if (!std::isfinite(grads.loss)) throw std::runtime_error("train: loss diverged");
        res.epoch_losses.push_back(grads.loss);

        vw1 = cfg.momentum * vw1 - cfg.lr * grads.dw1;
        vb1 = cfg.momentum * vb1 - cfg.lr * grads.db1;
        vw2 = cfg.momentum * vw2 - cfg.lr * grads.dw2;
        vb2 = cfg.momentum * vb2 - cfg.lr * grads.db2;
        model.w1 += vw1;
        model.b1 += vb1;
        model.w2 += vw2;
        model.b2 += vb2;
        check_finite(model.w1, "parameters after update");
        check_finite(model.w2, "parameters after update");

        if (use_val && cfg.val_check_interval > 0 &&
            ((epoch + 1) % cfg.val_check_interval == 0 || epoch + 1 == cfg.epochs)) {
            probe(epoch + 1);
        }
    }

    res.model = use_val && res.best_epoch >= 0 ? best_model : model;
    return res;
}

} // namespace herd
