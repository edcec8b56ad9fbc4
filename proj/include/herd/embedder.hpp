#pragma once

#include "herd/dataset.hpp"
#include "herd/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace herd {

enum class Nonlinearity { kTanh, kRelu };

struct EmbedderConfig {
    int input_resolution = 128;  // side length expected of incoming samples
    int feature_resolution = 32; // downsample target; feature length = 3*r*r
    int hidden = 256;
    int embed_dim = 64;
    Nonlinearity nonlinearity = Nonlinearity::kTanh;

    int feature_length() const { return 3 * feature_resolution * feature_resolution; }
};

/** Two-layer encoder; forward output is always L2-normalized. */
struct EmbedderModel {
    EmbedderConfig config;
    Eigen::MatrixXd w1; // hidden x features
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2; // embed_dim x hidden
    Eigen::VectorXd b2;

    static EmbedderModel init(const EmbedderConfig& cfg, std::uint64_t seed);
};

void save_model(const EmbedderModel& model, const std::string& path);
EmbedderModel load_model(const std::string& path);

/** Downsample to the feature grid and flatten, channels scaled to [0,1]. */
std::vector<double> extract_features(const RgbMaskSample& sample, const EmbedderConfig& cfg);

Eigen::VectorXd forward(const EmbedderModel& model, const Eigen::VectorXd& features);

/**
 * NT-Xent loss over 2N embeddings arranged as consecutive positive pairs
 * (2i, 2i+1). Similarity is cosine; each anchor's denominator runs over all
 * other embeddings.
 */
double ntxent_loss(const std::vector<Eigen::VectorXd>& embeddings, double tau);

/** One anchor's term: sims_nonself must contain sim_pos. */
double ntxent_anchor_term(double sim_pos, const std::vector<double>& sims_nonself, double tau);

struct BatchGradients {
    Eigen::MatrixXd dw1;
    Eigen::VectorXd db1;
    Eigen::MatrixXd dw2;
    Eigen::VectorXd db2;
    double loss = 0.0;
};

/**
 * Loss and exact analytic gradients of the mean NT-Xent loss for a batch of
 * feature vectors arranged as consecutive positive pairs.
 */
BatchGradients ntxent_grad(const EmbedderModel& model,
                           const std::vector<std::vector<double>>& features, double tau);

struct AugmentParams {
    bool hflip = false;
    double rotation_deg = 0.0;  // 0 disables
    double crop_fraction = 1.0; // 1 disables; crop anchor in [0,1]² of the slack
    double crop_anchor_x = 0.0;
    double crop_anchor_y = 0.0;
    double brightness = 1.0; // multiplicative, 1 disables
    double contrast = 1.0;   // about pivot 128, 1 disables
};

/** Each augmentation is enabled by an independent coin, parameters then drawn. */
AugmentParams draw_augment_params(Rng& rng);
/** Deterministic application; default params are the identity. */
RgbMaskSample apply_augment(const RgbMaskSample& sample, const AugmentParams& params);
RgbMaskSample augment(const RgbMaskSample& sample, Rng& rng);

struct TrainConfig {
    int epochs = 80;
    double lr = 0.01;
    double momentum = 0.9;
    double tau = 0.1;
    std::uint64_t seed = 0;
    bool augmentation = true;
    int val_check_interval = 5; // epochs between validation probes
    int knn_k = 5;
    EmbedderConfig model;
};

/**
 * Sample indices for one epoch: all samples of one (day, timestamp) group
 * holding at least two samples. Groups rotate round-robin in an order
 * shuffled once from the seed.
 */
std::vector<std::size_t> timestamp_batch(const std::vector<RgbMaskSample>& data, int epoch,
                                         std::uint64_t seed);

struct TrainResult {
    EmbedderModel model; // best-validation snapshot, or the final model
    std::vector<double> epoch_losses;
    std::vector<std::pair<int, double>> val_accuracy; // (epoch, kNN accuracy)
    int best_epoch = -1;                              // -1 when no validation ran
};

/**
 * SGD with momentum over timestamp-instanced batches, two augmented views per
 * sample. When `val` samples (with identities) are given, a kNN probe against
 * the training gallery runs every val_check_interval epochs and the
 * best-scoring epoch's snapshot is returned.
 */
TrainResult train(const std::vector<RgbMaskSample>& data, const TrainConfig& cfg,
                  const std::vector<RgbMaskSample>* val = nullptr);

/** Embed a set of samples without augmentation. */
std::vector<std::vector<double>> embed_all(const EmbedderModel& model,
                                           const std::vector<RgbMaskSample>& data);

} // namespace herd
