#pragma once

#include "herd/clustering.hpp"
#include "herd/dataset.hpp"
#include "herd/embedder.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace herd {

enum class FoldMode { kWithinDayK5, kDayWise, kSingleDay };

struct Fold {
    std::string name;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
};

struct FoldPlan {
    FoldMode mode = FoldMode::kWithinDayK5;
    std::vector<Fold> folds;
};

/**
 * Split plans over a sample index.
 *  - kWithinDayK5: requires a single day; five folds, each sample tested once.
 *  - kDayWise: one fold per day; test = the day, validation = the previous
 *    day in cyclic ascending order, train = the rest. Requires >= 3 days.
 *  - kSingleDay: requires a single day; one fold with an 80/20 train/test split.
 */
FoldPlan make_fold_plan(const std::vector<SampleMeta>& samples, FoldMode mode,
                        std::uint64_t seed = 0);

struct FoldReport {
    std::string fold;
    double knn_accuracy = 0.0;
    double ari = 0.0;
    double ami = 0.0;
    double nmi = 0.0;
    double ha_accuracy = 0.0;
    int best_epoch = -1;
    std::vector<double> epoch_losses;
    std::vector<std::pair<int, double>> val_accuracy;
    // Test-set artifacts for reporting and plots.
    std::vector<std::string> test_sample_ids;
    std::vector<std::string> test_labels;
    std::vector<int> kmeans_labels;
    std::vector<Point> test_embeddings;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0; // population form
};

struct ProtocolReport {
    std::vector<FoldReport> folds;
    Aggregate knn, ari, ami, nmi, ha;
};

/**
 * Runs every fold of the plan: trains the embedder on the fold's train
 * samples (validation probes when the fold has one), then evaluates kNN
 * against the train gallery and K-Means (k = number of test identities) with
 * ARI/AMI/NMI/HA on the test split. `meta` and `samples` are parallel.
 */
ProtocolReport run_protocol(const std::vector<SampleMeta>& meta,
                            const std::vector<RgbMaskSample>& samples, const FoldPlan& plan,
                            const TrainConfig& cfg);

Aggregate aggregate_of(const std::vector<double>& values);

} // namespace herd
