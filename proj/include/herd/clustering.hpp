#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace herd {

using Point = std::vector<double>;

/** Map arbitrary string labels to dense integer ids (first occurrence order). */
std::vector<int> encode_labels(const std::vector<std::string>& labels);

struct KmeansResult {
    std::vector<int> labels;
    std::vector<Point> centroids;
    double inertia = 0.0;
};

/**
 * Lloyd's algorithm from k-means++ seeding, best of `restarts` runs by
 * inertia. Deterministic for a given seed. Empty clusters are refilled with
 * the point farthest from its current centroid.
 */
KmeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    int restarts = 10, int max_iters = 300);

/** Adjusted Rand index (permutation-model expectation). */
double ari(const std::vector<int>& a, const std::vector<int>& b);
/** Mutual information in nats between two partitions. */
double mutual_information(const std::vector<int>& a, const std::vector<int>& b);
/** Adjusted mutual information, arithmetic-mean normalization. */
double ami(const std::vector<int>& a, const std::vector<int>& b);
/** Normalized mutual information, arithmetic-mean normalization. */
double nmi(const std::vector<int>& a, const std::vector<int>& b);

/**
 * Accuracy after the optimal one-to-one cluster-to-label mapping (maximum
 * matched count over the contingency table).
 */
double hungarian_accuracy(const std::vector<int>& truth, const std::vector<int>& clusters);

struct KnnResult {
    std::vector<std::string> predicted;
    double accuracy = 0.0;
};

/**
 * k-nearest-neighbour classification by cosine distance with majority vote.
 * A tied vote goes to the tied label whose nearest representative is closest.
 */
KnnResult knn_classify(const std::vector<Point>& gallery,
                       const std::vector<std::string>& gallery_labels,
                       const std::vector<Point>& queries,
                       const std::vector<std::string>& query_labels, std::size_t k);

/**
 * Projection onto the top-2 principal components. Component sign is fixed so
 * the largest-magnitude coordinate of each eigenvector is positive.
 */
std::vector<std::array<double, 2>> pca_project_2d(const std::vector<Point>& points);

} // namespace herd
