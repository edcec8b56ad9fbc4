#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "herd/clustering.hpp"
#include "herd/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

using herd::Point;

namespace {

std::vector<int> random_partition(herd::Rng& rng, std::size_t n, int max_ids) {
    std::vector<int> p(n);
    for (auto& v : p) v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_ids)));
    return p;
}

std::vector<int> relabel(const std::vector<int>& p, int offset, int stride) {
    std::vector<int> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = offset + stride * p[i];
    return out;
}

double inertia_of(const std::vector<Point>& pts, const herd::KmeansResult& km) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& c = km.centroids[static_cast<std::size_t>(km.labels[i])];
        double d = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double diff = pts[i][j] - c[j];
            d += diff * diff;
        }
        total += d;
    }
    return total;
}

} // namespace

TEST_CASE("encode_labels uses first-occurrence order") {
    CHECK(herd::encode_labels({"b", "a", "b", "c", "a"}) == std::vector<int>{0, 1, 0, 2, 1});
}

TEST_CASE("identical partitions score perfectly") {
    const std::vector<int> p{0, 0, 1, 1, 2, 2};
    CHECK(herd::ari(p, p) == doctest::Approx(1.0));
    CHECK(herd::ami(p, p) == doctest::Approx(1.0));
    CHECK(herd::nmi(p, p) == doctest::Approx(1.0));
    const std::vector<int> q = relabel(p, 7, 3);
    CHECK(herd::ari(p, q) == doctest::Approx(1.0));
    CHECK(herd::ami(p, q) == doctest::Approx(1.0));
    CHECK(herd::nmi(p, q) == doctest::Approx(1.0));
}

TEST_CASE("the crossed pair lands at ARI -0.5 exactly") {
    CHECK(herd::ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("partition metrics match the direct formulas") {
    herd::Rng rng(59);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(29);
        const int ids = 1 + static_cast<int>(rng.uniform_index(6));
        const std::vector<int> a = random_partition(rng, n, ids);
        const std::vector<int> b = random_partition(rng, n, ids);
        CHECK(herd::ari(a, b) == doctest::Approx(oracle::ari_formula(a, b)).epsilon(1e-9));
        CHECK(herd::nmi(a, b) == doctest::Approx(oracle::nmi_formula(a, b)).epsilon(1e-9));
        CHECK(herd::ami(a, b) == doctest::Approx(oracle::ami_formula(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("partition metrics are symmetric and relabel-invariant") {
    herd::Rng rng(61);
    for (int trial = 0; trial < 60; ++trial) {
        const std::vector<int> a = random_partition(rng, 24, 4);
        const std::vector<int> b = random_partition(rng, 24, 5);
        CHECK(herd::ari(a, b) == doctest::Approx(herd::ari(b, a)).epsilon(1e-12));
        CHECK(herd::nmi(a, b) == doctest::Approx(herd::nmi(b, a)).epsilon(1e-12));
        const std::vector<int> a2 = relabel(a, 100, -2);
        const std::vector<int> b2 = relabel(b, 5, 11);
        CHECK(herd::ari(a2, b2) == doctest::Approx(herd::ari(a, b)).epsilon(1e-12));
        CHECK(herd::ami(a2, b2) == doctest::Approx(herd::ami(a, b)).epsilon(1e-12));
        CHECK(herd::nmi(a2, b2) == doctest::Approx(herd::nmi(a, b)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(herd::ari({0, 1}, {0, 1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(herd::nmi({0}, {0}), std::invalid_argument);
}

TEST_CASE("hungarian accuracy on hand cases") {
    CHECK(herd::hungarian_accuracy({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));
    // one of four items lands in the wrong cluster
    CHECK(herd::hungarian_accuracy({0, 0, 1, 1}, {0, 0, 0, 1}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(herd::hungarian_accuracy({0, 1}, {0, 1, 0}), std::invalid_argument);
}

TEST_CASE("hungarian accuracy beats every fixed mapping") {
    herd::Rng rng(67);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = 4 + rng.uniform_index(24);
        const std::vector<int> truth = random_partition(rng, n, 5);
        const std::vector<int> clusters = random_partition(rng, n, 6);
        const double got = herd::hungarian_accuracy(truth, clusters);
        CHECK(got == doctest::Approx(oracle::brute_mapping_accuracy(truth, clusters)).epsilon(1e-12));
    }
}

TEST_CASE("kmeans trivial and degenerate shapes") {
    const std::vector<Point> pts{{0, 0}, {1, 0}, {4, 4}, {5, 4}};
    const herd::KmeansResult each = herd::kmeans(pts, 4, 1);
    CHECK(each.inertia == doctest::Approx(0.0));
    std::vector<int> sorted_labels = each.labels;
    std::sort(sorted_labels.begin(), sorted_labels.end());
    CHECK(sorted_labels == std::vector<int>{0, 1, 2, 3});

    CHECK_THROWS_AS(herd::kmeans(pts, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(herd::kmeans(pts, 0, 1), std::invalid_argument);
}

TEST_CASE("kmeans recovers well-separated pairs") {
    const std::vector<Point> pts{{0, 0}, {0.5, 0}, {10, 10}, {10.5, 10}};
    const herd::KmeansResult km = herd::kmeans(pts, 2, 3);
    CHECK(km.labels[0] == km.labels[1]);
    CHECK(km.labels[2] == km.labels[3]);
    CHECK(km.labels[0] != km.labels[2]);
    // centroids are the pair midpoints, in some order
    std::vector<Point> cs = km.centroids;
    std::sort(cs.begin(), cs.end());
    CHECK(cs[0][0] == doctest::Approx(0.25));
    CHECK(cs[0][1] == doctest::Approx(0.0));
    CHECK(cs[1][0] == doctest::Approx(10.25));
    CHECK(cs[1][1] == doctest::Approx(10.0));
}

TEST_CASE("kmeans is a deterministic fixed point of its own assignment") {
    herd::Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Point> pts;
        const std::size_t n = 8 + rng.uniform_index(40);
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
        }
        const std::size_t k = 1 + rng.uniform_index(std::min<std::uint64_t>(6, n));
        const herd::KmeansResult km = herd::kmeans(pts, k, 1234);

        // reported inertia is consistent, labels point to the nearest centroid
        CHECK(inertia_of(pts, km) == doctest::Approx(km.inertia).epsilon(1e-9));
        for (std::size_t i = 0; i < n; ++i) {
            double best = 1e300;
            int best_c = -1;
            for (std::size_t c = 0; c < km.centroids.size(); ++c) {
                double d = 0.0;
                for (std::size_t j = 0; j < 3; ++j) {
                    const double diff = pts[i][j] - km.centroids[c][j];
                    d += diff * diff;
                }
                if (d < best - 1e-12) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            double chosen = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double diff = pts[i][j] - km.centroids[static_cast<std::size_t>(km.labels[i])][j];
                chosen += diff * diff;
            }
            CHECK(chosen == doctest::Approx(best).epsilon(1e-9));
            (void)best_c;
        }

        // same seed, same answer; more restarts never hurt
        const herd::KmeansResult again = herd::kmeans(pts, k, 1234);
        CHECK(again.labels == km.labels);
        CHECK(again.inertia == km.inertia);
        const herd::KmeansResult single = herd::kmeans(pts, k, 1234, 1);
        CHECK(km.inertia <= single.inertia + 1e-9);
    }
}

TEST_CASE("kmeans centroids survive dataset duplication") {
    const std::vector<Point> base{{0, 0}, {1, 1}, {8, 0}, {9, 1}, {0, 8}, {1, 9}};
    std::vector<Point> doubled = base;
    doubled.insert(doubled.end(), base.begin(), base.end());
    const herd::KmeansResult a = herd::kmeans(base, 3, 5);
    const herd::KmeansResult b = herd::kmeans(doubled, 3, 5);
    std::vector<Point> ca = a.centroids, cb = b.centroids;
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) {
        for (std::size_t j = 0; j < ca[i].size(); ++j) {
            CHECK(ca[i][j] == doctest::Approx(cb[i][j]).epsilon(1e-9));
        }
    }
    CHECK(b.inertia == doctest::Approx(2.0 * a.inertia).epsilon(1e-9));
}

TEST_CASE("knn classifies the obvious cases") {
    const std::vector<Point> gallery{{1, 0}, {0, 1}};
    const std::vector<std::string> labels{"A", "B"};

    herd::KnnResult r = herd::knn_classify(gallery, labels, {{1, 0}}, {"A"}, 1);
    CHECK(r.predicted == std::vector<std::string>{"A"});
    CHECK(r.accuracy == 1.0);

    r = herd::knn_classify(gallery, labels, {{0.9, 0.1}}, {"A"}, 1);
    CHECK(r.predicted == std::vector<std::string>{"A"});

    CHECK_THROWS_AS(herd::knn_classify({}, {}, {{1, 0}}, {"A"}, 1), std::invalid_argument);
    CHECK_THROWS_AS(herd::knn_classify(gallery, labels, {{1, 0}}, {"A"}, 3),
                    std::invalid_argument);
}

TEST_CASE("knn majority vote and tie handling") {
    // three classes; query nearest single point is C but B holds the majority
    const std::vector<Point> gallery{{1, 0}, {0.95, 0.3}, {0.9, 0.43}, {0, 1}};
    const std::vector<std::string> labels{"B", "B", "C", "A"};
    const Point query{0.92, 0.39};
    herd::KnnResult r = herd::knn_classify(gallery, labels, {query}, {"B"}, 3);
    CHECK(r.predicted[0] == "B");
    CHECK(r.accuracy == 1.0);

    // k=2 forces a 1-1 tie between C and B: the nearer representative wins
    r = herd::knn_classify(gallery, labels, {query}, {"C"}, 2);
    CHECK(r.predicted[0] == "C");
}

TEST_CASE("knn ranks by cosine, not euclidean, distance") {
    // the long vector points the same way as the query
    const std::vector<Point> gallery{{10, 0}, {0.6, 0.8}};
    const std::vector<std::string> labels{"X", "Y"};
    const herd::KnnResult r = herd::knn_classify(gallery, labels, {{0.1, 0}}, {"X"}, 1);
    CHECK(r.predicted[0] == "X");
}

TEST_CASE("pca projection preserves planar geometry") {
    // points on a tilted plane through a 5-D space
    herd::Rng rng(73);
    std::vector<Point> pts;
    std::vector<std::array<double, 2>> coords;
    const std::vector<double> u{0.5, 0.5, 0.5, 0.5, 0.0};
    const std::vector<double> v{0.5, -0.5, 0.5, -0.5, 0.0};
    for (int i = 0; i < 40; ++i) {
        const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
        Point p(5, 0.0);
        for (int j = 0; j < 5; ++j) p[static_cast<std::size_t>(j)] = a * u[j] + b * v[j];
        pts.push_back(p);
        coords.push_back({a, b});
    }
    const auto proj = herd::pca_project_2d(pts);
    REQUIRE(proj.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double da = std::hypot(coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]);
            const double db = std::hypot(proj[i][0] - proj[j][0], proj[i][1] - proj[j][1]);
            CHECK(da == doctest::Approx(db).epsilon(1e-9));
        }
    }
}

TEST_CASE("pca degenerate inputs") {
    const auto same = herd::pca_project_2d({{3, 3}, {3, 3}, {3, 3}});
    for (const auto& p : same) {
        CHECK(p[0] == doctest::Approx(0.0));
        CHECK(p[1] == doctest::Approx(0.0));
    }

    // collinear data: all variance in the first component
    const auto line = herd::pca_project_2d({{0, 0}, {1, 2}, {2, 4}, {3, 6}});
    for (const auto& p : line) CHECK(std::abs(p[1]) < 1e-9);
    CHECK(std::abs(line[0][0] - line[3][0]) > 1.0);

    // one-dimensional input gets a zero second component
    const auto one_d = herd::pca_project_2d({{1}, {2}, {5}});
    for (const auto& p : one_d) CHECK(p[1] == 0.0);

    CHECK_THROWS_AS(herd::pca_project_2d({{1, 2}}), std::invalid_argument);
}
