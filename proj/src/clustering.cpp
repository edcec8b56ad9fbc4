#include "herd/clustering.hpp"

#include "herd/assignment.hpp"
#include "herd/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace herd {

namespace {

void check_points(const std::vector<Point>& points) {
    if (points.empty()) throw std::invalid_argument("no points");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw std::invalid_argument("zero-dimensional points");
    for (const Point& p : points) {
        if (p.size() != dim) throw std::invalid_argument("inconsistent point dimensions");
    }
}

double sq_dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double cosine_distance(const Point& a, const Point& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0) return 1.0;
    return 1.0 - dot / denom;
}

KmeansResult kmeans_once(const std::vector<Point>& points, std::size_t k, Rng& rng,
                         int max_iters) {
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();

    // k-means++ seeding.
    std::vector<Point> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const Point& c : centroids) best = std::min(best, sq_dist(points[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.uniform_index(n);
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(points[chosen]);
    }

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points[i], centroids[c]);
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            if (labels[i] != best_c) {
                labels[i] = best_c;
                changed = true;
            }
        }

        std::vector<Point> sums(k, Point(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(labels[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Move this centroid onto the point farthest from its own
                // centroid, then let the next sweep re-settle.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(points[i], centroids[static_cast<std::size_t>(labels[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids[c] = points[far];
                labels[far] = static_cast<int>(c);
                changed = true;
            } else {
                for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
        if (!changed && iter > 0) break;
    }

    KmeansResult res;
    res.labels = std::move(labels);
    res.centroids = std::move(centroids);
    for (std::size_t i = 0; i < n; ++i) {
        res.inertia += sq_dist(points[i], res.centroids[static_cast<std::size_t>(res.labels[i])]);
    }
    return res;
}

struct Contingency {
    std::vector<std::vector<std::size_t>> table; // rows: a, cols: b
    std::vector<std::size_t> row_sums, col_sums;
    std::size_t n = 0;
};

Contingency contingency_table(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("partition length mismatch");
    if (a.size() < 2) throw std::invalid_argument("partitions need at least 2 items");
    std::map<int, std::size_t> ra, rb;
    for (int x : a) ra.emplace(x, ra.size());
    for (int x : b) rb.emplace(x, rb.size());
    Contingency c;
    c.n = a.size();
    c.table.assign(ra.size(), std::vector<std::size_t>(rb.size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++c.table[ra[a[i]]][rb[b[i]]];
    }
    c.row_sums.assign(ra.size(), 0);
    c.col_sums.assign(rb.size(), 0);
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        for (std::size_t j = 0; j < c.table[i].size(); ++j) {
            c.row_sums[i] += c.table[i][j];
            c.col_sums[j] += c.table[i][j];
        }
    }
    return c;
}

double comb2(std::size_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

double entropy(const std::vector<std::size_t>& sums, std::size_t n) {
    double h = 0.0;
    for (std::size_t s : sums) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information_of(const Contingency& c) {
    double mi = 0.0;
    const double n = static_cast<double>(c.n);
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        for (std::size_t j = 0; j < c.table[i].size(); ++j) {
            const std::size_t nij = c.table[i][j];
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / n;
            mi += pij * std::log(n * static_cast<double>(nij) /
                                 (static_cast<double>(c.row_sums[i]) *
                                  static_cast<double>(c.col_sums[j])));
        }
    }
    return std::max(mi, 0.0);
}

/**
 * Expected mutual information under the hypergeometric model of random
 * partitions with fixed marginals (the AMI adjustment term).
 */
double expected_mutual_information(const Contingency& c) {
    const double n = static_cast<double>(c.n);
    const double lg_n = std::lgamma(n + 1.0);
    double emi = 0.0;
    for (std::size_t ai : c.row_sums) {
        for (std::size_t bj : c.col_sums) {
            const double a = static_cast<double>(ai);
            const double b = static_cast<double>(bj);
            const std::size_t lo = (ai + bj > c.n) ? ai + bj - c.n : 1;
            const std::size_t hi = std::min(ai, bj);
            for (std::size_t nij = std::max<std::size_t>(lo, 1); nij <= hi; ++nij) {
                const double v = static_cast<double>(nij);
                const double term1 = v / n * std::log(n * v / (a * b));
                const double lterm2 = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) +
                                      std::lgamma(n - a + 1.0) + std::lgamma(n - b + 1.0) -
                                      lg_n - std::lgamma(v + 1.0) - std::lgamma(a - v + 1.0) -
                                      std::lgamma(b - v + 1.0) -
                                      std::lgamma(n - a - b + v + 1.0);
                emi += term1 * std::exp(lterm2);
            }
        }
    }
    return emi;
}

bool degenerate_match(const Contingency& c) {
    // Both partitions trivial in the same way: single cluster each, or every
    // item its own cluster in both. Agreement is perfect by convention.
    const std::size_t ka = c.row_sums.size();
    const std::size_t kb = c.col_sums.size();
    return (ka == 1 && kb == 1) || (ka == c.n && kb == c.n);
}

} // namespace

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const std::string& s : labels) {
        const auto [it, _] = ids.emplace(s, static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

KmeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                    int restarts, int max_iters) {
    check_points(points);
    if (k == 0 || k > points.size()) throw std::invalid_argument("kmeans: bad cluster count");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");

    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        KmeansResult res = kmeans_once(points, k, rng, max_iters);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency_table(a, b);
    if (degenerate_match(c)) return 1.0;
    double index = 0.0;
    for (const auto& row : c.table) {
        for (std::size_t nij : row) index += comb2(nij);
    }
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t s : c.row_sums) sum_a += comb2(s);
    for (std::size_t s : c.col_sums) sum_b += comb2(s);
    const double expected = sum_a * sum_b / comb2(c.n);
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    return mutual_information_of(contingency_table(a, b));
}

double ami(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency_table(a, b);
    if (degenerate_match(c)) return 1.0;
    const double mi = mutual_information_of(c);
    const double emi = expected_mutual_information(c);
    const double mean_h = 0.5 * (entropy(c.row_sums, c.n) + entropy(c.col_sums, c.n));
    double denom = mean_h - emi;
    const double eps = std::numeric_limits<double>::epsilon();
    if (denom >= 0.0) {
        denom = std::max(denom, eps);
    } else {
        denom = std::min(denom, -eps);
    }
    return (mi - emi) / denom;
}

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency_table(a, b);
    if (degenerate_match(c)) return 1.0;
    const double mi = mutual_information_of(c);
    const double mean_h = 0.5 * (entropy(c.row_sums, c.n) + entropy(c.col_sums, c.n));
    if (mean_h <= 0.0) return 1.0;
    return mi / mean_h;
}

double hungarian_accuracy(const std::vector<int>& truth, const std::vector<int>& clusters) {
    if (truth.size() != clusters.size()) throw std::invalid_argument("partition length mismatch");
    if (truth.empty()) throw std::invalid_argument("empty partitions");
    std::map<int, std::size_t> rt, rc;
    for (int x : truth) rt.emplace(x, rt.size());
    for (int x : clusters) rc.emplace(x, rc.size());

    CostMatrix m;
    m.rows = rc.size();
    m.cols = rt.size();
    m.cost.assign(m.rows * m.cols, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        m.at(rc[clusters[i]], rt[truth[i]]) -= 1.0;
    }
    const AssignmentResult res = solve_assignment(m);
    double matched = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (res.assignment[r] >= 0) {
            matched -= m.at(r, static_cast<std::size_t>(res.assignment[r]));
        }
    }
    return matched / static_cast<double>(truth.size());
}

KnnResult knn_classify(const std::vector<Point>& gallery,
                       const std::vector<std::string>& gallery_labels,
                       const std::vector<Point>& queries,
                       const std::vector<std::string>& query_labels, std::size_t k) {
    if (gallery.empty()) throw std::invalid_argument("knn: empty gallery");
    if (gallery.size() != gallery_labels.size()) {
        throw std::invalid_argument("knn: gallery label count mismatch");
    }
    if (queries.size() != query_labels.size()) {
        throw std::invalid_argument("knn: query label count mismatch");
    }
    if (k == 0 || k > gallery.size()) throw std::invalid_argument("knn: bad k");

    KnnResult out;
    out.predicted.reserve(queries.size());
    std::size_t correct = 0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(gallery.size());
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            dists.emplace_back(cosine_distance(queries[q], gallery[g]), g);
        }
        std::sort(dists.begin(), dists.end());
        std::map<std::string, std::size_t> votes;
        std::map<std::string, std::size_t> best_rank;
        for (std::size_t i = 0; i < k; ++i) {
            const std::string& lab = gallery_labels[dists[i].second];
            ++votes[lab];
            if (!best_rank.count(lab)) best_rank[lab] = i;
        }
        std::size_t top = 0;
        for (const auto& [lab, cnt] : votes) top = std::max(top, cnt);
        std::string winner;
        std::size_t winner_rank = gallery.size();
        for (const auto& [lab, cnt] : votes) {
            if (cnt == top && best_rank[lab] < winner_rank) {
                winner = lab;
                winner_rank = best_rank[lab];
            }
        }
        if (winner == query_labels[q]) ++correct;
        out.predicted.push_back(std::move(winner));
    }
    out.accuracy = queries.empty()
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(queries.size());
    return out;
}

std::vector<std::array<double, 2>> pca_project_2d(const std::vector<Point>& points) {
    if (points.size() < 2) throw std::invalid_argument("pca: need at least 2 points");
    check_points(points);
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = points[i][d];
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("pca: eigendecomposition failed");

    // Eigenvalues come out ascending; take the last two columns. One-dimensional
    // input keeps a zero second component.
    const int comps = dim >= 2 ? 2 : 1;
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 2);
    for (int c = 0; c < comps; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(dim) - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        basis.col(c) = v;
    }

    const Eigen::MatrixXd proj = x * basis;
    std::vector<std::array<double, 2>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {proj(static_cast<Eigen::Index>(i), 0), proj(static_cast<Eigen::Index>(i), 1)};
    }
    return out;
}

} // namespace herd
