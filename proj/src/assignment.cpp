#include "herd/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace herd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/**
 * Jonker-Volgenant shortest augmenting path solver on a square matrix.
 * Returns row->col matching and the dual potentials (u, v) so that
 * reduced costs c[r][c] - u[r] - v[c] are non-negative and zero on
 * matched edges.
 */
struct JvResult {
    std::vector<int> row_to_col;
    std::vector<double> u, v;
};

JvResult jv_square(const std::vector<double>& cost, std::size_t n) {
    JvResult res;
    res.row_to_col.assign(n, -1);
    res.u.assign(n, 0.0);
    res.v.assign(n, 0.0);
    std::vector<int> col_to_row(n, -1);

    for (std::size_t r0 = 0; r0 < n; ++r0) {
        // Dijkstra from the free row r0 over columns.
        std::vector<double> dist(n, kInf);
        std::vector<int> pred(n, static_cast<int>(r0));
        std::vector<char> done(n, 0);
        for (std::size_t c = 0; c < n; ++c) {
            dist[c] = cost[r0 * n + c] - res.u[r0] - res.v[c];
        }
        int sink = -1;
        double min_dist = 0.0;
        std::vector<std::size_t> scanned;
        while (sink < 0) {
            std::size_t best = n;
            double best_d = kInf;
            for (std::size_t c = 0; c < n; ++c) {
                if (!done[c] && dist[c] < best_d) {
                    best_d = dist[c];
                    best = c;
                }
            }
            done[best] = 1;
            scanned.push_back(best);
            min_dist = best_d;
            if (col_to_row[best] < 0) {
                sink = static_cast<int>(best);
            } else {
                const std::size_t r = static_cast<std::size_t>(col_to_row[best]);
                for (std::size_t c = 0; c < n; ++c) {
                    if (done[c]) continue;
                    const double nd = best_d + cost[r * n + c] - res.u[r] - res.v[c];
                    if (nd < dist[c]) {
                        dist[c] = nd;
                        pred[c] = static_cast<int>(r);
                    }
                }
            }
        }
        // Update duals along the scanned set.
        res.u[r0] += min_dist;
        for (std::size_t c : scanned) {
            if (static_cast<int>(c) == sink) continue;
            const std::size_t r = static_cast<std::size_t>(col_to_row[c]);
            res.u[r] += min_dist - dist[c];
            res.v[c] -= min_dist - dist[c];
        }
        // Augment along the alternating path back to r0.
        int c = sink;
        while (true) {
            const int r = pred[static_cast<std::size_t>(c)];
            col_to_row[static_cast<std::size_t>(c)] = r;
            const int prev = res.row_to_col[static_cast<std::size_t>(r)];
            res.row_to_col[static_cast<std::size_t>(r)] = c;
            if (static_cast<std::size_t>(r) == r0) break;
            c = prev;
        }
    }
    return res;
}

/**
 * Feasibility check used by the lexicographic refinement: can rows
 * [row+1, n) be perfectly matched inside the zero-reduced-cost graph,
 * given that columns in `used` are already taken? Kuhn's algorithm.
 */
struct ZeroGraph {
    std::size_t n = 0;
    std::vector<std::vector<int>> adj; // per row, admissible columns
};

bool try_kuhn(const ZeroGraph& g, std::size_t row, std::vector<char>& visited,
              std::vector<int>& col_match) {
    for (int c : g.adj[row]) {
        if (visited[static_cast<std::size_t>(c)]) continue;
        visited[static_cast<std::size_t>(c)] = 1;
        if (col_match[static_cast<std::size_t>(c)] < 0 ||
            try_kuhn(g, static_cast<std::size_t>(col_match[static_cast<std::size_t>(c)]), visited,
                     col_match)) {
            col_match[static_cast<std::size_t>(c)] = static_cast<int>(row);
            return true;
        }
    }
    return false;
}

bool rows_matchable(const ZeroGraph& g, std::size_t first_row, const std::vector<char>& used_cols) {
    std::vector<int> col_match(g.n, -1);
    for (std::size_t c = 0; c < g.n; ++c) {
        if (used_cols[c]) col_match[c] = static_cast<int>(g.n); // sentinel, never freed
    }
    for (std::size_t r = first_row; r < g.n; ++r) {
        std::vector<char> visited(used_cols.begin(), used_cols.end());
        if (!try_kuhn(g, r, visited, col_match)) return false;
    }
    return true;
}

} // namespace

AssignmentResult solve_assignment(const CostMatrix& m) {
    if (m.rows == 0 || m.cols == 0) {
        AssignmentResult r;
        r.assignment.assign(m.rows, -1);
        return r;
    }
    if (m.cost.size() != m.rows * m.cols) {
        throw std::invalid_argument("solve_assignment: cost size does not match dimensions");
    }
    for (double c : m.cost) {
        if (!std::isfinite(c)) throw std::invalid_argument("solve_assignment: non-finite cost");
    }

    const std::size_t n = std::max(m.rows, m.cols);
    std::vector<double> cost(n * n, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            cost[r * n + c] = m.at(r, c);
        }
    }

    JvResult jv = jv_square(cost, n);

    // All optimal solutions live inside the zero-reduced-cost graph given the
    // optimal duals (complementary slackness). Walk rows in order, always
    // fixing the smallest admissible column that keeps the rest matchable.
    double max_abs = 0.0;
    for (double c : cost) max_abs = std::max(max_abs, std::abs(c));
    const double eps = 1e-9 * (1.0 + max_abs);

    ZeroGraph g;
    g.n = n;
    g.adj.assign(n, {});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (cost[r * n + c] - jv.u[r] - jv.v[c] <= eps) {
                g.adj[r].push_back(static_cast<int>(c));
            }
        }
    }

    std::vector<char> used(n, 0);
    std::vector<int> pick(n, -1);
    for (std::size_t r = 0; r < n; ++r) {
        // Real columns in ascending order first so rectangular pads (dummy
        // columns >= m.cols) are only used when no real column works. For the
        // lexicographic order dummy assignment maps to -1 anyway.
        std::vector<int> order = g.adj[r];
        std::sort(order.begin(), order.end());
        bool fixed = false;
        for (int c : order) {
            if (used[static_cast<std::size_t>(c)]) continue;
            used[static_cast<std::size_t>(c)] = 1;
            if (rows_matchable(g, r + 1, used)) {
                pick[r] = c;
                fixed = true;
                break;
            }
            used[static_cast<std::size_t>(c)] = 0;
        }
        if (!fixed) throw std::logic_error("solve_assignment: refinement lost feasibility");
    }

    AssignmentResult out;
    out.assignment.assign(m.rows, -1);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const int c = pick[r];
        if (c >= 0 && static_cast<std::size_t>(c) < m.cols) {
            out.assignment[r] = c;
            out.total_cost += m.at(r, static_cast<std::size_t>(c));
        }
    }
    return out;
}

} // namespace herd
