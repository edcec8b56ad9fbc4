#pragma once

#include <cstddef>
#include <vector>

namespace herd {

/**
 * Cost matrix with `rows` x `cols` entries stored row-major. Rectangular
 * matrices are allowed; the solver pads internally.
 */
struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> cost;

    double at(std::size_t r, std::size_t c) const { return cost[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return cost[r * cols + c]; }
};

/**
 * Minimum-cost assignment. assignment[r] is the column matched to row r, or
 * -1 when the row is unmatched (only possible when rows > cols). Among all
 * minimum-cost solutions the returned one has the lexicographically smallest
 * column sequence (assignment[0], assignment[1], ...).
 */
struct AssignmentResult {
    std::vector<int> assignment;
    double total_cost = 0.0;
};

AssignmentResult solve_assignment(const CostMatrix& m);

} // namespace herd
