#pragma once

#include <utility>
#include <vector>

namespace robotack::perception {

using CostMatrix = std::vector<std::vector<double>>;  // row-major, rows x cols

// Minimum-cost assignment. Rectangular inputs are padded to square with
// zero-cost dummies; only real (row, col) pairs are returned, sorted by row.
// Every row is matched when rows <= cols, and every column otherwise.
// Disallowed pairs should carry a large finite sentinel and be filtered by
// the caller.
std::vector<std::pair<int, int>> hungarian_assign(const CostMatrix& cost);

double assignment_cost(const CostMatrix& cost, const std::vector<std::pair<int, int>>& pairs);

}  // namespace robotack::perception
