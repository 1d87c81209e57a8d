#include "robotack/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace robotack::perception {

std::vector<std::pair<int, int>> hungarian_assign(const CostMatrix& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(cost[0].size());
  if (cols == 0) return {};
  for (const auto& r : cost)
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument("hungarian_assign: ragged matrix");

  const int n = std::max(rows, cols);
  const auto c = [&](int i, int j) { return (i < rows && j < cols) ? cost[i][j] : 0.0; };

  // Shortest augmenting path with row/column potentials, 1-based.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::pair<int, int>> out;
  for (int j = 1; j <= n; ++j) {
    const int i = p[j] - 1;
    if (i < rows && j - 1 < cols) out.emplace_back(i, j - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double assignment_cost(const CostMatrix& cost, const std::vector<std::pair<int, int>>& pairs) {
  double total = 0.0;
  for (auto [i, j] : pairs) total += cost[i][j];
  return total;
}

}  // namespace robotack::perception
