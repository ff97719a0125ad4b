#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <vector>

#include "tdcr/errors.hpp"

namespace tdcr {

struct AssignmentResult {
  std::vector<int> col_of_row;  // row i matched to column col_of_row[i]
  double cost = 0.0;
};

/// Exact minimum-cost perfect matching on a dense square cost matrix.
/// Shortest-augmenting-path formulation with dual potentials, O(n^3).
inline AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != n)
    throw InvalidInput("solve_assignment: nonempty square matrix required");
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based internals; p[j] is the row matched to column j, column 0 is a
  // virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
    } while (j0);
  }

  AssignmentResult res;
  res.col_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) res.col_of_row[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) res.cost += cost(i, res.col_of_row[i]);
  return res;
}

}  // namespace tdcr
