#include "permabound/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace permabound {

AssignmentSolution assignment_lmo(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != n) throw std::invalid_argument("assignment_lmo: cost must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < cost.size(); ++k) {
    const double v = cost.data()[k];
    if (std::isnan(v) || v == kInf) throw std::invalid_argument("assignment_lmo: NaN or +inf cost");
  }

  // Shortest augmenting paths with row/column potentials on the minimization
  // problem -cost (forbidden cells become +inf). 1-based with a sentinel
  // column 0.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> row_of(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(n + 1), 0);
  auto w = [&](int i, int j) { return -cost(i - 1, j - 1); };

  for (int i = 1; i <= n; ++i) {
    row_of[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = row_of[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = w(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      if (j1 < 0 || delta == kInf) {
        throw std::domain_error("assignment_lmo: no assignment avoids the forbidden cells");
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(row_of[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      row_of[static_cast<std::size_t>(j0)] = row_of[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentSolution out;
  out.sigma.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) out.sigma[static_cast<std::size_t>(row_of[static_cast<std::size_t>(j)] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) out.value += cost(i, out.sigma[static_cast<std::size_t>(i)]);
  if (!std::isfinite(out.value)) {
    throw std::domain_error("assignment_lmo: no assignment avoids the forbidden cells");
  }
  return out;
}

}  // namespace permabound
