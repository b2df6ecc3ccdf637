#include "permabound/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

namespace permabound {

NonNegMatrix validate(const Matrix& raw) {
  if (raw.rows() == 0 || raw.cols() == 0) {
    throw std::invalid_argument("matrix must have n >= 1");
  }
  if (raw.rows() != raw.cols()) {
    throw std::invalid_argument("matrix must be square, got " + std::to_string(raw.rows()) +
                                "x" + std::to_string(raw.cols()));
  }
  const Eigen::Index n = raw.rows();
  Mask support(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = raw(i, j);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite entry at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      }
      if (v < 0.0) {
        throw std::invalid_argument("negative entry at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      }
      support(i, j) = v > 0.0;
    }
  }
  return NonNegMatrix(raw, std::move(support));
}

NonNegMatrix validate(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw std::invalid_argument("matrix must have n >= 1");
  Matrix raw(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw std::invalid_argument("row " + std::to_string(i) + " has " +
                                  std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(n));
    }
    for (Eigen::Index j = 0; j < n; ++j) raw(i, j) = row[static_cast<std::size_t>(j)];
  }
  return validate(raw);
}

double max_marginal_deviation(const Matrix& b) {
  if (b.size() == 0) return 0.0;
  const double rows = (b.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (b.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

DoublyStochasticMatrix::DoublyStochasticMatrix(Matrix entries, double tolerance)
    : entries_(std::move(entries)), tolerance_(tolerance) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("doubly stochastic matrix must be square with n >= 1");
  }
  if (!(tolerance_ >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
  for (Eigen::Index k = 0; k < entries_.size(); ++k) {
    double& v = entries_.data()[k];
    if (!std::isfinite(v) || v < -tolerance_ || v > 1.0 + tolerance_) {
      throw std::invalid_argument("entry outside [0,1]");
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  const double dev = max_marginal_deviation(entries_);
  if (dev > tolerance_) {
    throw std::invalid_argument("marginal deviation " + std::to_string(dev) +
                                " exceeds tolerance " + std::to_string(tolerance_));
  }
}

bool DoublyStochasticMatrix::supported_on(const NonNegMatrix& m) const {
  if (m.n() != n()) return false;
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j)
      if (entries_(i, j) > 0.0 && !m.in_support(i, j)) return false;
  return true;
}

namespace {

// Kuhn's augmenting-path matching. match_col[j] = row matched to column j.
bool try_augment(int row, const Mask& adj, std::vector<int>& match_col,
                 std::vector<char>& visited) {
  const int n = static_cast<int>(adj.rows());
  // Iterative DFS over alternating paths.
  struct Frame {
    int row;
    int next_col;
  };
  std::vector<Frame> stack{{row, 0}};
  std::vector<int> via_col;  // column taken at each depth
  while (!stack.empty()) {
    Frame& f = stack.back();
    bool descended = false;
    while (f.next_col < n) {
      const int j = f.next_col++;
      if (!adj(f.row, j) || visited[static_cast<std::size_t>(j)]) continue;
      visited[static_cast<std::size_t>(j)] = 1;
      const int owner = match_col[static_cast<std::size_t>(j)];
      if (owner < 0) {
        via_col.push_back(j);
        // Flip the path.
        for (std::size_t d = 0; d < via_col.size(); ++d) {
          match_col[static_cast<std::size_t>(via_col[d])] = stack[d].row;
        }
        return true;
      }
      via_col.push_back(j);
      stack.push_back({owner, 0});
      descended = true;
      break;
    }
    if (!descended) {
      stack.pop_back();
      if (!via_col.empty()) via_col.pop_back();
    }
  }
  return false;
}

Permutation maximum_matching(const Mask& adj) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> match_col(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    try_augment(i, adj, match_col, visited);
  }
  Permutation row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    const int r = match_col[static_cast<std::size_t>(j)];
    if (r >= 0) row_to_col[static_cast<std::size_t>(r)] = j;
  }
  return row_to_col;
}

bool is_perfect(const Permutation& matching) {
  return std::all_of(matching.begin(), matching.end(), [](int c) { return c >= 0; });
}

// Given a perfect matching sigma, edge (i, j) with j = sigma(r) lies on some
// perfect matching iff row r reaches row i in the digraph a -> b whenever
// (a, sigma(b)) is a support edge (an alternating cycle through (i, j)).
Mask edges_on_perfect_matchings(const Mask& adj, const Permutation& sigma) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> row_of_col(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) row_of_col[static_cast<std::size_t>(sigma[static_cast<std::size_t>(r)])] = r;

  Mask reach = Mask::Constant(n, n, false);
  for (int s = 0; s < n; ++s) {
    std::deque<int> queue{s};
    reach(s, s) = true;
    while (!queue.empty()) {
      const int a = queue.front();
      queue.pop_front();
      for (int j = 0; j < n; ++j) {
        if (!adj(a, j)) continue;
        const int b = row_of_col[static_cast<std::size_t>(j)];
        if (!reach(s, b)) {
          reach(s, b) = true;
          queue.push_back(b);
        }
      }
    }
  }
  Mask out = Mask::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!adj(i, j)) continue;
      const int r = row_of_col[static_cast<std::size_t>(j)];
      out(i, j) = (r == i) || reach(r, i);
    }
  }
  return out;
}

}  // namespace

BipartiteSupport support_has_perfect_matching(const NonNegMatrix& m) {
  BipartiteSupport out;
  out.n = m.n();
  out.adjacency = m.support();
  out.matching = maximum_matching(m.support());
  out.has_perfect_matching = is_perfect(out.matching);
  if (out.has_perfect_matching) {
    const Mask usable = edges_on_perfect_matchings(m.support(), out.matching);
    out.dm_irreducible_flag = (usable.array() == m.support().array()).all();
  }
  return out;
}

Mask matchable_edges(const NonNegMatrix& m) {
  const Permutation matching = maximum_matching(m.support());
  if (!is_perfect(matching)) return Mask::Constant(m.n(), m.n(), false);
  return edges_on_perfect_matchings(m.support(), matching);
}

NonNegMatrix prune_to_total_support(const NonNegMatrix& m) {
  const Mask keep = matchable_edges(m);
  if ((keep.array() == m.support().array()).all()) return m;
  Matrix pruned = m.entries();
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j)
      if (!keep(i, j)) pruned(i, j) = 0.0;
  return validate(pruned);
}

Matrix project_to_support(const Matrix& b, const NonNegMatrix& m) {
  if (b.rows() != m.n() || b.cols() != m.n()) {
    throw std::invalid_argument("project_to_support: dimension mismatch");
  }
  return m.support().select(b, Matrix::Zero(m.n(), m.n()));
}

NonNegMatrix identity_matrix(int n) { return validate(Matrix::Identity(n, n)); }
NonNegMatrix ones_matrix(int n) { return validate(Matrix::Ones(n, n)); }

}  // namespace permabound
