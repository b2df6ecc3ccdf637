#include "permabound/bethe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "permabound/assignment.hpp"
#include "permabound/entropy.hpp"
#include "permabound/exact.hpp"

namespace permabound {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFeasibleDeviation = 1e-12;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double entry_gradient(double a, double b) {
  return std::log(a) - std::log(b) - std::log1p(-b) - 2.0;
}

// Gradient at B clamped into [delta, 1 - delta]; forced entries (B = 1) and
// vanishing ones stay finite.
Matrix clamped_gradient(const NonNegMatrix& m, const Matrix& b) {
  const int n = m.n();
  Matrix g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.in_support(i, j)) {
        const double bij = std::clamp(b(i, j), kBoundaryClamp, 1.0 - kBoundaryClamp);
        g(i, j) = entry_gradient(m(i, j), bij);
      }
  return g;
}

double support_inner(const NonNegMatrix& m, const Matrix& x, const Matrix& y) {
  double s = 0.0;
  for (int i = 0; i < m.n(); ++i)
    for (int j = 0; j < m.n(); ++j)
      if (m.in_support(i, j)) s += x(i, j) * y(i, j);
  return s;
}

struct Start {
  NonNegMatrix work;
  Matrix b;
};

Start initial_point(const NonNegMatrix& m) {
  if (!support_has_perfect_matching(m).has_perfect_matching) {
    throw InfeasibleSupport("bethe solver: support has no perfect matching");
  }
  NonNegMatrix work = prune_to_total_support(m);
  Matrix b = sinkhorn_solve(work).b.entries();
  return {std::move(work), std::move(b)};
}

BetheResult finish(const NonNegMatrix& m, const Matrix& b, SolveDiagnostics diag,
                   Clock::time_point start) {
  diag.wall_time = seconds_since(start);
  DoublyStochasticMatrix ds(b, std::max(max_marginal_deviation(b), kDefaultCertifyTolerance));
  const double value = r_o_objective(m, ds);
  return BetheResult{std::move(ds), value, diag};
}

struct Block {
  std::vector<int> rows;
  std::vector<int> cols;
};

// Connected components of the bipartite support graph. With total support
// every component is square and the Birkhoff constraints split across them.
std::vector<Block> support_blocks(const NonNegMatrix& m) {
  const int n = m.n();
  std::vector<int> parent(static_cast<std::size_t>(2 * n));
  for (int v = 0; v < 2 * n; ++v) parent[static_cast<std::size_t>(v)] = v;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.in_support(i, j)) parent[static_cast<std::size_t>(find(i))] = find(n + j);
  std::vector<Block> blocks;
  std::vector<int> index(static_cast<std::size_t>(2 * n), -1);
  for (int v = 0; v < 2 * n; ++v) {
    const int root = find(v);
    if (index[static_cast<std::size_t>(root)] < 0) {
      index[static_cast<std::size_t>(root)] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    Block& block = blocks[static_cast<std::size_t>(index[static_cast<std::size_t>(root)])];
    if (v < n) block.rows.push_back(v);
    else block.cols.push_back(v - n);
  }
  for (const Block& block : blocks) {
    if (block.rows.size() != block.cols.size()) {
      throw InfeasibleSupport("bethe solver: support block is not square");
    }
  }
  return blocks;
}

// Classic Frank-Wolfe with exact line search on one block, in place.
// Returns the final gap; `iterations` receives the iteration count.
double frank_wolfe_block(const NonNegMatrix& work, Matrix& b, double tol, int max_iters,
                         int& iterations) {
  // Full steps stop short of the vertex so the gradient stays unclamped.
  constexpr double kStepMargin = 1e-6;
  const int n = work.n();

  // phi'(gamma) = <grad f(B + gamma D), D>, restricted to entries that move.
  auto slope_at = [&](const Matrix& d, double gamma) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (!work.in_support(i, j) || d(i, j) == 0.0) continue;
        const double x = b(i, j) + gamma * d(i, j);
        if (x <= 0.0) return -std::numeric_limits<double>::infinity();
        if (x >= 1.0) return std::numeric_limits<double>::infinity();
        s += d(i, j) * entry_gradient(work(i, j), x);
      }
    return s;
  };

  for (int k = 0;; ++k) {
    iterations = k;
    const Matrix grad = clamped_gradient(work, b);
    Matrix cost = Matrix::Constant(n, n, kNegInf);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (work.in_support(i, j)) cost(i, j) = grad(i, j);
    const AssignmentSolution vertex = assignment_lmo(cost);
    const double gap = std::max(0.0, vertex.value - support_inner(work, grad, b));
    if (gap <= tol) return gap;
    if (k >= max_iters) throw NonConvergence("frank-wolfe block", SolveDiagnostics{});

    Matrix d = -b;
    for (int i = 0; i < n; ++i) d(i, vertex.sigma[static_cast<std::size_t>(i)]) += 1.0;

    // Exact line search: bisection on the derivative of the concave restriction.
    double lo = 0.0;
    double hi = 1.0 - kStepMargin;
    double gamma = hi;
    if (slope_at(d, hi) < 0.0) {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope_at(d, mid) > 0.0) lo = mid;
        else hi = mid;
        if (hi - lo <= 1e-17) break;
      }
      gamma = 0.5 * (lo + hi);
    }
    b += gamma * d;
  }
}

// Newton step on the stationarity system restricted to the tangent space of
// the marginal constraints. Entries within kBoundaryClamp of 0 or 1 are held
// fixed. Returns false when no interior step is available.
bool newton_tangent_step(const NonNegMatrix& work, const Matrix& b, Matrix& out) {
  const int n = work.n();
  std::vector<std::pair<int, int>> free;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (work.in_support(i, j) && b(i, j) > kBoundaryClamp && b(i, j) < 1.0 - kBoundaryClamp)
        free.emplace_back(i, j);
  const int s = static_cast<int>(free.size());
  if (s == 0) return false;
  const int dim = s + 2 * n;
  Matrix kkt = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  for (int e = 0; e < s; ++e) {
    const auto [i, j] = free[static_cast<std::size_t>(e)];
    const double x = b(i, j);
    kkt(e, e) = -1.0 / x + 1.0 / (1.0 - x);
    rhs(e) = -entry_gradient(work(i, j), x);
    kkt(e, s + i) = kkt(s + i, e) = 1.0;
    kkt(e, s + n + j) = kkt(s + n + j, e) = 1.0;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(kkt);
  if (eig.info() != Eigen::Success) return false;
  const Vector lambda = eig.eigenvalues();
  const double floor = 1e-12 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  Vector coeff = eig.eigenvectors().transpose() * rhs;
  for (int q = 0; q < dim; ++q) coeff(q) = std::abs(lambda(q)) > floor ? coeff(q) / lambda(q) : 0.0;
  const Vector step = eig.eigenvectors() * coeff;
  if (!step.allFinite()) return false;

  // Stay inside (0, 1).
  double t = 1.0;
  for (int e = 0; e < s; ++e) {
    const auto [i, j] = free[static_cast<std::size_t>(e)];
    const double d = step(e);
    if (d < 0.0) t = std::min(t, 0.5 * b(i, j) / -d);
    if (d > 0.0) t = std::min(t, 0.5 * (1.0 - b(i, j)) / d);
  }
  Matrix moved = b;
  for (int e = 0; e < s; ++e) {
    const auto [i, j] = free[static_cast<std::size_t>(e)];
    moved(i, j) += t * step(e);
  }
  // The solve only keeps the marginals approximately; restore them.
  out = sinkhorn_project(moved, 1e-14, 100000);
  return max_marginal_deviation(out) <= kFeasibleDeviation;
}

// Entropic mirror ascent on one block, in place. Returns the final gap;
// `iterations` receives the iteration count.
double mirror_block(const NonNegMatrix& work, Matrix& b, double tol, int max_iters,
                    int& iterations) {
  constexpr double kArmijo = 1e-4;
  constexpr double kInnerTol = 1e-14;
  constexpr int kInnerIters = 100000;
  constexpr double kMaxStep = 1e6;
  constexpr double kNewtonGap = 1e-4;
  constexpr double kValueNoise = 1e-13;
  const int n = work.n();
  double value = r_o_objective(work, b);
  double eta_start = 1.0;

  for (int k = 0;; ++k) {
    const Matrix grad = clamped_gradient(work, b);
    const double gap = frank_wolfe_gap(work, grad, b);
    double grad_scale = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (work.in_support(i, j)) grad_scale = std::max(grad_scale, std::abs(grad(i, j)));
    iterations = k;
    if (gap <= tol) return gap;
    if (k >= max_iters) throw NonConvergence("gap " + std::to_string(gap), SolveDiagnostics{});

    // Close to the optimum a Newton step on the tangent space converges
    // much faster than mirror steps.
    if (gap < kNewtonGap) {
      Matrix trial;
      if (newton_tangent_step(work, b, trial)) {
        const double trial_value = r_o_objective(work, trial);
        if (trial_value >= value - kValueNoise * std::max(1.0, std::abs(value)) &&
            frank_wolfe_gap(work, clamped_gradient(work, trial), trial) < gap) {
          b = std::move(trial);
          value = trial_value;
          continue;
        }
      }
    }

    bool accepted = false;
    double eta = eta_start;
    for (int tries = 0; tries < 80 && !accepted; ++tries, eta *= 0.5) {
      // Row-wise shift keeps exp() in range; it is absorbed by the projection.
      Matrix next = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        double top = kNegInf;
        for (int j = 0; j < n; ++j)
          if (work.in_support(i, j)) top = std::max(top, eta * grad(i, j));
        for (int j = 0; j < n; ++j)
          if (work.in_support(i, j)) next(i, j) = b(i, j) * std::exp(eta * grad(i, j) - top);
      }
      Matrix trial = sinkhorn_project(next, kInnerTol, kInnerIters);
      const double trial_value = r_o_objective(work, trial);
      const double predicted = support_inner(work, grad, trial - b);
      // Floating-point noise in the value plus what the projection's marginal
      // error can move it.
      const double rounding =
          8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value)) * n +
          n * grad_scale * max_marginal_deviation(trial);
      // Once values stop resolving, progress is measured by the gap instead.
      if (max_marginal_deviation(trial) > kFeasibleDeviation) continue;
      const bool armijo = trial_value >= value + kArmijo * predicted &&
                          trial_value - value > rounding;
      const bool level = !armijo && std::abs(trial_value - value) <= rounding &&
                         frank_wolfe_gap(work, clamped_gradient(work, trial), trial) < gap;
      if (armijo || level) {
        b = std::move(trial);
        value = trial_value;
        accepted = true;
        // Flat directions (near-ties, faces of the polytope) call for long steps.
        eta_start = tries == 0 ? std::min(2.0 * eta, kMaxStep) : eta;
      }
    }
    if (!accepted) {
      // The mirror step's gain has dropped below rounding; finish with Newton.
      Matrix trial;
      if (newton_tangent_step(work, b, trial) &&
          frank_wolfe_gap(work, clamped_gradient(work, trial), trial) < gap) {
        b = std::move(trial);
        value = r_o_objective(work, b);
        continue;
      }
      throw NonConvergence("line search failed at gap " + std::to_string(gap), SolveDiagnostics{});
    }
  }
}


using BlockSolver = double (*)(const NonNegMatrix&, Matrix&, double, int, int&);

// Runs `solve` on every block of the pruned support and reassembles B.
BetheResult solve_by_blocks(const NonNegMatrix& m, double tol, int max_iters, BlockSolver solve,
                            const char* name, bool exact_cycles) {
  const auto start = Clock::now();
  auto [work, b] = initial_point(m);
  const std::vector<Block> blocks = support_blocks(work);

  SolveDiagnostics diag;
  diag.converged = true;
  diag.final_residual = 0.0;
  for (const Block& block : blocks) {
    const int size = static_cast<int>(block.rows.size());
    Matrix sub_entries(size, size);
    Matrix sub_b(size, size);
    int edges = 0;
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        sub_entries(i, j) = work(block.rows[i], block.cols[j]);
        sub_b(i, j) = b(block.rows[i], block.cols[j]);
        if (sub_entries(i, j) > 0.0) ++edges;
      }
    const NonNegMatrix sub = validate(sub_entries);
    int iterations = 0;
    double gap = 0.0;
    if (size == 1) {
      sub_b(0, 0) = 1.0;
    } else if (exact_cycles && edges == 2 * size) {
      // A cycle has two matchings and the objective is linear between them.
      Matrix cost = Matrix::Constant(size, size, kNegInf);
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
          if (sub.in_support(i, j)) cost(i, j) = std::log(sub(i, j));
      const AssignmentSolution best = assignment_lmo(cost);
      sub_b.setZero();
      for (int i = 0; i < size; ++i) sub_b(i, best.sigma[static_cast<std::size_t>(i)]) = 1.0;
      gap = frank_wolfe_gap(sub, clamped_gradient(sub, sub_b), sub_b);
    } else {
      try {
        gap = solve(sub, sub_b, tol / static_cast<double>(blocks.size()),
                    max_iters - diag.iterations, iterations);
      } catch (const NonConvergence& e) {
        diag.iterations += iterations;
        diag.converged = false;
        diag.wall_time = seconds_since(start);
        throw NonConvergence(std::string(name) + ": block of size " + std::to_string(size) +
                                 ": " + e.what(),
                             diag);
      }
    }
    diag.iterations += iterations;
    diag.final_residual += gap;
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) b(block.rows[i], block.cols[j]) = sub_b(i, j);
  }
  return finish(m, b, diag, start);
}

}  // namespace

double r_o_objective(const NonNegMatrix& m, const Matrix& b) {
  if (b.rows() != m.n() || b.cols() != m.n()) {
    throw std::invalid_argument("r_o_objective: dimension mismatch");
  }
  double value = 0.0;
  for (int i = 0; i < m.n(); ++i) {
    for (int j = 0; j < m.n(); ++j) {
      const double bij = b(i, j);
      if (!m.in_support(i, j)) {
        if (bij > 0.0) return kNegInf;
        continue;
      }
      if (bij > 0.0) value += bij * (std::log(m(i, j)) - std::log(bij));
      const double rest = 1.0 - bij;
      if (rest > 0.0) value += rest * std::log(rest);
    }
  }
  return value;
}

double r_o_objective(const NonNegMatrix& m, const DoublyStochasticMatrix& b) {
  return r_o_objective(m, b.entries());
}

Matrix r_o_gradient(const NonNegMatrix& m, const Matrix& b) {
  const int n = m.n();
  if (b.rows() != n || b.cols() != n) throw std::invalid_argument("r_o_gradient: dimension mismatch");
  Matrix g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.in_support(i, j)) {
        const double bij = b(i, j);
        if (!(bij > 0.0 && bij < 1.0)) {
          throw std::domain_error("r_o_gradient: B must lie strictly inside (0,1) on the support");
        }
        g(i, j) = entry_gradient(m(i, j), bij);
      }
  return g;
}

double frank_wolfe_gap(const NonNegMatrix& m, const Matrix& gradient, const Matrix& b) {
  const int n = m.n();
  Matrix cost = Matrix::Constant(n, n, kNegInf);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.in_support(i, j)) cost(i, j) = gradient(i, j);
  const AssignmentSolution vertex = assignment_lmo(cost);
  return std::max(0.0, vertex.value - support_inner(m, gradient, b));
}

BetheResult solve_r_o_mirror(const NonNegMatrix& m, double tol, int max_iters) {
  return solve_by_blocks(m, tol, max_iters, mirror_block, "solve_r_o_mirror", true);
}

BetheResult solve_r_o_fw(const NonNegMatrix& m, double tol, int max_iters) {
  return solve_by_blocks(m, tol, max_iters, frank_wolfe_block, "solve_r_o_fw", false);
}

BetheSandwichReport verify_sandwich_r_o(const NonNegMatrix& m, double tol, double slack,
                                        double exact_per) {
  if (exact_per < 0.0) {
    if (m.n() > 7) throw std::invalid_argument("verify_sandwich_r_o: n > 7 needs an exact permanent");
    exact_per = permanent_ryser(m);
  }
  BetheSandwichReport report;
  const BetheResult solved = solve_r_o_mirror(m, tol);
  report.r_o = solved.value;
  report.fw_gap = solved.diagnostics.final_residual;
  report.log_per = std::log(exact_per);
  report.lower_bound = report.r_o <= report.log_per + slack;
  report.upper_bound = report.log_per <= m.n() * std::log(2.0) + report.r_o + slack;
  return report;
}

}  // namespace permabound
