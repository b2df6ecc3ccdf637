#include "permabound/entropy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "permabound/assignment.hpp"
#include "permabound/exact.hpp"

namespace permabound {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Scaling {
  Vector r;
  Vector c;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Alternating normalization: r <- 1 / (A c), c <- 1 / (A^T r). After each
// sweep the columns of diag(r) A diag(c) sum to one exactly, so only the row
// sums need to be monitored.
Scaling scale(const Matrix& a, double tol, int max_iters) {
  const auto n = a.rows();
  Scaling s;
  s.c = Vector::Ones(n);
  s.r = Vector::Ones(n);
  s.residual = std::numeric_limits<double>::infinity();
  double best = s.residual;
  int stalled = 0;
  for (int k = 0; k < max_iters; ++k) {
    s.r = (a * s.c).cwiseInverse();
    s.c = (a.transpose() * s.r).cwiseInverse();
    s.iterations = k + 1;
    const Vector rows = s.r.cwiseProduct(a * s.c);
    s.residual = (rows.array() - 1.0).abs().maxCoeff();
    if (s.residual <= tol) {
      s.converged = true;
      break;
    }
    // Below 1e-12 the residual is at the rounding floor once it stops improving.
    if (s.residual < best) {
      best = s.residual;
      stalled = 0;
    } else if (best < 1e-12 && ++stalled >= 20) {
      break;
    }
  }
  return s;
}

Matrix apply_scaling(const Matrix& a, const Scaling& s) {
  return s.r.asDiagonal() * a * s.c.asDiagonal();
}

void require_matching(const NonNegMatrix& m, const char* who) {
  if (!support_has_perfect_matching(m).has_perfect_matching) {
    throw InfeasibleSupport(std::string(who) + ": support has no perfect matching");
  }
}

// log A on the support, -inf elsewhere.
Matrix log_kernel(const Matrix& a) {
  return (a.array() > 0.0).select(a.array().log(), kNegInf).matrix();
}

// Row-wise log-sum-exp of log K_ij - beta_j.
Vector row_lse(const Matrix& log_k, const Vector& beta) {
  const auto n = log_k.rows();
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd z = log_k.row(i) - beta.transpose();
    const double top = z.maxCoeff();
    if (top == kNegInf) {
      throw std::domain_error("dual_h: row " + std::to_string(i) + " has no positive entry");
    }
    out(i) = top + std::log((z.array() - top).exp().sum());
  }
  return out;
}

// P_ij = K_ij e^{-beta_j} / sum_k K_ik e^{-beta_k}; rows sum to one.
Matrix row_softmax(const Matrix& log_k, const Vector& beta) {
  const Vector lse = row_lse(log_k, beta);
  return ((log_k.rowwise() - beta.transpose()).colwise() - lse).array().exp().matrix();
}

double h_value(const Matrix& log_k, const Vector& beta) {
  return row_lse(log_k, beta).sum() + beta.sum();
}

Vector h_gradient(const Matrix& log_k, const Vector& beta) {
  return (Vector::Ones(beta.size()) - row_softmax(log_k, beta).colwise().sum().transpose());
}

struct NewtonOutcome {
  Vector beta;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // line search could not make progress
};

// Damped Newton on h(beta) = sum_i LSE_j(log K_ij - beta_j) + sum_j beta_j.
// The Hessian is diag(P^T 1) - P^T P. Stops at
// gradient 2-norm <= tol, after max_iters, or when |beta| exceeds `diverged`.
NewtonOutcome newton_dual(const Matrix& log_k, Vector beta, double tol, int max_iters,
                          double diverged = std::numeric_limits<double>::infinity()) {
  constexpr double kArmijo = 1e-4;
  const auto n = beta.size();
  NewtonOutcome out;
  double value = h_value(log_k, beta);
  Matrix p = row_softmax(log_k, beta);
  Vector grad = Vector::Ones(n) - p.colwise().sum().transpose();
  for (int k = 0;; ++k) {
    // The full gradient sums to zero, so it vanishes with its restriction.
    const double norm = grad.norm();
    out.iterations = k;
    out.grad_norm = norm;
    if (norm <= tol) {
      out.converged = true;
      break;
    }
    if (k >= max_iters || beta.cwiseAbs().maxCoeff() > diverged) break;

    // h is flat along one direction per connected block of the support, so the
    // Hessian is inverted on its range only.
    const Matrix hess = Matrix(p.colwise().sum().transpose().asDiagonal()) - p.transpose() * p;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
    const Vector lambda = eig.eigenvalues();
    const double floor = 1e-14 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
    Vector coeff = eig.eigenvectors().transpose() * grad;
    for (Eigen::Index q = 0; q < n; ++q) coeff(q) = lambda(q) > floor ? coeff(q) / lambda(q) : 0.0;
    Vector dir = eig.eigenvectors() * coeff;
    if (eig.info() != Eigen::Success || !dir.allFinite() || grad.dot(dir) <= 0.0) dir = grad;
    const double slope = grad.dot(dir);
    double step = 1.0;
    bool accepted = false;
    for (int tries = 0; tries < 80; ++tries, step *= 0.5) {
      const Vector trial = beta - step * dir;
      const double trial_value = h_value(log_k, trial);
      if (!std::isfinite(trial_value)) continue;
      // Near the optimum the decrease drops below the resolution of h; accept
      // steps that stay level within rounding while shrinking the gradient.
      const double rounding = 8.0 * std::numeric_limits<double>::epsilon() *
                              std::max(1.0, std::abs(value)) * static_cast<double>(n);
      const bool armijo =
          trial_value <= value - kArmijo * step * slope && value - trial_value > rounding;
      const bool level_value = trial_value - value <= rounding;
      if (!armijo && !level_value) continue;
      Matrix trial_p = row_softmax(log_k, trial);
      Vector trial_grad = Vector::Ones(n) - trial_p.colwise().sum().transpose();
      if (armijo || trial_grad.norm() < norm) {
        beta = trial;
        value = trial_value;
        p = std::move(trial_p);
        grad = std::move(trial_grad);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
  }
  // Gauge beta_{n-1} = 0.
  if (n > 0) beta.array() -= beta(n - 1);
  out.beta = std::move(beta);
  out.value = value;
  return out;
}

}  // namespace

DualPotentials gauge_fix(DualPotentials potentials) {
  const auto n = potentials.beta.size();
  if (n == 0) return potentials;
  const double shift = potentials.beta(n - 1);
  potentials.alpha.array() += shift;
  potentials.beta.array() -= shift;
  return potentials;
}

double r_e_objective(const NonNegMatrix& m, const Matrix& b) {
  if (b.rows() != m.n() || b.cols() != m.n()) {
    throw std::invalid_argument("r_e_objective: dimension mismatch");
  }
  double value = 0.0;
  for (int i = 0; i < m.n(); ++i) {
    for (int j = 0; j < m.n(); ++j) {
      const double bij = b(i, j);
      if (bij <= 0.0) continue;
      if (!m.in_support(i, j)) return kNegInf;
      value += bij * (std::log(m(i, j)) - std::log(bij));
    }
  }
  return value;
}

double r_e_objective(const NonNegMatrix& m, const DoublyStochasticMatrix& b) {
  return r_e_objective(m, b.entries());
}

Matrix sinkhorn_project(const Matrix& positive, double tol, int max_iters,
                        SolveDiagnostics* diagnostics) {
  constexpr int kWarmIters = 200;
  const auto start = Clock::now();
  const Scaling s = scale(positive, tol, std::min(max_iters, kWarmIters));
  Matrix b;
  int iterations = s.iterations;
  if (s.converged || s.iterations >= max_iters) {
    b = apply_scaling(positive, s);
  } else {
    // Nearly degenerate kernels make Sinkhorn crawl; finish with Newton on the
    // dual, whose rate does not depend on the conditioning.
    const Matrix log_k = log_kernel(positive);
    const NewtonOutcome polished =
        newton_dual(log_k, -s.c.array().log().matrix(), tol, max_iters - s.iterations);
    b = row_softmax(log_k, polished.beta);
    iterations += polished.iterations;
  }
  if (diagnostics) {
    diagnostics->iterations = iterations;
    diagnostics->final_residual = max_marginal_deviation(b);
    diagnostics->converged = diagnostics->final_residual <= tol;
    diagnostics->wall_time = seconds_since(start);
  }
  return b;
}

SinkhornResult sinkhorn_solve(const NonNegMatrix& m, double tol, int max_iters) {
  const auto start = Clock::now();
  require_matching(m, "sinkhorn_solve");
  const NonNegMatrix work = prune_to_total_support(m);

  const Scaling s = scale(work.entries(), tol, max_iters);
  const Matrix b = apply_scaling(work.entries(), s);
  SolveDiagnostics diag;
  diag.iterations = s.iterations;
  diag.final_residual = max_marginal_deviation(b);
  diag.converged = s.converged && diag.final_residual <= tol;
  diag.wall_time = seconds_since(start);
  if (!diag.converged) {
    throw NonConvergence("sinkhorn_solve: residual " + std::to_string(diag.final_residual) +
                             " after " + std::to_string(diag.iterations) + " iterations",
                         diag);
  }

  // r_i c_j = exp(-1 - alpha_i - beta_j).
  DualPotentials pot;
  pot.alpha = (-1.0 - s.r.array().log()).matrix();
  pot.beta = (-s.c.array().log()).matrix();
  pot = gauge_fix(std::move(pot));

  DoublyStochasticMatrix ds(b, std::max(diag.final_residual, tol));
  const double value = r_e_objective(m, ds);
  return SinkhornResult{std::move(ds), std::move(pot), value, diag};
}

MirrorResult mirror_ascent_r_e(const NonNegMatrix& m, double tol, int max_iters) {
  const auto start = Clock::now();
  require_matching(m, "mirror_ascent_r_e");
  const NonNegMatrix work = prune_to_total_support(m);
  const int n = m.n();
  constexpr double kStep = 0.5;
  constexpr double kInnerTol = 1e-14;
  constexpr int kInnerIters = 100000;

  const Matrix log_a = work.support().select(work.entries().array().log().matrix(),
                                             Matrix::Zero(n, n));
  const Matrix mask = work.support().cast<double>();
  Matrix b = sinkhorn_project(mask, kInnerTol, kInnerIters);

  SolveDiagnostics diag;
  for (int k = 0;; ++k) {
    // Gradient log(A/B) - 1 on the support; forbidden cells for the oracle.
    Matrix grad = Matrix::Constant(n, n, kNegInf);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (work.in_support(i, j)) grad(i, j) = log_a(i, j) - std::log(b(i, j)) - 1.0;
    const AssignmentSolution vertex = assignment_lmo(grad);
    double inner = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (work.in_support(i, j)) inner += grad(i, j) * b(i, j);
    const double gap = std::max(0.0, vertex.value - inner);

    diag.iterations = k;
    diag.final_residual = gap;
    if (gap <= tol) {
      diag.converged = true;
      break;
    }
    if (k >= max_iters) {
      diag.wall_time = seconds_since(start);
      throw NonConvergence("mirror_ascent_r_e: gap " + std::to_string(gap), diag);
    }
    // B o exp(eta G) is proportional to B^(1 - eta) A^eta.
    Matrix next = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (work.in_support(i, j))
          next(i, j) = std::exp((1.0 - kStep) * std::log(b(i, j)) + kStep * log_a(i, j));
    b = sinkhorn_project(next, kInnerTol, kInnerIters);
  }
  diag.wall_time = seconds_since(start);
  DoublyStochasticMatrix ds(b, std::max(max_marginal_deviation(b), kDefaultCertifyTolerance));
  const double value = r_e_objective(m, ds);
  return MirrorResult{std::move(ds), value, diag};
}

double log_capacity_primal(const NonNegMatrix& m, const Vector& z) {
  if (z.size() != m.n()) throw std::invalid_argument("capacity_primal: dimension mismatch");
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (!(z(j) > 0.0) || !std::isfinite(z(j))) {
      throw std::invalid_argument("capacity_primal: z must be strictly positive");
    }
  }
  double value = 0.0;
  const Vector rows = m.entries() * z;
  for (Eigen::Index i = 0; i < rows.size(); ++i) value += std::log(rows(i)) - std::log(z(i));
  return value;
}

double capacity_primal(const NonNegMatrix& m, const Vector& z) {
  return std::exp(log_capacity_primal(m, z));
}

double dual_g(const NonNegMatrix& m, const Vector& alpha, const Vector& beta) {
  const int n = m.n();
  if (alpha.size() != n || beta.size() != n) throw std::invalid_argument("dual_g: dimension mismatch");
  double value = alpha.sum() + beta.sum();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.in_support(i, j)) value += m(i, j) * std::exp(-1.0 - alpha(i) - beta(j));
  return value;
}

double dual_h(const NonNegMatrix& m, const Vector& beta) {
  if (beta.size() != m.n()) throw std::invalid_argument("dual_h: dimension mismatch");
  return h_value(log_kernel(m.entries()), beta);
}

Vector dual_h_gradient(const NonNegMatrix& m, const Vector& beta) {
  if (beta.size() != m.n()) throw std::invalid_argument("dual_h: dimension mismatch");
  return h_gradient(log_kernel(m.entries()), beta);
}

DualResult minimize_dual_h(const NonNegMatrix& m, double tol, int max_iters) {
  const auto start = Clock::now();
  require_matching(m, "minimize_dual_h");
  // Edges on no perfect matching push the minimizer to infinity; dropping them
  // leaves the infimum unchanged and makes it attained.
  const NonNegMatrix work = prune_to_total_support(m);
  const Matrix log_k = log_kernel(work.entries());
  constexpr double kDiverged = 1e8;

  const NewtonOutcome res = newton_dual(log_k, Vector::Zero(m.n()), tol, max_iters, kDiverged);
  SolveDiagnostics diag{res.iterations, res.grad_norm, res.converged, seconds_since(start)};
  if (!res.converged) {
    throw NonConvergence(std::string("minimize_dual_h: ") +
                             (res.stalled ? "line search failed at " : "") + "gradient norm " +
                             std::to_string(res.grad_norm),
                         diag);
  }
  DualPotentials pot;
  pot.beta = res.beta;
  pot.alpha = (row_lse(log_k, res.beta).array() - 1.0).matrix();
  return DualResult{std::move(pot), res.value, diag};
}

Theorem1Report verify_theorem1(const NonNegMatrix& m, double tol, double exact_per,
                               double slack) {
  Theorem1Report report;
  report.r_e = sinkhorn_solve(m).value;
  report.log_r_c = minimize_dual_h(m).value;
  report.agree = std::abs(report.r_e - report.log_r_c) <= tol;
  if (exact_per < 0.0 && m.n() <= kTheorem1ExactMaxN) exact_per = permanent_ryser(m);
  if (exact_per >= 0.0) {
    report.have_per = true;
    report.log_per = std::log(exact_per);
    report.lower_bound = report.log_per <= report.log_r_c + slack;
    report.upper_bound = report.log_r_c <= m.n() + report.log_per + slack;
  }
  return report;
}

}  // namespace permabound
