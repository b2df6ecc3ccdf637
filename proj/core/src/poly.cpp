#include "permabound/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "permabound/bethe.hpp"
#include "permabound/entropy.hpp"

namespace permabound {
namespace {

double sum_b_log_b(const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double v = b.data()[k];
    if (v > 0.0) s += v * std::log(v);
  }
  return s;
}

double sum_complement_entropy(const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double rest = 1.0 - b.data()[k];
    if (rest > 0.0) s += rest * std::log(rest);
  }
  return s;
}

void check_split(const NonNegMatrix& m, const MatrixSplit& split) {
  if (!m.full_support()) throw std::domain_error("polynomial relaxations need a positive matrix");
  const int n = m.n();
  if (split.c.rows() != n || split.c.cols() != n || split.d.rows() != n || split.d.cols() != n) {
    throw std::invalid_argument("split dimension mismatch");
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!(split.c(i, j) > 0.0 && split.d(i, j) > 0.0)) {
        throw std::invalid_argument("split factors must be positive");
      }
      if (std::abs(split.c(i, j) * split.d(i, j) - m(i, j)) > 1e-12 * m(i, j)) {
        throw std::invalid_argument("split factors do not multiply to A");
      }
    }
}

// Relative gap between the numeric and closed-form inner infima of p and q at B.
double reduction_residual(const MatrixSplit& split, const Matrix& b) {
  const InnerInfCheck x = inner_inf_numeric(split.c, b);
  const InnerInfCheck y = inner_inf_numeric(split.d.transpose(), b.transpose());
  const double log_ratio = std::log(x.numeric) + std::log(y.numeric) - std::log(x.closed) -
                           std::log(y.closed);
  return std::abs(std::expm1(log_ratio));
}

}  // namespace

MatrixSplit make_split(const NonNegMatrix& m, SplitKind kind, std::uint64_t seed) {
  if (!m.full_support()) throw std::domain_error("make_split: A has a zero entry");
  const int n = m.n();
  MatrixSplit s;
  switch (kind) {
    case SplitKind::sqrt:
      s.c = m.entries().cwiseSqrt();
      s.d = s.c;
      s.label = "sqrt";
      break;
    case SplitKind::left_identity:
      s.c = m.entries();
      s.d = Matrix::Ones(n, n);
      s.label = "left_identity";
      break;
    case SplitKind::random: {
      std::mt19937_64 engine(seed);
      Matrix r(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
          r(i, j) = std::exp(2.0 * u - 1.0);
        }
      s.c = m.entries().cwiseProduct(r);
      s.d = r.cwiseInverse();
      s.label = "random(" + std::to_string(seed) + ")";
      break;
    }
  }
  return s;
}

double log_inner_inf_closed(const Matrix& m, const Matrix& b) {
  if (m.rows() != b.rows() || m.cols() != b.cols()) {
    throw std::invalid_argument("inner_inf_closed: dimension mismatch");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      if (b(i, j) > 0.0) s += b(i, j) * (std::log(m(i, j)) - std::log(b(i, j)));
  return s;
}

double inner_inf_closed(const Matrix& m, const Matrix& b) {
  return std::exp(log_inner_inf_closed(m, b));
}

double log_inner_ratio(const Matrix& m, const Matrix& b, const Matrix& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += std::log(m.row(i).dot(x.row(i)));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (b(i, j) > 0.0) s -= b(i, j) * std::log(x(i, j));
  }
  return s;
}

double InnerInfCheck::relative_error() const { return std::abs(numeric - closed) / closed; }

InnerInfCheck inner_inf_numeric(const Matrix& m, const Matrix& b, double tol, int max_iters) {
  const auto rows = m.rows();
  const auto cols = m.cols();
  if (b.rows() != rows || b.cols() != cols) throw std::invalid_argument("inner_inf_numeric: dimension mismatch");
  if ((b.array() < 0.0).any() || (m.array() <= 0.0).any() ||
      (b.rowwise().sum().array() <= 0.0).any()) {
    throw std::invalid_argument(
        "inner_inf_numeric: M must be positive and B non-negative with non-zero rows");
  }

  InnerInfCheck out;
  // Rows of B are renormalised: with a row sum s != 1 the objective is linear
  // with slope 1 - s along the all-ones direction and has no minimiser.
  const Matrix bn = b.array().colwise() / b.rowwise().sum().array();
  // The objective separates over rows: f(u) = log sum_j M_ij e^{u_j} - <B_i, u>,
  // invariant under u -> u + c. Damped Newton on the first cols-1 coordinates
  // with u_last pinned to 0.
  double total = 0.0;
  int worst_iters = 0;
  double worst_grad = 0.0;
  bool converged = true;
  for (Eigen::Index i = 0; i < rows; ++i) {
    // Columns with B_ij = 0 drop out: their u_j runs off to -infinity.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (bn(i, j) > 0.0) keep.push_back(j);
    const auto width = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index k = width - 1;
    Eigen::RowVectorXd log_mi(width);
    Eigen::RowVectorXd bi(width);
    for (Eigen::Index c = 0; c < width; ++c) {
      log_mi(c) = std::log(m(i, keep[static_cast<std::size_t>(c)]));
      bi(c) = bn(i, keep[static_cast<std::size_t>(c)]);
    }
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(width);
    auto eval = [&](const Eigen::RowVectorXd& x, Eigen::RowVectorXd* p) {
      const Eigen::RowVectorXd z = log_mi + x;
      const double top = z.maxCoeff();
      const Eigen::RowVectorXd w = (z.array() - top).exp().matrix();
      const double mass = w.sum();
      if (p) *p = w / mass;
      return top + std::log(mass) - bi.dot(x);
    };
    Eigen::RowVectorXd p;
    double value = eval(u, &p);
    double grad_norm = (p - bi).cwiseAbs().maxCoeff();
    int it = 0;
    while (grad_norm > tol && it < max_iters && k > 0) {
      ++it;
      const Vector g = (p - bi).head(k).transpose();
      const Vector pk = p.head(k).transpose();
      Matrix h = Matrix(pk.asDiagonal()) - pk * pk.transpose();
      const Vector step = h.ldlt().solve(-g);
      const double slope = g.dot(step);
      Eigen::RowVectorXd trial = u;
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        trial.head(k) = u.head(k) + t * step.transpose();
        Eigen::RowVectorXd q;
        const double v = eval(trial, &q);
        if (std::isfinite(v) && (v <= value + 1e-4 * t * slope ||
                                 (q - bi).cwiseAbs().maxCoeff() < grad_norm)) {
          u = trial;
          value = v;
          p = q;
          moved = true;
          break;
        }
      }
      grad_norm = (p - bi).cwiseAbs().maxCoeff();
      if (!moved) break;
    }
    if (grad_norm > tol) converged = false;
    worst_iters = std::max(worst_iters, it);
    worst_grad = std::max(worst_grad, grad_norm);
    total += value;
  }
  if (!converged) {
    throw NonConvergence("inner_inf_numeric: gradient " + std::to_string(worst_grad),
                         SolveDiagnostics{worst_iters, worst_grad, false, 0.0});
  }
  out.diagnostics = SolveDiagnostics{worst_iters, worst_grad, true, 0.0};
  out.numeric = std::exp(total);
  out.closed = inner_inf_closed(m, bn);
  out.tightness = std::exp(log_inner_ratio(m, bn, bn.cwiseQuotient(m)));
  return out;
}

double log_r_p_objective(const MatrixSplit& split, const Matrix& b) {
  // inf_x p(x) / prod x^B and inf_y q(y) / prod y^B in closed form; q is r
  // applied to the transposes.
  return log_inner_inf_closed(split.c, b) + log_inner_inf_closed(split.d.transpose(), b.transpose()) +
         sum_b_log_b(b);
}

double log_r_q_objective(const MatrixSplit& split, const Matrix& b) {
  return log_r_p_objective(split, b) + sum_complement_entropy(b);
}

PolyRelaxResult r_p_value(const NonNegMatrix& m, const MatrixSplit& split, double tol) {
  check_split(m, split);
  const SinkhornResult solved = sinkhorn_solve(m, tol);
  PolyRelaxResult out;
  out.b = solved.b.entries();
  out.log_value = log_r_p_objective(split, out.b);
  out.reduction_residual = reduction_residual(split, out.b);
  return out;
}

PolyRelaxResult r_q_value(const NonNegMatrix& m, const MatrixSplit& split, double tol) {
  check_split(m, split);
  const BetheResult solved = solve_r_o_mirror(m, tol);
  PolyRelaxResult out;
  out.b = solved.b.entries();
  out.log_value = log_r_q_objective(split, out.b);
  out.reduction_residual = reduction_residual(split, out.b);
  return out;
}

Theorems23Report verify_theorems_2_3(const NonNegMatrix& m, const std::vector<MatrixSplit>& splits,
                                     double tol) {
  Theorems23Report report;
  const SinkhornResult entropy = sinkhorn_solve(m);
  const BetheResult bethe = solve_r_o_mirror(m);
  report.r_e = entropy.value;
  report.r_o = bethe.value;

  double p_lo = std::numeric_limits<double>::infinity(), p_hi = -p_lo;
  double q_lo = p_lo, q_hi = -p_lo;
  bool residuals_ok = true;
  for (const MatrixSplit& split : splits) {
    check_split(m, split);
    SplitCheck c;
    c.label = split.label;
    c.log_r_p = log_r_p_objective(split, entropy.b.entries());
    c.log_r_q = log_r_q_objective(split, bethe.b.entries());
    c.p_residual = reduction_residual(split, entropy.b.entries());
    c.q_residual = reduction_residual(split, bethe.b.entries());
    residuals_ok = residuals_ok && c.p_residual <= 1e-4 && c.q_residual <= 1e-4;
    report.max_p_error = std::max(report.max_p_error, std::abs(c.log_r_p - report.r_e));
    report.max_q_error = std::max(report.max_q_error, std::abs(c.log_r_q - report.r_o));
    p_lo = std::min(p_lo, c.log_r_p);
    p_hi = std::max(p_hi, c.log_r_p);
    q_lo = std::min(q_lo, c.log_r_q);
    q_hi = std::max(q_hi, c.log_r_q);
    report.splits.push_back(std::move(c));
  }
  if (!splits.empty()) {
    report.p_spread = -std::expm1(p_lo - p_hi);
    report.q_spread = -std::expm1(q_lo - q_hi);
  }
  report.ok = !splits.empty() && residuals_ok && report.max_p_error <= tol &&
              report.max_q_error <= tol;
  return report;
}

}  // namespace permabound
