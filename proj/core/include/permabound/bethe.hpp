#pragma once

#include "permabound/matrix.hpp"
#include "permabound/solver.hpp"

namespace permabound {

/// sum_{(i,j) in E} [B_ij log(A_ij / B_ij) + (1 - B_ij) log(1 - B_ij)], both
/// sums over the support of A, with 0 log 0 = 0. -infinity when B has mass
/// outside the support.
double r_o_objective(const NonNegMatrix& m, const Matrix& b);
double r_o_objective(const NonNegMatrix& m, const DoublyStochasticMatrix& b);

/// Entrywise derivative log A - log B - log(1 - B) - 2 on the support, zero
/// elsewhere. Throws std::domain_error unless 0 < B_ij < 1 on the support.
Matrix r_o_gradient(const NonNegMatrix& m, const Matrix& b);

/// Frank-Wolfe gap max_P <G, P - B> over permutation matrices P supported on A.
double frank_wolfe_gap(const NonNegMatrix& m, const Matrix& gradient, const Matrix& b);

struct BetheResult {
  DoublyStochasticMatrix b;
  double value = 0.0;
  SolveDiagnostics diagnostics;  // final_residual is the Frank-Wolfe gap
};

inline constexpr double kDefaultBetheTol = 1e-9;
/// Iterates are clamped to [delta, 1 - delta] before gradient evaluation.
inline constexpr double kBoundaryClamp = 1e-12;

/// Entropic mirror ascent B <- Proj(B o exp(eta G)) with Armijo backtracking
/// (eta starts at 1, halves, sufficient increase 1e-4), initialized at the
/// Sinkhorn scaling of A. Terminates on Frank-Wolfe gap <= tol.
BetheResult solve_r_o_mirror(const NonNegMatrix& m, double tol = kDefaultBetheTol,
                             int max_iters = 20000);

/// Classic Frank-Wolfe with exact line search along P - B. Terminates on
/// Frank-Wolfe gap <= tol.
BetheResult solve_r_o_fw(const NonNegMatrix& m, double tol = 1e-6,
                         int max_iters = 200000);

struct BetheSandwichReport {
  double r_o = 0.0;
  double log_per = 0.0;
  double fw_gap = 0.0;
  bool lower_bound = false;  // R_O <= log Per
  bool upper_bound = false;  // log Per <= n log 2 + R_O
  bool ok() const { return lower_bound && upper_bound; }
};

/// exp(R_O) <= Per <= 2^n exp(R_O) with additive slack on the log scale.
/// Uses the Ryser permanent; n <= 7 unless `exact_per` is supplied.
BetheSandwichReport verify_sandwich_r_o(const NonNegMatrix& m, double tol,
                                        double slack = 1e-7, double exact_per = -1.0);

}  // namespace permabound
