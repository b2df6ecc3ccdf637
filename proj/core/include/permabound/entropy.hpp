#pragma once

#include "permabound/matrix.hpp"
#include "permabound/solver.hpp"

namespace permabound {

/// Lagrange multipliers of the row (alpha) and column (beta) constraints.
/// Stationary points satisfy B_ij = A_ij exp(-1 - alpha_i - beta_j); the pair
/// is gauge-fixed so that beta_{n-1} = 0.
struct DualPotentials {
  Vector alpha;
  Vector beta;
};

/// Shifts alpha by +beta_{n-1} and beta by -beta_{n-1}.
DualPotentials gauge_fix(DualPotentials potentials);

/// sum_{(i,j) in E} B_ij log(A_ij / B_ij) with 0 log 0 = 0. Returns -infinity
/// when B has mass outside the support of A.
double r_e_objective(const NonNegMatrix& m, const Matrix& b);
double r_e_objective(const NonNegMatrix& m, const DoublyStochasticMatrix& b);

struct SinkhornResult {
  DoublyStochasticMatrix b;
  DualPotentials potentials;
  double value = 0.0;  // r_e_objective at b
  SolveDiagnostics diagnostics;
};

inline constexpr double kDefaultSinkhornTol = 1e-10;
inline constexpr int kDefaultSinkhornIters = 100000;

/// Alternating row/column normalization of A, run on the matchable part of
/// the support. Stops when every row and column sum is within `tol` of 1.
///
/// Throws InfeasibleSupport without a perfect matching and NonConvergence
/// when the budget runs out.
SinkhornResult sinkhorn_solve(const NonNegMatrix& m, double tol = kDefaultSinkhornTol,
                              int max_iters = kDefaultSinkhornIters);

/// KL projection of a non-negative matrix onto the Birkhoff polytope, i.e. the
/// diagonal scaling of `positive` itself. A short Sinkhorn warm start is
/// finished by Newton on the scaling dual when it stalls. Best effort: check
/// the diagnostics. Used as the inner step of the entropic mirror solvers.
Matrix sinkhorn_project(const Matrix& positive, double tol, int max_iters,
                        SolveDiagnostics* diagnostics = nullptr);

struct MirrorResult {
  DoublyStochasticMatrix b;
  double value = 0.0;
  SolveDiagnostics diagnostics;  // final_residual is the Frank-Wolfe gap
};

/// Entropic mirror ascent for the entropy program with a fixed step of 1/2,
/// starting from the uniform point of the support. Independent of
/// sinkhorn_solve's fixed point; stops when the Frank-Wolfe gap is <= tol.
MirrorResult mirror_ascent_r_e(const NonNegMatrix& m, double tol = 1e-9,
                               int max_iters = 10000);

/// q_A(z) / prod z_i with q_A(z) = prod_i sum_j A_ij z_j, evaluated in
/// log-space. Throws std::invalid_argument for non-positive z.
double capacity_primal(const NonNegMatrix& m, const Vector& z);
double log_capacity_primal(const NonNegMatrix& m, const Vector& z);

/// g(alpha, beta) = sum_ij A_ij exp(-1 - alpha_i - beta_j) + sum alpha + sum beta.
double dual_g(const NonNegMatrix& m, const Vector& alpha, const Vector& beta);

/// h(beta) = sum_i log(sum_j A_ij exp(-beta_j)) + sum_j beta_j, i.e. g with
/// alpha minimized out. Throws std::domain_error on an all-zero row.
double dual_h(const NonNegMatrix& m, const Vector& beta);
Vector dual_h_gradient(const NonNegMatrix& m, const Vector& beta);

struct DualResult {
  DualPotentials potentials;  // beta minimizes h; alpha is the separable minimizer
  double value = 0.0;         // h(beta*) = log R_C
  SolveDiagnostics diagnostics;
};

inline constexpr double kDefaultDualTol = 1e-8;

/// Damped Newton with Armijo backtracking on h, reported in the gauge beta_{n-1} = 0.
/// Stops once the gradient norm is <= tol. Throws InfeasibleSupport if no
/// perfect matching exists (h unbounded below) and NonConvergence otherwise.
DualResult minimize_dual_h(const NonNegMatrix& m, double tol = kDefaultDualTol,
                           int max_iters = 200000);

struct Theorem1Report {
  double r_e = 0.0;
  double log_r_c = 0.0;
  double log_per = 0.0;
  bool have_per = false;
  bool agree = false;         // |log R_C - R_E| <= tol
  bool lower_bound = true;    // log Per <= log R_C
  bool upper_bound = true;    // log R_C <= n + log Per
  bool ok() const { return agree && lower_bound && upper_bound; }
};

inline constexpr int kTheorem1ExactMaxN = 20;

/// Solves both sides and checks duality plus the e^n sandwich. A negative
/// `exact_per` means Ryser is used for n <= kTheorem1ExactMaxN and the sandwich
/// is skipped above that. Bound checks use additive slack `slack`.
Theorem1Report verify_theorem1(const NonNegMatrix& m, double tol, double exact_per = -1.0,
                               double slack = 1e-8);

}  // namespace permabound
