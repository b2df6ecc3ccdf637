#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permabound/matrix.hpp"
#include "permabound/solver.hpp"

namespace permabound {

/// Entrywise factorization A = C o D into positive matrices, defining
/// p(x) = prod_i sum_j x_ij C_ij and q(y) = prod_j sum_i y_ij D_ij.
struct MatrixSplit {
  Matrix c;
  Matrix d;
  std::string label;
};

enum class SplitKind { sqrt, left_identity, random };

/// sqrt: C = D = sqrt(A). left_identity: C = A, D = 1. random: C = A o R,
/// D = 1 / R with R = exp(U[-1, 1]) drawn from `seed`.
/// Throws std::domain_error if A has a zero entry.
MatrixSplit make_split(const NonNegMatrix& m, SplitKind kind, std::uint64_t seed = 0);

/// exp(sum_ij B_ij log(M_ij / B_ij)), the closed-form infimum of
/// r(x) / prod x_ij^B_ij for r(x) = prod_i sum_j M_ij x_ij.
double inner_inf_closed(const Matrix& m, const Matrix& b);
double log_inner_inf_closed(const Matrix& m, const Matrix& b);

/// log r(x) - sum B_ij log x_ij.
double log_inner_ratio(const Matrix& m, const Matrix& b, const Matrix& x);

struct InnerInfCheck {
  double numeric = 0.0;    // infimum found by descent
  double closed = 0.0;     // closed form
  double tightness = 0.0;  // ratio evaluated at x = B / M
  SolveDiagnostics diagnostics;
  double relative_error() const;
};

/// Minimizes log r(e^u) - <B, u> by damped Newton in u = log x and
/// evaluates the tightness point. M must be positive; B non-negative with
/// non-zero rows. Rows of B are rescaled to sum to 1 first, and the closed
/// form and tightness point are reported for the rescaled B.
InnerInfCheck inner_inf_numeric(const Matrix& m, const Matrix& b, double tol = 1e-12,
                                int max_iters = 200000);

struct PolyRelaxResult {
  double log_value = 0.0;          // log R_P or log R_Q
  Matrix b;                        // outer maximizer
  double reduction_residual = 0.0; // relative |numeric - closed| of the inner infima at b
};

/// log of the R_P objective at a fixed B (inner infima in closed form).
double log_r_p_objective(const MatrixSplit& split, const Matrix& b);
/// log of the R_Q objective at a fixed B.
double log_r_q_objective(const MatrixSplit& split, const Matrix& b);

/// Outer supremum through the entropy solver; the inner infima use the
/// closed form, checked numerically at the maximizer. Positive A only.
PolyRelaxResult r_p_value(const NonNegMatrix& m, const MatrixSplit& split, double tol = 1e-10);
/// Outer supremum through the Bethe mirror solver.
PolyRelaxResult r_q_value(const NonNegMatrix& m, const MatrixSplit& split, double tol = 1e-9);

struct SplitCheck {
  std::string label;
  double log_r_p = 0.0;
  double log_r_q = 0.0;
  double p_residual = 0.0;
  double q_residual = 0.0;
};

struct Theorems23Report {
  double r_e = 0.0;
  double r_o = 0.0;
  std::vector<SplitCheck> splits;
  double max_p_error = 0.0;  // max |log R_P - R_E|
  double max_q_error = 0.0;  // max |log R_Q - R_O|
  double p_spread = 0.0;     // relative spread of R_P across splits
  double q_spread = 0.0;
  bool ok = false;
};

/// |log R_P - R_E| <= tol and |log R_Q - R_O| <= tol for every split.
Theorems23Report verify_theorems_2_3(const NonNegMatrix& m,
                                     const std::vector<MatrixSplit>& splits, double tol);

}  // namespace permabound
