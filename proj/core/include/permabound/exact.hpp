#pragma once

#include <vector>

#include "permabound/matrix.hpp"

namespace permabound {

inline constexpr int kNaiveMaxN = 10;
inline constexpr int kRyserMaxN = 30;
inline constexpr int kEnumerateMaxN = 10;
inline constexpr int kHeuristicGapMaxN = 8;

/// Sum over all n! permutations. Throws std::invalid_argument for n > 10.
double permanent_naive(const NonNegMatrix& m);

/// Ryser's inclusion-exclusion formula in the Nijenhuis-Wilf form, visiting
/// subsets in Gray-code order with compensated accumulation. O(2^n n).
/// Throws std::invalid_argument for n > 30.
double permanent_ryser(const NonNegMatrix& m);

/// Perfect matchings of the support (positive-weight permutations),
/// lexicographic order.
std::vector<Permutation> enumerate_matchings(const NonNegMatrix& m);

/// Probability distribution over perfect matchings of a fixed matrix.
struct MatchingDistribution {
  int n = 0;
  std::vector<Permutation> matchings;
  std::vector<double> probs;
};

/// Throws std::invalid_argument if probabilities are negative, do not sum to 1
/// within 1e-12, or do not parallel the matchings.
void check_distribution(const MatchingDistribution& b);

/// p(M) = prod A_{i,M(i)} / Per(A). Throws std::domain_error when Per(A) = 0.
MatchingDistribution gibbs_distribution(const NonNegMatrix& m);

/// sum_M b(M) log(prod_{(i,j) in M} A_ij / b(M)), with 0 log 0 = 0.
/// Throws std::invalid_argument if b puts mass on a non-matching of A.
double exact_program_objective(const NonNegMatrix& m, const MatchingDistribution& b);

/// B_ij = Pr_b[(i,j) in M]: the edge-presence marginals (doubly stochastic).
Matrix edge_marginals(const MatchingDistribution& b);

enum class ProductForm {
  tree_product,  // prod_{(i,j) in M} B_ij
  odd_ratio,     // prod_{(i,j) in M} B_ij / prod_{(i,j) not in M} (1 - B_ij)
};

/// Product-form estimate of b(M) from the edge marginals. odd_ratio returns
/// +infinity when an off-matching marginal equals 1.
double product_form_value(const Matrix& marginals, const Permutation& sigma,
                          ProductForm form);

struct HeuristicGap {
  double kl_tree_product = 0.0;
  double kl_odd_ratio = 0.0;
  int matchings = 0;
};

/// KL(Gibbs || normalized product-form approximation) for both forms,
/// evaluated at the Gibbs marginals. Infinite when the approximation is
/// undefined or vanishes on a matching. n <= 8.
HeuristicGap heuristic_gap_report(const NonNegMatrix& m);

}  // namespace permabound
