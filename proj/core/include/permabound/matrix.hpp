#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace permabound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Permutation as a row -> column map: sigma[i] is the column matched to row i.
using Permutation = std::vector<int>;

/// Default tolerance used to certify membership in the Birkhoff polytope.
inline constexpr double kDefaultCertifyTolerance = 1e-9;

/// A square matrix with non-negative finite entries and its positivity mask.
///
/// Construct through validate(); the mask always agrees with the entries.
class NonNegMatrix {
 public:
  int n() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  const Mask& support() const { return support_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  bool in_support(int i, int j) const { return support_(i, j); }
  bool full_support() const { return support_.all(); }
  int support_size() const { return static_cast<int>(support_.count()); }

 private:
  friend NonNegMatrix validate(const Matrix& raw);
  NonNegMatrix(Matrix entries, Mask support)
      : entries_(std::move(entries)), support_(std::move(support)) {}

  Matrix entries_;
  Mask support_;
};

/// Checks squareness, n >= 1, finiteness and non-negativity.
/// Throws std::invalid_argument on any violation.
NonNegMatrix validate(const Matrix& raw);

/// Row-list overload; rejects ragged input.
NonNegMatrix validate(const std::vector<std::vector<double>>& rows);
inline NonNegMatrix validate(std::initializer_list<std::initializer_list<double>> rows) {
  return validate(std::vector<std::vector<double>>(rows.begin(), rows.end()));
}

/// Largest |row sum - 1| or |column sum - 1|.
double max_marginal_deviation(const Matrix& b);

/// A point of the Birkhoff polytope with a certified marginal tolerance.
class DoublyStochasticMatrix {
 public:
  /// Throws std::invalid_argument unless every entry lies in [0, 1] and every
  /// row and column sum is within `tolerance` of 1. Entries within
  /// `tolerance` outside [0, 1] are clamped.
  DoublyStochasticMatrix(Matrix entries,
                         double tolerance = kDefaultCertifyTolerance);

  int n() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  double tolerance() const { return tolerance_; }

  /// True when B vanishes wherever A does (membership in the support-restricted polytope).
  bool supported_on(const NonNegMatrix& m) const;

 private:
  Matrix entries_;
  double tolerance_;
};

/// Perfect-matching structure of the support graph.
struct BipartiteSupport {
  int n = 0;
  Mask adjacency;
  bool has_perfect_matching = false;
  /// Set when has_perfect_matching: true iff every support edge lies on some
  /// perfect matching (total support), i.e. a doubly stochastic matrix with the
  /// same support exists.
  std::optional<bool> dm_irreducible_flag;
  /// A maximum matching (row -> column, -1 when unmatched).
  Permutation matching;
};

/// Augmenting-path bipartite matching on the support; never evaluates a permanent.
BipartiteSupport support_has_perfect_matching(const NonNegMatrix& m);

/// Mask of support edges that belong to at least one perfect matching.
/// Empty support (all false) when no perfect matching exists.
Mask matchable_edges(const NonNegMatrix& m);

/// Zeroes the entries of A that lie on no perfect matching. Every B in the
/// support-restricted polytope vanishes there, so the relaxations and the
/// permanent are unchanged while the result has total support.
NonNegMatrix prune_to_total_support(const NonNegMatrix& m);

/// Masks `b` to the support of `m` without renormalizing.
Matrix project_to_support(const Matrix& b, const NonNegMatrix& m);

enum class GeneratorKind { uniform, exponential, sparse, block, binary };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::uniform;
  int n = 1;
  std::uint64_t seed = 0;
  double density = 0.5;  // sparse only

  std::string to_string() const;
};

/// Parses "kind:n:seed"; sparse density as "sparse(p)" or "sparse=p".
GeneratorSpec parse_generator_spec(const std::string& text);

/// Deterministic instance generator. Sparse and binary instances are redrawn
/// until their support admits a perfect matching; std::runtime_error after
/// kGeneratorRetries failures.
NonNegMatrix generate(const GeneratorSpec& spec);
NonNegMatrix generate(GeneratorKind kind, int n, std::uint64_t seed,
                      double density = 0.5);

inline constexpr int kGeneratorRetries = 1000;

/// Small reference matrices.
NonNegMatrix identity_matrix(int n);
NonNegMatrix ones_matrix(int n);

}  // namespace permabound
