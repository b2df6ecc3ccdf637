#include "permabound/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace permabound {
namespace {

void guard(const NonNegMatrix& m, int max_n, const char* what) {
  if (m.n() > max_n) {
    throw std::invalid_argument(std::string(what) + ": n = " + std::to_string(m.n()) +
                                " exceeds limit " + std::to_string(max_n));
  }
}

void naive_rec(const Matrix& a, int row, std::uint32_t used, double prod, double& total) {
  const int n = static_cast<int>(a.rows());
  if (row == n) {
    total += prod;
    return;
  }
  for (int j = 0; j < n; ++j) {
    if (used & (1u << j)) continue;
    naive_rec(a, row + 1, used | (1u << j), prod * a(row, j), total);
  }
}

void enumerate_rec(const NonNegMatrix& m, int row, std::uint32_t used, Permutation& current,
                   std::vector<Permutation>& out) {
  const int n = m.n();
  if (row == n) {
    out.push_back(current);
    return;
  }
  for (int j = 0; j < n; ++j) {
    if ((used & (1u << j)) || !m.in_support(row, j)) continue;
    current[static_cast<std::size_t>(row)] = j;
    enumerate_rec(m, row + 1, used | (1u << j), current, out);
  }
}

double log_weight(const NonNegMatrix& m, const Permutation& sigma) {
  double s = 0.0;
  for (int i = 0; i < m.n(); ++i) s += std::log(m(i, sigma[static_cast<std::size_t>(i)]));
  return s;
}

}  // namespace

double permanent_naive(const NonNegMatrix& m) {
  guard(m, kNaiveMaxN, "permanent_naive");
  double total = 0.0;
  naive_rec(m.entries(), 0, 0u, 1.0, total);
  return total;
}

double permanent_ryser(const NonNegMatrix& m) {
  guard(m, kRyserMaxN, "permanent_ryser");
  const int n = m.n();
  const Matrix& a = m.entries();

  // Nijenhuis-Wilf: Per(A) = (-1)^(n-1) 2 sum_{S subset [n-1]} (-1)^|S| prod_i (x_i + sum_{j in S} a_ij)
  // with x_i = a_{i,n-1} - (1/2) sum_j a_ij. The half-shift keeps the terms small.
  std::vector<long double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    long double row = 0.0L;
    for (int j = 0; j < n; ++j) row += a(i, j);
    x[static_cast<std::size_t>(i)] = a(i, n - 1) - row / 2.0L;
  }
  auto product = [&] {
    long double p = 1.0L;
    for (long double v : x) p *= v;
    return p;
  };

  long double sum = product();
  long double carry = 0.0L;  // Kahan compensation
  const std::uint64_t subsets = std::uint64_t{1} << (n - 1);
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < subsets; ++k) {
    const int j = std::countr_zero(k);
    gray ^= std::uint64_t{1} << j;
    const bool added = (gray >> j) & 1u;
    for (int i = 0; i < n; ++i) {
      if (added) x[static_cast<std::size_t>(i)] += a(i, j);
      else x[static_cast<std::size_t>(i)] -= a(i, j);
    }
    const long double term = (std::popcount(gray) & 1) ? -product() : product();
    const long double y = term - carry;
    const long double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  long double per = 2.0L * sum;
  if ((n - 1) & 1) per = -per;
  // Rounding can leave a tiny negative value for a zero permanent.
  return per < 0.0L ? 0.0 : static_cast<double>(per);
}

std::vector<Permutation> enumerate_matchings(const NonNegMatrix& m) {
  guard(m, kEnumerateMaxN, "enumerate_matchings");
  std::vector<Permutation> out;
  Permutation current(static_cast<std::size_t>(m.n()), -1);
  enumerate_rec(m, 0, 0u, current, out);
  return out;
}

void check_distribution(const MatchingDistribution& b) {
  if (b.matchings.size() != b.probs.size()) {
    throw std::invalid_argument("distribution: matchings and probs differ in length");
  }
  double total = 0.0;
  for (double p : b.probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("distribution: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("distribution: probabilities sum to " + std::to_string(total));
  }
  for (const auto& sigma : b.matchings) {
    std::vector<bool> seen(static_cast<std::size_t>(std::max(b.n, 0)), false);
    if (static_cast<int>(sigma.size()) != b.n) throw std::invalid_argument("distribution: bad permutation");
    for (int j : sigma) {
      if (j < 0 || j >= b.n || seen[static_cast<std::size_t>(j)]) {
        throw std::invalid_argument("distribution: bad permutation");
      }
      seen[static_cast<std::size_t>(j)] = true;
    }
  }
}

MatchingDistribution gibbs_distribution(const NonNegMatrix& m) {
  const double per = permanent_naive(m);
  if (per <= 0.0) throw std::domain_error("gibbs_distribution: permanent is zero");
  MatchingDistribution b;
  b.n = m.n();
  b.matchings = enumerate_matchings(m);
  b.probs.reserve(b.matchings.size());
  for (const auto& sigma : b.matchings) {
    double w = 1.0;
    for (int i = 0; i < m.n(); ++i) w *= m(i, sigma[static_cast<std::size_t>(i)]);
    b.probs.push_back(w / per);
  }
  return b;
}

double exact_program_objective(const NonNegMatrix& m, const MatchingDistribution& b) {
  check_distribution(b);
  if (b.n != m.n()) throw std::invalid_argument("distribution dimension mismatch");
  double value = 0.0;
  for (std::size_t k = 0; k < b.matchings.size(); ++k) {
    const double p = b.probs[k];
    if (p == 0.0) continue;
    const Permutation& sigma = b.matchings[k];
    for (int i = 0; i < m.n(); ++i) {
      const int j = sigma[static_cast<std::size_t>(i)];
      if (j < 0 || j >= m.n() || !m.in_support(i, j)) {
        throw std::invalid_argument("distribution puts mass on a non-matching");
      }
    }
    value += p * (log_weight(m, sigma) - std::log(p));
  }
  return value;
}

Matrix edge_marginals(const MatchingDistribution& b) {
  Matrix out = Matrix::Zero(b.n, b.n);
  for (std::size_t k = 0; k < b.matchings.size(); ++k) {
    for (int i = 0; i < b.n; ++i) out(i, b.matchings[k][static_cast<std::size_t>(i)]) += b.probs[k];
  }
  return out;
}

double product_form_value(const Matrix& marginals, const Permutation& sigma, ProductForm form) {
  const auto n = marginals.rows();
  if (static_cast<Eigen::Index>(sigma.size()) != n) {
    throw std::invalid_argument("product_form_value: permutation size mismatch");
  }
  double numerator = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) numerator *= marginals(i, sigma[static_cast<std::size_t>(i)]);
  if (form == ProductForm::tree_product) return numerator;

  double denominator = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sigma[static_cast<std::size_t>(i)] == j) continue;
      const double absent = 1.0 - marginals(i, j);
      if (absent <= 0.0) return std::numeric_limits<double>::infinity();
      denominator *= absent;
    }
  }
  return numerator / denominator;
}

HeuristicGap heuristic_gap_report(const NonNegMatrix& m) {
  guard(m, kHeuristicGapMaxN, "heuristic_gap_report");
  const MatchingDistribution gibbs = gibbs_distribution(m);
  const Matrix marginals = edge_marginals(gibbs);

  auto kl_for = [&](ProductForm form) {
    std::vector<double> q;
    double z = 0.0;
    for (const auto& sigma : gibbs.matchings) {
      const double v = product_form_value(marginals, sigma, form);
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      q.push_back(v);
      z += v;
    }
    double kl = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double p = gibbs.probs[k];
      if (p == 0.0) continue;
      if (q[k] == 0.0) return std::numeric_limits<double>::infinity();
      kl += p * std::log(p * z / q[k]);
    }
    // Rounding only; KL is non-negative.
    return kl < 0.0 && kl > -1e-14 ? 0.0 : kl;
  };

  HeuristicGap out;
  out.matchings = static_cast<int>(gibbs.matchings.size());
  out.kl_tree_product = kl_for(ProductForm::tree_product);
  out.kl_odd_ratio = kl_for(ProductForm::odd_ratio);
  return out;
}

}  // namespace permabound
