#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "permabound/matrix.hpp"

namespace testutil {

using permabound::Matrix;
using permabound::Vector;

// Every permutation of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Brute-force permanent by summing over all permutations.
inline double brute_permanent(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  double total = 0.0;
  for (const auto& p : all_permutations(n)) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) w *= a(i, p[static_cast<std::size_t>(i)]);
    total += w;
  }
  return total;
}

// Root of a monotone function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  const bool rising = f(hi) > f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0.0) == rising) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Central difference of f along every coordinate of x.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                 double h) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Matrix up = x, down = x;
    up.data()[k] += h;
    down.data()[k] -= h;
    g.data()[k] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Random interior doubly stochastic matrix: a mixture of random permutation matrices
// blended with the uniform matrix.
inline Matrix random_doubly_stochastic(int n, std::mt19937_64& rng, int components = 4) {
  Matrix b = Matrix::Constant(n, n, 1.0 / n);
  double mass = 0.2;
  b *= mass;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<double> w(static_cast<std::size_t>(components));
  double total = 0.0;
  for (auto& x : w) total += (x = 0.1 + uniform01(rng));
  for (int c = 0; c < components; ++c) {
    std::shuffle(p.begin(), p.end(), rng);
    for (int i = 0; i < n; ++i) b(i, p[static_cast<std::size_t>(i)]) += (1.0 - mass) * w[static_cast<std::size_t>(c)] / total;
  }
  return b;
}

inline Matrix random_positive(int n, std::mt19937_64& rng, double lo = 0.1, double hi = 3.0) {
  Matrix a(n, n);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = lo + (hi - lo) * uniform01(rng);
  return a;
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

}  // namespace testutil
