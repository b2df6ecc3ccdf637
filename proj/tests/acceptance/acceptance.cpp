// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "permabound/bethe.hpp"
#include "permabound/entropy.hpp"
#include "permabound/exact.hpp"
#include "permabound/harness.hpp"
#include "permabound/matrix.hpp"
#include "permabound/poly.hpp"

using namespace permabound;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  if (!out.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, title,
              out.detail.c_str(), seconds_since(start));
  std::fflush(stdout);
}

std::string fmt(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Instance pool: dense kinds always, sparse ones where the criterion allows zeros.
NonNegMatrix pool_instance(int index, int n, std::mt19937_64& rng, bool allow_sparse) {
  const std::uint64_t seed = rng();
  if (!allow_sparse) return generate(index % 2 ? GeneratorKind::exponential : GeneratorKind::uniform, n, seed);
  switch (index % 3) {
    case 0: return generate(GeneratorKind::uniform, n, seed);
    case 1: return generate(GeneratorKind::exponential, n, seed);
    default: return generate(GeneratorKind::sparse, n, seed, 0.6);
  }
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// Oracle: Ryser against naive enumeration.
Outcome criterion_oracle() {
  std::mt19937_64 rng(101);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const NonNegMatrix m = pool_instance(t, 2 + t % 7, rng, true);
    worst = std::max(worst, rel_err(permanent_ryser(m), permanent_naive(m)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && secs <= 10.0,
          fmt("max rel err %.3e", worst) + fmt(", %.2f s of 10", secs)};
}

// The Gibbs distribution attains log Per and random feasible distributions never beat it.
Outcome criterion_gibbs() {
  std::mt19937_64 rng(202);
  const auto start = Clock::now();
  double worst_gap = 0.0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const NonNegMatrix m = pool_instance(t, 2 + t % 5, rng, true);
    const double log_per = std::log(permanent_ryser(m));
    const MatchingDistribution gibbs = gibbs_distribution(m);
    worst_gap = std::max(worst_gap, std::abs(exact_program_objective(m, gibbs) - log_per));
    const std::size_t k = gibbs.matchings.size();
    for (int p = 0; p < 100; ++p) {
      MatchingDistribution b = gibbs;
      std::vector<double> q(k);
      std::exponential_distribution<double> expo(1.0);
      for (double& v : q) v = expo(rng);
      if (p % 4 == 0) {
        // Sparse direction: a single matching.
        std::fill(q.begin(), q.end(), 0.0);
        q[static_cast<std::size_t>(rng() % k)] = 1.0;
      }
      const double qs = std::accumulate(q.begin(), q.end(), 0.0);
      const double lambda = p % 2 ? uniform01(rng) : 1e-3 * uniform01(rng);
      for (std::size_t i = 0; i < k; ++i) b.probs[i] = (1.0 - lambda) * gibbs.probs[i] + lambda * q[i] / qs;
      const double s = std::accumulate(b.probs.begin(), b.probs.end(), 0.0);
      for (double& v : b.probs) v /= s;
      worst_excess = std::max(worst_excess, exact_program_objective(m, b) - log_per);
    }
  }
  const double secs = seconds_since(start);
  return {worst_gap <= 1e-11 && worst_excess <= 1e-11 && secs <= 30.0,
          fmt("|obj(Gibbs) - log Per| max %.3e", worst_gap) +
              fmt(", max perturbed excess %.3e", worst_excess) + fmt(", %.2f s of 30", secs)};
}

// log R_C from the dual against R_E from Sinkhorn.
Outcome criterion_capacity_duality() {
  std::mt19937_64 rng(303);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const NonNegMatrix m = pool_instance(t, 2 + t % 9, rng, true);
    const double log_rc = minimize_dual_h(m).value;
    const double r_e = sinkhorn_solve(m).value;
    worst = std::max(worst, std::abs(log_rc - r_e));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-6 && secs <= 60.0, fmt("max |log R_C - R_E| %.3e", worst) + fmt(", %.2f s of 60", secs)};
}

struct SandwichPool {
  std::vector<NonNegMatrix> instances;
  std::vector<double> log_per;
};

SandwichPool sandwich_pool() {
  std::mt19937_64 rng(404);
  SandwichPool pool;
  for (int t = 0; t < 100; ++t) {
    pool.instances.push_back(pool_instance(t, 2 + t % 6, rng, true));
    pool.log_per.push_back(std::log(permanent_ryser(pool.instances.back())));
  }
  return pool;
}

Outcome criterion_capacity_sandwich(const SandwichPool& pool) {
  constexpr double kSlack = 1e-7;
  double min_lower = std::numeric_limits<double>::infinity();  // log R_C - log Per
  double max_upper = -std::numeric_limits<double>::infinity(); // log R_C - log Per - n
  for (std::size_t t = 0; t < pool.instances.size(); ++t) {
    const NonNegMatrix& m = pool.instances[t];
    const double d = minimize_dual_h(m).value - pool.log_per[t];
    min_lower = std::min(min_lower, d);
    max_upper = std::max(max_upper, d - m.n());
  }
  return {min_lower >= -kSlack && max_upper <= kSlack,
          fmt("min(log R_C - log Per) %.3e", min_lower) + fmt(", max(log R_C - log Per - n) %.3e", max_upper)};
}

Outcome criterion_bethe_sandwich(const SandwichPool& pool) {
  constexpr double kSlack = 1e-7;
  double min_lower = std::numeric_limits<double>::infinity();
  double max_upper = -std::numeric_limits<double>::infinity();
  double worst_gap = 0.0;
  for (std::size_t t = 0; t < pool.instances.size(); ++t) {
    const NonNegMatrix& m = pool.instances[t];
    const BetheResult r = solve_r_o_mirror(m);
    const double d = pool.log_per[t] - r.value;
    min_lower = std::min(min_lower, d);
    max_upper = std::max(max_upper, d - m.n() * std::log(2.0));
    worst_gap = std::max(worst_gap, r.diagnostics.final_residual);
  }
  return {min_lower >= -kSlack && max_upper <= kSlack && worst_gap <= 1e-7,
          fmt("min(log Per - R_O) %.3e", min_lower) + fmt(", max(log Per - R_O - n log 2) %.3e", max_upper) +
              fmt(", max FW gap %.3e", worst_gap)};
}

Outcome criterion_cross_solver() {
  std::mt19937_64 rng(606);
  double worst_ro = 0.0;
  double worst_re = 0.0;
  for (int t = 0; t < 50; ++t) {
    const NonNegMatrix m = pool_instance(t, 2 + t % 7, rng, true);
    const BetheResult mirror = solve_r_o_mirror(m);
    // A gap of 1e-5 bounds the Frank-Wolfe suboptimality by the same amount.
    const BetheResult fw = solve_r_o_fw(m, 1e-5);
    worst_ro = std::max(worst_ro, std::abs(mirror.value - fw.value));
    const double sinkhorn = sinkhorn_solve(m).value;
    const double ascent = mirror_ascent_r_e(m).value;
    worst_re = std::max(worst_re, std::abs(sinkhorn - ascent));
  }
  return {worst_ro <= 1e-5 && worst_re <= 1e-7,
          fmt("max |R_O mirror - R_O FW| %.3e", worst_ro) + fmt(", max |R_E Sinkhorn - R_E ascent| %.3e", worst_re)};
}

Outcome criterion_poly_relaxations() {
  std::mt19937_64 rng(707);
  double worst_p = 0.0;
  double worst_q = 0.0;
  double worst_spread = 0.0;
  for (int t = 0; t < 30; ++t) {
    const NonNegMatrix m = pool_instance(t, 2 + t % 5, rng, false);
    const std::vector<MatrixSplit> splits{make_split(m, SplitKind::sqrt),
                                          make_split(m, SplitKind::random, rng()),
                                          make_split(m, SplitKind::random, rng())};
    const Theorems23Report r = verify_theorems_2_3(m, splits, 1e-6);
    worst_p = std::max(worst_p, r.max_p_error);
    worst_q = std::max(worst_q, r.max_q_error);
    worst_spread = std::max({worst_spread, r.p_spread, r.q_spread});
  }
  return {worst_p <= 1e-6 && worst_q <= 1e-6 && worst_spread <= 1e-6,
          fmt("max |log R_P - R_E| %.3e", worst_p) + fmt(", max |log R_Q - R_O| %.3e", worst_q) +
              fmt(", max split spread %.3e", worst_spread)};
}

Outcome criterion_inner_infimum() {
  std::mt19937_64 rng(808);
  double worst_below = -std::numeric_limits<double>::infinity();  // closed - numeric
  double worst_tight = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 4;
    Matrix m(n, n);
    Matrix raw(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        m(i, j) = 0.1 + 2.9 * uniform01(rng);
        raw(i, j) = 0.05 + uniform01(rng);
      }
    const Matrix b = sinkhorn_solve(validate(raw)).b.entries();
    const InnerInfCheck c = inner_inf_numeric(m, b);
    worst_below = std::max(worst_below, c.closed - c.numeric);
    worst_tight = std::max(worst_tight, rel_err(c.tightness, c.closed));
  }
  return {worst_below <= 1e-8 && worst_tight <= 1e-10,
          fmt("max(closed - numeric) %.3e", worst_below) + fmt(", max tightness rel err %.3e", worst_tight)};
}

Outcome criterion_anchors() {
  double worst_ones = 0.0;
  double worst_identity = 0.0;
  for (int n = 2; n <= 8; ++n) {
    const NonNegMatrix j = ones_matrix(n);
    const double nn = static_cast<double>(n);
    const double log_rc = minimize_dual_h(j).value;
    worst_ones = std::max(worst_ones, rel_err(std::exp(log_rc), std::pow(nn, nn)));
    worst_ones = std::max(worst_ones, rel_err(sinkhorn_solve(j).value, nn * std::log(nn)));
    const double log_ro = nn * std::log(nn) + nn * (nn - 1.0) * std::log((nn - 1.0) / nn);
    worst_ones = std::max(worst_ones, rel_err(std::exp(solve_r_o_mirror(j).value), std::exp(log_ro)));
    worst_ones = std::max(worst_ones, rel_err(permanent_ryser(j), std::exp(log_factorial(n))));
    worst_ones = std::max(worst_ones, rel_err(permanent_naive(j), std::exp(log_factorial(n))));

    const NonNegMatrix id = identity_matrix(n);
    worst_identity = std::max({worst_identity, std::abs(permanent_ryser(id) - 1.0),
                               std::abs(permanent_naive(id) - 1.0),
                               std::abs(std::exp(minimize_dual_h(id).value) - 1.0),
                               std::abs(std::exp(sinkhorn_solve(id).value) - 1.0),
                               std::abs(std::exp(solve_r_o_mirror(id).value) - 1.0)});
  }
  return {worst_ones <= 1e-6 && worst_identity <= 1e-10,
          fmt("J_n max rel err %.3e", worst_ones) + fmt(", I_n max abs err %.3e", worst_identity)};
}

double central_relative_error(const std::function<double(const Vector&)>& f, const Vector& x,
                              const Vector& g) {
  Vector fd(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
    Vector up = x;
    Vector down = x;
    up(k) += h;
    down(k) -= h;
    fd(k) = (f(up) - f(down)) / (2.0 * h);
  }
  return (fd - g).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-12);
}

Outcome criterion_gradients() {
  std::mt19937_64 rng(1010);
  double worst_ro = 0.0;
  double worst_h = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    const NonNegMatrix m = generate(GeneratorKind::uniform, n, rng());
    Matrix raw(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) raw(i, j) = 0.2 + uniform01(rng);
    const Matrix b = sinkhorn_solve(validate(raw)).b.entries();

    const Matrix g = r_o_gradient(m, b);
    auto objective = [&](const Vector& flat) {
      return r_o_objective(m, Matrix(Eigen::Map<const Matrix>(flat.data(), n, n)));
    };
    const Vector flat_b = Eigen::Map<const Vector>(b.data(), n * n);
    const Vector flat_g = Eigen::Map<const Vector>(g.data(), n * n);
    worst_ro = std::max(worst_ro, central_relative_error(objective, flat_b, flat_g));

    Vector beta(n);
    for (int j = 0; j < n; ++j) beta(j) = 2.0 * uniform01(rng) - 1.0;
    auto h = [&](const Vector& x) { return dual_h(m, x); };
    worst_h = std::max(worst_h, central_relative_error(h, beta, dual_h_gradient(m, beta)));
  }
  return {worst_ro <= 1e-5 && worst_h <= 1e-5,
          fmt("r_o_gradient max rel err %.3e", worst_ro) + fmt(", dual h gradient max rel err %.3e", worst_h)};
}

Outcome criterion_verify_suites() {
  const auto start = Clock::now();
  std::string detail;
  bool all_ok = true;
  for (Suite s : {Suite::duality, Suite::sandwich, Suite::theorems, Suite::heuristic_gap, Suite::oracle}) {
    VerifyOptions options;
    options.suite = s;
    const VerifySummary summary = run_verify(options);
    all_ok = all_ok && summary.ok();
    detail += to_string(s) + " " + std::to_string(summary.passed) + "/" + std::to_string(summary.trials) + ", ";
  }
  const double secs = seconds_since(start);
  return {all_ok && secs < 300.0, detail + fmt("%.2f s of 300", secs)};
}

}  // namespace

int main() {
  run(1, "Ryser matches naive enumeration", criterion_oracle);
  run(2, "Gibbs distribution optimizes the exact program", criterion_gibbs);
  run(3, "dual capacity equals the entropy relaxation", criterion_capacity_duality);
  const SandwichPool pool = sandwich_pool();
  run(4, "capacity sandwich 0 <= log R_C - log Per <= n", [&] { return criterion_capacity_sandwich(pool); });
  run(5, "Bethe sandwich 0 <= log Per - R_O <= n log 2", [&] { return criterion_bethe_sandwich(pool); });
  run(6, "cross-solver agreement", criterion_cross_solver);
  run(7, "polynomial relaxations match R_E and R_O", criterion_poly_relaxations);
  run(8, "closed-form inner infimum", criterion_inner_infimum);
  run(9, "closed-form anchors on J_n and I_n", criterion_anchors);
  run(10, "gradients match central differences", criterion_gradients);
  run(11, "full verify run under 5 minutes", criterion_verify_suites);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
