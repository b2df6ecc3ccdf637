#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "permabound/assignment.hpp"
#include "permabound/bethe.hpp"
#include "permabound/entropy.hpp"
#include "permabound/exact.hpp"
#include "test_util.hpp"

using namespace permabound;

namespace {

double r_o_ones(int n) {
  return n * std::log(n) + (n > 1 ? n * (n - 1.0) * std::log((n - 1.0) / n) : 0.0);
}

double brute_assignment(const Matrix& cost) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : testutil::all_permutations(static_cast<int>(cost.rows()))) {
    double v = 0.0;
    for (int i = 0; i < cost.rows(); ++i) v += cost(i, p[static_cast<std::size_t>(i)]);
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("R_O objective values") {
  for (int n = 1; n <= 6; ++n) {
    CHECK(r_o_objective(identity_matrix(n), Matrix::Identity(n, n)) == 0.0);
    CHECK(r_o_objective(ones_matrix(n), Matrix::Constant(n, n, 1.0 / n)) ==
          doctest::Approx(r_o_ones(n)).epsilon(1e-14));
  }
  CHECK(std::abs(r_o_objective(ones_matrix(2), Matrix::Constant(2, 2, 0.5))) <= 1e-15);
  CHECK(r_o_objective(identity_matrix(2), Matrix::Constant(2, 2, 0.5)) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("R_O gradient") {
  const Matrix g = r_o_gradient(ones_matrix(2), Matrix::Constant(2, 2, 0.5));
  CHECK((g.array() == g(0, 0)).all());

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const NonNegMatrix m = generate(GeneratorKind::uniform, n, rng());
    const Matrix b = testutil::random_doubly_stochastic(n, rng);
    const Matrix analytic = r_o_gradient(m, b);
    const Matrix fd = testutil::central_difference(
        [&](const Matrix& x) { return r_o_objective(m, x); }, b, 1e-6);
    const double rel = (analytic - fd).cwiseAbs().maxCoeff() / analytic.cwiseAbs().maxCoeff();
    CHECK(rel <= 1e-5);
  }

  // Blows up towards the boundary.
  double previous = 0.0;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    Matrix b(2, 2);
    b << 1 - eps, eps, eps, 1 - eps;
    const double size = r_o_gradient(ones_matrix(2), b).cwiseAbs().maxCoeff();
    CHECK(size > previous);
    previous = size;
  }
  CHECK_THROWS_AS(r_o_gradient(ones_matrix(2), Matrix::Identity(2, 2)), std::domain_error);
}

TEST_CASE("assignment oracle") {
  const AssignmentSolution id = assignment_lmo(Matrix::Identity(3, 3));
  CHECK(id.sigma == Permutation{0, 1, 2});
  CHECK(id.value == 3.0);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const AssignmentSolution s = assignment_lmo(swap);
  CHECK(s.sigma == Permutation{1, 0});
  CHECK(s.value == 2.0);

  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix cost(6, 6);
    for (Eigen::Index k = 0; k < cost.size(); ++k) cost.data()[k] = 10 * (testutil::uniform01(rng) - 0.5);
    const AssignmentSolution a = assignment_lmo(cost);
    CHECK(a.value == doctest::Approx(brute_assignment(cost)).epsilon(1e-12));
    double v = 0.0;
    for (int i = 0; i < 6; ++i) v += cost(i, a.sigma[static_cast<std::size_t>(i)]);
    CHECK(v == doctest::Approx(a.value).epsilon(1e-12));
  }
}

TEST_CASE("assignment oracle with forbidden cells") {
  const double no = -std::numeric_limits<double>::infinity();
  Matrix cost(3, 3);
  cost << 5, no, no, 1, 1, no, 1, 1, 1;
  const AssignmentSolution a = assignment_lmo(cost);
  CHECK(a.sigma == Permutation{0, 1, 2});
  CHECK(a.value == 7.0);

  Matrix blocked(2, 2);
  blocked << 1, 1, no, no;
  CHECK_THROWS_AS(assignment_lmo(blocked), std::domain_error);
  Matrix nan(2, 2);
  nan << 1, std::numeric_limits<double>::quiet_NaN(), 1, 1;
  CHECK_THROWS_AS(assignment_lmo(nan), std::invalid_argument);
  CHECK_THROWS_AS(assignment_lmo(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("mirror solver for R_O") {
  const BetheResult j3 = solve_r_o_mirror(ones_matrix(3));
  CHECK(std::abs(j3.value - (3 * std::log(3.0) + 6 * std::log(2.0 / 3))) <= 1e-6);
  CHECK(j3.diagnostics.final_residual <= kDefaultBetheTol);

  const BetheResult i4 = solve_r_o_mirror(identity_matrix(4));
  CHECK(i4.value == 0.0);
  CHECK(i4.b.entries() == Matrix::Identity(4, 4));

  for (int n = 2; n <= 8; ++n) {
    CHECK(solve_r_o_mirror(ones_matrix(n)).value == doctest::Approx(r_o_ones(n)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(solve_r_o_mirror(validate({{1, 1}, {0, 0}})), InfeasibleSupport);
}

TEST_CASE("R_O optimality and concavity") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    const NonNegMatrix m = generate(GeneratorKind::uniform, n, rng());
    const BetheResult r = solve_r_o_mirror(m);
    CHECK(r.value >= r_o_objective(m, sinkhorn_solve(m).b) - 1e-12);
    for (int k = 0; k < 10; ++k) {
      const Matrix x = testutil::random_doubly_stochastic(n, rng);
      const Matrix y = testutil::random_doubly_stochastic(n, rng);
      const double lam = testutil::uniform01(rng);
      CHECK(r_o_objective(m, x) <= r.value + 1e-9);
      CHECK(r_o_objective(m, Matrix(lam * x + (1 - lam) * y)) >=
            lam * r_o_objective(m, x) + (1 - lam) * r_o_objective(m, y) - 1e-12);
    }
  }
}

TEST_CASE("Frank-Wolfe solver for R_O") {
  CHECK(std::abs(solve_r_o_fw(ones_matrix(2), 1e-9).value) <= 1e-7);
  for (int n = 1; n <= 5; ++n) {
    const BetheResult r = solve_r_o_fw(identity_matrix(n));
    CHECK(r.diagnostics.iterations == 0);
    CHECK(r.value == 0.0);
  }
  const BetheResult u = solve_r_o_fw(generate(GeneratorKind::uniform, 5, 21), 1e-6);
  CHECK(u.diagnostics.converged);
  CHECK(u.diagnostics.final_residual <= 1e-6);

  const NonNegMatrix m = generate(GeneratorKind::uniform, 6, 13);
  CHECK(std::abs(solve_r_o_mirror(m).value - solve_r_o_fw(m).value) <= 1e-5);
  CHECK_THROWS_AS(solve_r_o_fw(generate(GeneratorKind::uniform, 6, 13), 1e-12, 3), NonConvergence);
}

TEST_CASE("frank_wolfe_gap certificate") {
  const NonNegMatrix m = generate(GeneratorKind::uniform, 4, 2);
  const BetheResult r = solve_r_o_mirror(m);
  CHECK(frank_wolfe_gap(m, r_o_gradient(m, r.b.entries()), r.b.entries()) <= 1e-8);
  const Matrix start = Matrix::Constant(4, 4, 0.25);
  const double gap = frank_wolfe_gap(m, r_o_gradient(m, start), start);
  // Concavity: the gap bounds the suboptimality.
  CHECK(gap >= r.value - r_o_objective(m, start) - 1e-12);
}

TEST_CASE("Bethe sandwich") {
  const BetheSandwichReport j2 = verify_sandwich_r_o(ones_matrix(2), 1e-9);
  CHECK(j2.ok());
  CHECK(std::abs(j2.r_o) <= 1e-9);
  CHECK(j2.log_per == doctest::Approx(std::log(2.0)));

  const BetheSandwichReport i5 = verify_sandwich_r_o(identity_matrix(5), 1e-9);
  CHECK(i5.ok());
  CHECK(i5.r_o == 0.0);
  CHECK(i5.log_per == 0.0);

  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const GeneratorKind kind = trial % 2 ? GeneratorKind::sparse : GeneratorKind::uniform;
    const NonNegMatrix m = generate(kind, 2 + trial % 6, rng());
    const BetheSandwichReport r = verify_sandwich_r_o(m, 1e-9, 1e-7);
    CHECK(r.ok());
  }
  CHECK_THROWS_AS(verify_sandwich_r_o(ones_matrix(8), 1e-9), std::invalid_argument);
}

TEST_CASE("R_O objective survives denormal entries") {
  const NonNegMatrix m = validate({{0.02, 0.7}, {0.99, 0.6}});
  Matrix b(2, 2);
  const double t = 1e-310;
  b << t, 1.0 - t, 1.0 - t, t;
  const double value = r_o_objective(m, b);
  CHECK(std::isfinite(value));
  CHECK(value == doctest::Approx(std::log(0.7) + std::log(0.99)).epsilon(1e-12));
}

TEST_CASE("R_O on decomposable supports") {
  SUBCASE("2x2 block with a vertex optimum") {
    // Linear in t with slope log(ad / bc) < 0: the off-diagonal vertex wins.
    const NonNegMatrix m = validate({{0.02, 0.7}, {0.99, 0.6}});
    const BetheResult mirror = solve_r_o_mirror(m);
    CHECK(mirror.value == doctest::Approx(std::log(0.7) + std::log(0.99)).epsilon(1e-12));
    CHECK(mirror.diagnostics.final_residual <= kDefaultBetheTol);
    const BetheResult fw = solve_r_o_fw(m);
    CHECK(std::abs(fw.value - mirror.value) <= 1e-6);
  }
  SUBCASE("forced row") {
    // Row 1 has one entry, so B(1,1) = 1 and the rest is a 2x2 problem on rows {0,2}.
    const NonNegMatrix m = validate({{0.5, 0.0, 0.3}, {0.0, 0.8, 0.0}, {0.4, 0.0, 0.6}});
    const BetheResult mirror = solve_r_o_mirror(m);
    CHECK(mirror.b.entries()(1, 1) == 1.0);
    const double best = std::max(std::log(0.5) + std::log(0.6), std::log(0.3) + std::log(0.4));
    CHECK(mirror.value == doctest::Approx(std::log(0.8) + best).epsilon(1e-12));
    const BetheResult fw = solve_r_o_fw(m);
    CHECK(std::abs(fw.value - mirror.value) <= 1e-6);
  }
  SUBCASE("block generator instances agree across solvers") {
    for (std::uint64_t seed : {15678846284374373194ULL, 10411657437845087724ULL,
                               16704809286552421544ULL}) {
      const NonNegMatrix m = generate(GeneratorKind::block, 5, seed);
      const BetheResult mirror = solve_r_o_mirror(m);
      CHECK(mirror.diagnostics.final_residual <= kDefaultBetheTol);
      CHECK(max_marginal_deviation(mirror.b.entries()) <= 1e-12);
      const BetheResult fw = solve_r_o_fw(m, 1e-6);
      CHECK(std::abs(fw.value - mirror.value) <= 1e-5);
      CHECK(mirror.value >= fw.value - 1e-9);
    }
  }
}

TEST_CASE("Frank-Wolfe does not certify a near-vertex point falsely") {
  // Its first full step heads for a vertex; the mirror optimum lies well inside.
  const NonNegMatrix m = generate(GeneratorKind::sparse, 5, 14837314206658177788ULL);
  const BetheResult mirror = solve_r_o_mirror(m);
  const BetheResult fw = solve_r_o_fw(m);
  CHECK(std::abs(fw.value - mirror.value) <= 1e-5);
}

TEST_CASE("mirror solver reaches tight gaps on slow instances") {
  for (std::uint64_t seed : {2745103178482720850ULL}) {
    const NonNegMatrix m = generate(GeneratorKind::exponential, 4, seed);
    const BetheResult r = solve_r_o_mirror(m, 1e-11);
    CHECK(r.diagnostics.final_residual <= 1e-11);
  }
  const NonNegMatrix sparse3 = generate(GeneratorKind::sparse, 3, 13976161333382538569ULL);
  CHECK(solve_r_o_mirror(sparse3, 1e-11).diagnostics.final_residual <= 1e-11);
}
