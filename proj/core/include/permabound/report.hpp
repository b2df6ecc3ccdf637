#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "permabound/solver.hpp"

namespace permabound {

enum class Relaxation { re, rc, ro, rp, rq };

/// "re,rc,ro" -> set; throws std::invalid_argument on unknown names.
std::set<Relaxation> parse_relaxations(const std::string& text);
std::string to_string(Relaxation r);

enum class OutputFormat { json, csv };

struct RunConfig {
  double sinkhorn_tol = 1e-10;
  double dual_tol = 1e-8;
  double bethe_tol = 1e-9;
  double theorem_tol = 1e-6;
  int sinkhorn_max_iters = 100000;
  int dual_max_iters = 200000;
  int bethe_max_iters = 20000;
  int exact_threshold = 20;
  std::set<Relaxation> relaxations{Relaxation::re, Relaxation::rc, Relaxation::ro};
  OutputFormat format = OutputFormat::json;
  unsigned long long seed = 0;

  /// Throws std::invalid_argument unless tolerances are positive and
  /// exact_threshold <= 30.
  void check() const;
  /// 100 x the strictest solver tolerance.
  double sandwich_slack() const;
};

/// lhs <= rhs + slack.
struct SandwichCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
};

struct SolverRecord {
  SolveDiagnostics diagnostics;
  std::string error;  // empty on success
};

struct ExactPermanent {
  std::string method = "skipped";  // naive | ryser | skipped
  std::optional<double> value;
};

struct BoundsReport {
  std::string instance;
  int n = 0;
  ExactPermanent per_exact;
  std::optional<double> r_e;
  std::optional<double> log_r_c;
  std::optional<double> r_o;
  std::optional<double> log_r_p;
  std::optional<double> log_r_q;
  std::vector<SandwichCheck> sandwich_checks;
  std::map<std::string, SolverRecord> solvers;
  std::vector<std::string> notes;
  std::map<std::string, double> timings;  // seconds; excluded from golden comparisons

  bool solver_failed() const;
  bool check_failed() const;
  /// 0 success, 2 solver non-convergence, 3 violated check.
  int exit_code() const;
};

/// Exit codes shared by the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitViolation = 3;

// Canonical JSON: keys in fixed order, non-finite numbers as the strings
// "inf", "-inf", "nan", timings isolated under "timings". CSV is the
// flattened JSON as `key,value` rows (JSON-pointer keys).
std::string report_to_json(const BoundsReport& report, bool include_timings = true);
BoundsReport report_from_json(const std::string& text);
std::string report_to_csv(const BoundsReport& report, bool include_timings = true);
BoundsReport report_from_csv(const std::string& text);

}  // namespace permabound
