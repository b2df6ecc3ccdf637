#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "permabound/matrix.hpp"
#include "permabound/report.hpp"

namespace permabound {

/// Runs the selected relaxations plus the exact permanent (n <= exact_threshold)
/// and records every bound check. Solver failures are recorded per relaxation;
/// the remaining relaxations still run.
BoundsReport compute_report(const NonNegMatrix& m, const std::string& instance,
                            const RunConfig& config);

enum class Suite { duality, sandwich, theorems, heuristic_gap, oracle };

Suite parse_suite(const std::string& text);
std::string to_string(Suite s);

struct VerifyOptions {
  Suite suite = Suite::oracle;
  int n_max = 0;     // 0: suite default
  int trials = 0;    // 0: suite default
  std::uint64_t seed = 1;
  int threads = 0;   // 0: PERMABOUND_THREADS or hardware concurrency
};

/// Default (n_max, trials) of a suite.
VerifyOptions suite_defaults(Suite s);

struct TrialOutcome {
  int index = 0;
  std::string instance;
  bool passed = false;
  std::string detail;
  std::map<std::string, double> metrics;
};

struct VerifySummary {
  Suite suite = Suite::oracle;
  int n_max = 0;
  int trials = 0;
  int passed = 0;
  std::vector<TrialOutcome> outcomes;  // ordered by trial index
  std::string aggregate;               // suite-specific statistics line
  bool ok() const { return passed == trials; }
};

/// Throws std::invalid_argument when n_max or trials fall outside the suite's guards.
VerifySummary run_verify(VerifyOptions options);

/// Instance used for trial `index` of a suite (n cycles through 2..n_max).
NonNegMatrix trial_instance(Suite suite, int n_max, std::uint64_t seed, int index,
                            std::string* descriptor = nullptr);

struct TableRow {
  std::string family;  // random | ones | identity
  int n = 0;
  int trials = 0;
  double mean_rc_ratio = 0.0;  // log(R_C / Per) / n
  double max_rc_ratio = 0.0;
  double mean_ro_ratio = 0.0;  // log(Per / exp(R_O)) / (n log 2)
  double max_ro_ratio = 0.0;
};

std::vector<TableRow> run_table(const std::vector<int>& n_list, int trials, std::uint64_t seed,
                                const RunConfig& config = {}, int threads = 0);
void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows);

/// Worker count: explicit value, else PERMABOUND_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, count) on a pool of `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace permabound
