#include "permabound/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "permabound/bethe.hpp"
#include "permabound/entropy.hpp"
#include "permabound/exact.hpp"
#include "permabound/poly.hpp"

namespace permabound {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t suite_tag, int index) {
  return splitmix(splitmix(seed ^ (suite_tag << 56)) + static_cast<std::uint64_t>(index));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

SandwichCheck check(std::string name, double lhs, double rhs, double slack) {
  return SandwichCheck{std::move(name), lhs, rhs, slack, lhs <= rhs + slack};
}

// Runs `fn`, storing diagnostics or the failure message under `name`.
template <typename Fn>
auto run_solver(BoundsReport& report, const std::string& name, Fn&& fn)
    -> std::optional<decltype(fn())> {
  const auto start = Clock::now();
  try {
    auto result = fn();
    report.solvers[name].diagnostics = result.diagnostics;
    report.timings[name] = seconds_since(start);
    return result;
  } catch (const NonConvergence& e) {
    report.solvers[name] = SolverRecord{e.diagnostics(), e.what()};
  } catch (const std::exception& e) {
    report.solvers[name] = SolverRecord{SolveDiagnostics{}, e.what()};
  }
  report.timings[name] = seconds_since(start);
  return std::nullopt;
}

}  // namespace

BoundsReport compute_report(const NonNegMatrix& m, const std::string& instance,
                            const RunConfig& config) {
  config.check();
  BoundsReport report;
  report.instance = instance;
  report.n = m.n();
  const auto& want = config.relaxations;
  auto selected = [&](Relaxation r) { return want.count(r) > 0; };

  if (m.n() <= config.exact_threshold) {
    const auto start = Clock::now();
    report.per_exact.method = "ryser";
    report.per_exact.value = permanent_ryser(m);
    report.timings["exact"] = seconds_since(start);
  }

  if (!support_has_perfect_matching(m).has_perfect_matching) {
    // Empty feasible set: every relaxation is -inf and no bound is checked.
    for (Relaxation r : want) {
      switch (r) {
        case Relaxation::re: report.r_e = kNegInf; break;
        case Relaxation::rc: report.log_r_c = kNegInf; break;
        case Relaxation::ro: report.r_o = kNegInf; break;
        case Relaxation::rp: report.log_r_p = kNegInf; break;
        case Relaxation::rq: report.log_r_q = kNegInf; break;
      }
    }
    report.notes.push_back("support has no perfect matching; bound checks skipped");
    return report;
  }

  if (selected(Relaxation::re)) {
    if (auto r = run_solver(report, "sinkhorn", [&] {
          return sinkhorn_solve(m, config.sinkhorn_tol, config.sinkhorn_max_iters);
        }))
      report.r_e = r->value;
  }
  if (selected(Relaxation::rc)) {
    if (auto r = run_solver(report, "dual_h", [&] {
          return minimize_dual_h(m, config.dual_tol, config.dual_max_iters);
        }))
      report.log_r_c = r->value;
  }
  if (selected(Relaxation::ro)) {
    if (auto r = run_solver(report, "bethe_mirror", [&] {
          return solve_r_o_mirror(m, config.bethe_tol, config.bethe_max_iters);
        }))
      report.r_o = r->value;
  }
  const bool poly = selected(Relaxation::rp) || selected(Relaxation::rq);
  if (poly && !m.full_support()) {
    report.notes.push_back("R_P/R_Q skipped: matrix has zero entries");
  } else if (poly) {
    const MatrixSplit split = make_split(m, SplitKind::sqrt);
    struct Wrapped {
      PolyRelaxResult value;
      SolveDiagnostics diagnostics;
    };
    if (selected(Relaxation::rp)) {
      if (auto r = run_solver(report, "poly_p", [&] {
            Wrapped w{r_p_value(m, split, config.sinkhorn_tol), {}};
            w.diagnostics.converged = true;
            w.diagnostics.final_residual = w.value.reduction_residual;
            return w;
          }))
        report.log_r_p = r->value.log_value;
    }
    if (selected(Relaxation::rq)) {
      if (auto r = run_solver(report, "poly_q", [&] {
            Wrapped w{r_q_value(m, split, config.bethe_tol), {}};
            w.diagnostics.converged = true;
            w.diagnostics.final_residual = w.value.reduction_residual;
            return w;
          }))
        report.log_r_q = r->value.log_value;
    }
  }

  const double slack = config.sandwich_slack();
  const int n = m.n();
  if (report.r_e && report.log_r_c) {
    report.sandwich_checks.push_back(
        check("theorem1_rc_eq_exp_re", std::abs(*report.log_r_c - *report.r_e), config.theorem_tol, 0.0));
  }
  if (report.r_e && report.log_r_p) {
    report.sandwich_checks.push_back(
        check("theorem2_rp_eq_exp_re", std::abs(*report.log_r_p - *report.r_e), config.theorem_tol, 0.0));
  }
  if (report.r_o && report.log_r_q) {
    report.sandwich_checks.push_back(
        check("theorem3_rq_eq_exp_ro", std::abs(*report.log_r_q - *report.r_o), config.theorem_tol, 0.0));
  }
  if (report.per_exact.value) {
    const double log_per = std::log(*report.per_exact.value);
    if (report.log_r_c) {
      report.sandwich_checks.push_back(check("per_le_rc", log_per, *report.log_r_c, slack));
      report.sandwich_checks.push_back(check("rc_le_en_per", *report.log_r_c, n + log_per, slack));
    }
    if (report.r_o) {
      report.sandwich_checks.push_back(check("exp_ro_le_per", *report.r_o, log_per, slack));
      report.sandwich_checks.push_back(
          check("per_le_2n_exp_ro", log_per, n * std::log(2.0) + *report.r_o, slack));
    }
  }
  return report;
}

Suite parse_suite(const std::string& text) {
  if (text == "duality") return Suite::duality;
  if (text == "sandwich") return Suite::sandwich;
  if (text == "theorems") return Suite::theorems;
  if (text == "heuristic_gap") return Suite::heuristic_gap;
  if (text == "oracle") return Suite::oracle;
  throw std::invalid_argument("unknown suite '" + text + "'");
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::duality: return "duality";
    case Suite::sandwich: return "sandwich";
    case Suite::theorems: return "theorems";
    case Suite::heuristic_gap: return "heuristic_gap";
    case Suite::oracle: return "oracle";
  }
  return "?";
}

VerifyOptions suite_defaults(Suite s) {
  VerifyOptions o;
  o.suite = s;
  switch (s) {
    case Suite::oracle: o.n_max = 8; o.trials = 200; break;
    case Suite::duality: o.n_max = 10; o.trials = 100; break;
    case Suite::sandwich: o.n_max = 7; o.trials = 100; break;
    case Suite::theorems: o.n_max = 6; o.trials = 30; break;
    case Suite::heuristic_gap: o.n_max = 8; o.trials = 50; break;
  }
  return o;
}

namespace {

int suite_max_n(Suite s) {
  switch (s) {
    case Suite::oracle: return kNaiveMaxN;
    case Suite::duality: return kRyserMaxN;
    case Suite::sandwich: return 7;
    case Suite::theorems: return 10;
    case Suite::heuristic_gap: return kHeuristicGapMaxN;
  }
  return 0;
}

TrialOutcome run_trial(Suite suite, int n_max, std::uint64_t seed, int index) {
  TrialOutcome out;
  out.index = index;
  const NonNegMatrix m = trial_instance(suite, n_max, seed, index, &out.instance);
  const int n = m.n();
  std::ostringstream detail;
  try {
    switch (suite) {
      case Suite::oracle: {
        const double naive = permanent_naive(m);
        const double ryser = permanent_ryser(m);
        const double rel = naive == 0.0 ? std::abs(ryser) : std::abs(ryser - naive) / naive;
        out.passed = rel <= 1e-12;
        detail << "naive=" << fmt(naive) << " rel_err=" << fmt(rel);
        break;
      }
      case Suite::duality: {
        const SinkhornResult primal = sinkhorn_solve(m);
        const DualResult dual = minimize_dual_h(m);
        const double gap = std::abs(primal.value - dual.value);
        // Weak duality at a few random beta.
        std::mt19937_64 rng(trial_seed(seed, 0xD, index));
        bool weak = true;
        for (int k = 0; k < 5; ++k) {
          Vector beta(n);
          for (int j = 0; j < n; ++j) beta(j) = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 4.0;
          weak = weak && dual_h(m, beta) >= primal.value - 1e-9;
        }
        bool sandwich = true;
        if (n <= 20) {
          const double log_per = std::log(permanent_ryser(m));
          const double excess = dual.value - log_per;
          sandwich = excess >= -1e-7 && excess <= n + 1e-7;
          detail << " log_rc-log_per=" << fmt(excess);
        }
        out.passed = gap <= 1e-6 && weak && sandwich;
        detail << " |re-log_rc|=" << fmt(gap) << (weak ? "" : " weak-duality-violated");
        break;
      }
      case Suite::sandwich: {
        const double per = permanent_ryser(m);
        const Theorem1Report t1 = verify_theorem1(m, 1e-6, per, 1e-7);
        const BetheSandwichReport bethe = verify_sandwich_r_o(m, 1e-9, 1e-7, per);
        out.passed = t1.ok() && bethe.ok() && bethe.fw_gap <= 1e-7;
        detail << "log_per=" << fmt(t1.log_per) << " log_rc=" << fmt(t1.log_r_c)
               << " r_o=" << fmt(bethe.r_o) << " fw_gap=" << fmt(bethe.fw_gap);
        break;
      }
      case Suite::theorems: {
        const std::vector<MatrixSplit> splits{
            make_split(m, SplitKind::sqrt),
            make_split(m, SplitKind::random, trial_seed(seed, 0xA, index)),
            make_split(m, SplitKind::random, trial_seed(seed, 0xB, index))};
        const Theorems23Report t23 = verify_theorems_2_3(m, splits, 1e-6);
        const DualResult dual = minimize_dual_h(m);
        const double t1 = std::abs(dual.value - t23.r_e);
        out.passed = t23.ok && t1 <= 1e-6 && t23.p_spread <= 1e-6 && t23.q_spread <= 1e-6;
        detail << "t1=" << fmt(t1) << " t2=" << fmt(t23.max_p_error) << " t3=" << fmt(t23.max_q_error)
               << " spread=" << fmt(std::max(t23.p_spread, t23.q_spread));
        break;
      }
      case Suite::heuristic_gap: {
        const HeuristicGap gap = heuristic_gap_report(m);
        out.passed = gap.kl_tree_product >= 0.0 && gap.kl_odd_ratio >= 0.0;
        out.metrics["kl_tree"] = gap.kl_tree_product;
        out.metrics["kl_odd"] = gap.kl_odd_ratio;
        detail << "matchings=" << gap.matchings << " kl_tree=" << fmt(gap.kl_tree_product)
               << " kl_odd=" << fmt(gap.kl_odd_ratio);
        break;
      }
    }
  } catch (const std::exception& e) {
    out.passed = false;
    detail << "error: " << e.what();
  }
  out.detail = detail.str();
  return out;
}

std::string aggregate_line(Suite suite, const std::vector<TrialOutcome>& outcomes) {
  if (suite != Suite::heuristic_gap) return {};
  // Mean KL per form; infinite values (undefined odd-ratio form) are excluded.
  std::ostringstream os;
  for (const char* key : {"kl_tree", "kl_odd"}) {
    double sum = 0.0;
    int count = 0;
    for (const auto& o : outcomes) {
      const auto it = o.metrics.find(key);
      if (it != o.metrics.end() && std::isfinite(it->second)) {
        sum += it->second;
        ++count;
      }
    }
    os << "mean_" << key << "=" << fmt(count ? sum / count : 0.0) << " (" << count << " finite) ";
  }
  return os.str();
}

}  // namespace

NonNegMatrix trial_instance(Suite suite, int n_max, std::uint64_t seed, int index,
                            std::string* descriptor) {
  const int n = 2 + index % std::max(1, n_max - 1);
  const std::uint64_t s = trial_seed(seed, static_cast<std::uint64_t>(suite) + 1, index);
  GeneratorSpec spec{GeneratorKind::uniform, n, s, 0.5};
  switch (suite) {
    case Suite::theorems:
      spec.kind = index % 2 ? GeneratorKind::exponential : GeneratorKind::uniform;
      break;
    case Suite::duality:
    case Suite::sandwich:
    case Suite::oracle:
    case Suite::heuristic_gap:
      switch (index % 4) {
        case 0: spec.kind = GeneratorKind::uniform; break;
        case 1: spec.kind = GeneratorKind::exponential; break;
        case 2: spec.kind = GeneratorKind::sparse; spec.density = 0.6; break;
        case 3: spec.kind = GeneratorKind::uniform; break;
      }
      break;
  }
  if (descriptor) *descriptor = spec.to_string();
  return generate(spec);
}

VerifySummary run_verify(VerifyOptions options) {
  const VerifyOptions defaults = suite_defaults(options.suite);
  if (options.n_max == 0) options.n_max = defaults.n_max;
  if (options.trials == 0) options.trials = defaults.trials;
  if (options.n_max < 2 || options.n_max > suite_max_n(options.suite)) {
    throw std::invalid_argument("n_max for suite " + to_string(options.suite) + " must lie in [2, " +
                                std::to_string(suite_max_n(options.suite)) + "]");
  }
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");

  VerifySummary summary;
  summary.suite = options.suite;
  summary.n_max = options.n_max;
  summary.trials = options.trials;
  summary.outcomes.resize(static_cast<std::size_t>(options.trials));
  parallel_for(options.trials, resolve_threads(options.threads), [&](int i) {
    summary.outcomes[static_cast<std::size_t>(i)] =
        run_trial(options.suite, options.n_max, options.seed, i);
  });
  summary.passed = static_cast<int>(std::count_if(summary.outcomes.begin(), summary.outcomes.end(),
                                                  [](const TrialOutcome& o) { return o.passed; }));
  summary.aggregate = aggregate_line(options.suite, summary.outcomes);
  return summary;
}

std::vector<TableRow> run_table(const std::vector<int>& n_list, int trials, std::uint64_t seed,
                                const RunConfig& config, int threads) {
  config.check();
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  for (int n : n_list) {
    if (n < 1 || n > config.exact_threshold) {
      throw std::invalid_argument("table: n = " + std::to_string(n) + " outside [1, exact_threshold]");
    }
  }

  struct Ratios {
    double rc = 0.0;
    double ro = 0.0;
  };
  auto ratios = [&](const NonNegMatrix& m) {
    const double log_per = std::log(permanent_ryser(m));
    const double log_rc = minimize_dual_h(m, config.dual_tol, config.dual_max_iters).value;
    const double r_o = solve_r_o_mirror(m, config.bethe_tol, config.bethe_max_iters).value;
    const int n = m.n();
    return Ratios{(log_rc - log_per) / n, (log_per - r_o) / (n * std::log(2.0))};
  };
  auto fixed_row = [&](const std::string& family, const NonNegMatrix& m) {
    const Ratios r = ratios(m);
    return TableRow{family, m.n(), 1, r.rc, r.rc, r.ro, r.ro};
  };

  std::vector<TableRow> rows;
  for (int n : n_list) {
    std::vector<Ratios> samples(static_cast<std::size_t>(trials));
    parallel_for(trials, resolve_threads(threads), [&](int t) {
      const auto s = trial_seed(seed, 0x7, n * 100003 + t);
      samples[static_cast<std::size_t>(t)] = ratios(generate(GeneratorKind::uniform, n, s));
    });
    TableRow row{"random", n, trials, 0.0, -std::numeric_limits<double>::infinity(), 0.0,
                 -std::numeric_limits<double>::infinity()};
    for (const Ratios& r : samples) {
      row.mean_rc_ratio += r.rc / trials;
      row.mean_ro_ratio += r.ro / trials;
      row.max_rc_ratio = std::max(row.max_rc_ratio, r.rc);
      row.max_ro_ratio = std::max(row.max_ro_ratio, r.ro);
    }
    rows.push_back(row);
    rows.push_back(fixed_row("ones", ones_matrix(n)));
    rows.push_back(fixed_row("identity", identity_matrix(n)));
  }
  return rows;
}

void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "family,n,trials,mean_rc_ratio,max_rc_ratio,mean_ro_ratio,max_ro_ratio\n";
  const auto old = out.precision(17);
  for (const auto& r : rows) {
    out << r.family << ',' << r.n << ',' << r.trials << ',' << r.mean_rc_ratio << ','
        << r.max_rc_ratio << ',' << r.mean_ro_ratio << ',' << r.max_ro_ratio << '\n';
  }
  out.precision(old);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PERMABOUND_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace permabound
