// permabound: exact permanents and convex relaxation bounds from the command line.
//
//   permabound compute --input a.csv | --gen uniform:6:7 [--relaxations re,rc,ro,rp,rq] ...
//   permabound verify  --suite duality|sandwich|theorems|heuristic_gap|oracle|all ...
//   permabound table   --n 2,3,4,5,6 --trials 50 --seed 1 --out table.csv

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "permabound/harness.hpp"
#include "permabound/matrix_io.hpp"
#include "permabound/report.hpp"

namespace {

using namespace permabound;

struct ComputeArgs {
  std::string input;
  std::string gen;
  std::string relaxations = "re,rc,ro";
  std::string out;
  std::string format = "json";
  RunConfig config;
};

struct VerifyArgs {
  std::string suite;
  int n_max = 0;
  int trials = 0;
  std::uint64_t seed = 1;
};

struct TableArgs {
  std::vector<int> n_list{2, 3, 4, 5, 6};
  int trials = 50;
  std::uint64_t seed = 1;
  std::string out;
};

int write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return kExitUsage;
  }
  out << text;
  return kExitOk;
}

int run_compute(ComputeArgs& args) {
  NonNegMatrix m = [&] {
    if (!args.input.empty()) return load_matrix(args.input);
    return generate(parse_generator_spec(args.gen));
  }();
  args.config.relaxations = parse_relaxations(args.relaxations);
  args.config.format = args.format == "csv" ? OutputFormat::csv : OutputFormat::json;
  args.config.check();

  const std::string descriptor = args.input.empty() ? "gen:" + args.gen : args.input;
  const BoundsReport report = compute_report(m, descriptor, args.config);
  const std::string text = args.config.format == OutputFormat::csv ? report_to_csv(report)
                                                                   : report_to_json(report);
  const int io = write_output(args.out, text);
  if (io != kExitOk) return io;
  for (const auto& [name, rec] : report.solvers) {
    if (!rec.error.empty()) std::cerr << name << ": " << rec.error << "\n";
  }
  for (const auto& c : report.sandwich_checks) {
    if (!c.holds) std::cerr << "violated: " << c.name << " (" << c.lhs << " > " << c.rhs << " + " << c.slack << ")\n";
  }
  return report.exit_code();
}

int run_one_suite(Suite suite, const VerifyArgs& args) {
  VerifyOptions options;
  options.suite = suite;
  options.n_max = args.n_max;
  options.trials = args.trials;
  options.seed = args.seed;
  const VerifySummary summary = run_verify(options);
  for (const auto& o : summary.outcomes) {
    std::cout << to_string(suite) << " #" << o.index << " " << o.instance << " "
              << (o.passed ? "PASS" : "FAIL") << " " << o.detail << "\n";
  }
  std::cout << to_string(suite) << ": " << summary.passed << "/" << summary.trials
            << " passed (n_max=" << summary.n_max << ", seed=" << args.seed << ")";
  if (!summary.aggregate.empty()) std::cout << "  " << summary.aggregate;
  std::cout << "\n";
  return summary.ok() ? kExitOk : kExitViolation;
}

int run_verify_cmd(const VerifyArgs& args) {
  if (args.suite == "all") {
    if (args.n_max != 0) throw std::invalid_argument("--n-max cannot be combined with --suite all");
    int code = kExitOk;
    for (Suite s : {Suite::oracle, Suite::duality, Suite::sandwich, Suite::theorems,
                    Suite::heuristic_gap}) {
      if (run_one_suite(s, args) != kExitOk) code = kExitViolation;
    }
    return code;
  }
  return run_one_suite(parse_suite(args.suite), args);
}

int run_table_cmd(const TableArgs& args) {
  const auto rows = run_table(args.n_list, args.trials, args.seed);
  std::ostringstream os;
  write_table_csv(os, rows);
  bool within = true;
  for (const auto& r : rows) within = within && r.max_rc_ratio <= 1.0 && r.max_ro_ratio <= 1.0;
  const int io = write_output(args.out, os.str());
  if (io != kExitOk) return io;
  return within ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact permanents and convex relaxation bounds for non-negative matrices"};
  app.require_subcommand(1);

  ComputeArgs compute;
  auto* c = app.add_subcommand("compute", "Compute bounds for one matrix");
  auto* input = c->add_option("--input", compute.input, "Matrix file (.csv or .json)");
  auto* gen = c->add_option("--gen", compute.gen, "Generator spec kind:n:seed");
  input->excludes(gen);
  c->add_option("--relaxations", compute.relaxations, "Comma list of re,rc,ro,rp,rq");
  c->add_option("--exact-threshold", compute.config.exact_threshold, "Largest n for the exact permanent");
  c->add_option("--tol-sinkhorn", compute.config.sinkhorn_tol);
  c->add_option("--tol-dual", compute.config.dual_tol);
  c->add_option("--tol-bethe", compute.config.bethe_tol);
  c->add_option("--out", compute.out, "Output path (default stdout)");
  c->add_option("--format", compute.format)->check(CLI::IsMember({"json", "csv"}));

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run a property suite over generated instances");
  v->add_option("--suite", verify.suite)
      ->required()
      ->check(CLI::IsMember({"duality", "sandwich", "theorems", "heuristic_gap", "oracle", "all"}));
  v->add_option("--n-max", verify.n_max, "Largest dimension (default: suite default)");
  v->add_option("--trials", verify.trials, "Number of instances (default: suite default)");
  v->add_option("--seed", verify.seed);

  TableArgs table;
  auto* t = app.add_subcommand("table", "Approximation-factor table against the e^n and 2^n ceilings");
  t->add_option("--n", table.n_list)->delimiter(',');
  t->add_option("--trials", table.trials);
  t->add_option("--seed", table.seed);
  t->add_option("--out", table.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c->parsed()) {
      if (compute.input.empty() && compute.gen.empty()) {
        std::cerr << "compute: one of --input or --gen is required\n";
        return kExitUsage;
      }
      return run_compute(compute);
    }
    if (v->parsed()) return run_verify_cmd(verify);
    if (t->parsed()) return run_table_cmd(table);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
