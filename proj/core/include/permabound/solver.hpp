#pragma once

#include <stdexcept>
#include <string>

namespace permabound {

struct SolveDiagnostics {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
};

/// Raised when an iterative solver exhausts its budget; carries the last state.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, SolveDiagnostics diagnostics)
      : std::runtime_error(what), diagnostics_(diagnostics) {}
  const SolveDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  SolveDiagnostics diagnostics_;
};

/// The support admits no perfect matching: the feasible set is empty and the
/// dual is unbounded below.
class InfeasibleSupport : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace permabound
