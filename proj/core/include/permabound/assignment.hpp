#pragma once

#include "permabound/matrix.hpp"

namespace permabound {

struct AssignmentSolution {
  Permutation sigma;
  double value = 0.0;
};

/// Maximum-weight perfect assignment (Hungarian method with potentials,
/// O(n^3)). Cells equal to -infinity are forbidden. Throws
/// std::domain_error when no assignment avoids the forbidden cells and
/// std::invalid_argument for NaN or +infinity costs.
AssignmentSolution assignment_lmo(const Matrix& cost);

}  // namespace permabound
