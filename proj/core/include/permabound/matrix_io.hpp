#pragma once

#include <iosfwd>
#include <string>

#include "permabound/matrix.hpp"

namespace permabound {

// Matrix files come in two forms:
//   CSV:  one row per line, comma-separated decimals ('#' starts a comment line)
//   JSON: {"n": <int>, "entries": [[...], ...]}
// Both readers reject ragged rows and hand the result to validate().

NonNegMatrix read_matrix_csv(std::istream& in);
NonNegMatrix read_matrix_json(std::istream& in);

/// Dispatches on extension: ".json" is JSON, anything else CSV.
NonNegMatrix load_matrix(const std::string& path);

void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_json(std::ostream& out, const Matrix& m);

}  // namespace permabound
