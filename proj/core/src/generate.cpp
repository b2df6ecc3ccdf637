#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "permabound/matrix.hpp"

namespace permabound {
namespace {

// Doubles are built from raw engine output so instances are bit-identical
// across standard libraries (std distributions are implementation-defined).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double open_unit() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

const char* kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::uniform: return "uniform";
    case GeneratorKind::exponential: return "exponential";
    case GeneratorKind::sparse: return "sparse";
    case GeneratorKind::block: return "block";
    case GeneratorKind::binary: return "binary";
  }
  return "?";
}

Matrix draw(GeneratorKind kind, int n, double density, Stream& rng) {
  Matrix a = Matrix::Zero(n, n);
  switch (kind) {
    case GeneratorKind::uniform:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.open_unit();
      break;
    case GeneratorKind::exponential:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = -std::log(rng.open_unit());
      break;
    case GeneratorKind::sparse:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double keep = rng.open_unit();
          const double value = rng.open_unit();
          if (keep < density) a(i, j) = value;
        }
      break;
    case GeneratorKind::block: {
      // Diagonal blocks of size 3 (the last one may be smaller).
      for (int start = 0; start < n; start += 3) {
        const int stop = std::min(n, start + 3);
        for (int i = start; i < stop; ++i)
          for (int j = start; j < stop; ++j) a(i, j) = rng.open_unit();
      }
      break;
    }
    case GeneratorKind::binary:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.open_unit() < 0.5 ? 1.0 : 0.0;
      break;
  }
  return a;
}

}  // namespace

std::string GeneratorSpec::to_string() const {
  std::ostringstream os;
  os << kind_name(kind);
  if (kind == GeneratorKind::sparse) os << '(' << density << ')';
  os << ':' << n << ':' << seed;
  return os.str();
}

GeneratorSpec parse_generator_spec(const std::string& text) {
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? first : text.find(':', first + 1);
  if (second == std::string::npos || text.find(':', second + 1) != std::string::npos) {
    throw std::invalid_argument("generator spec must be kind:n:seed, got '" + text + "'");
  }
  std::string kind = text.substr(0, first);
  GeneratorSpec spec;

  if (kind.rfind("sparse", 0) == 0) {
    spec.kind = GeneratorKind::sparse;
    std::string rest = kind.substr(6);
    if (!rest.empty()) {
      if (rest.front() == '(' && rest.back() == ')') {
        rest = rest.substr(1, rest.size() - 2);
      } else if (rest.front() == '=') {
        rest = rest.substr(1);
      } else {
        throw std::invalid_argument("bad sparse density '" + kind + "'");
      }
      try {
        std::size_t used = 0;
        spec.density = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(rest);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad sparse density '" + kind + "'");
      }
    }
  } else if (kind == "uniform") {
    spec.kind = GeneratorKind::uniform;
  } else if (kind == "exponential") {
    spec.kind = GeneratorKind::exponential;
  } else if (kind == "block") {
    spec.kind = GeneratorKind::block;
  } else if (kind == "binary") {
    spec.kind = GeneratorKind::binary;
  } else {
    throw std::invalid_argument("unknown generator kind '" + kind + "'");
  }

  try {
    const std::string n_text = text.substr(first + 1, second - first - 1);
    const std::string seed_text = text.substr(second + 1);
    std::size_t used = 0;
    spec.n = std::stoi(n_text, &used);
    if (used != n_text.size()) throw std::invalid_argument(n_text);
    spec.seed = std::stoull(seed_text, &used);
    if (used != seed_text.size()) throw std::invalid_argument(seed_text);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad n or seed in generator spec '" + text + "'");
  }
  if (spec.n < 1) throw std::invalid_argument("generator requires n >= 1");
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw std::invalid_argument("sparse density must lie in (0, 1]");
  }
  return spec;
}

NonNegMatrix generate(const GeneratorSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("generator requires n >= 1");
  if (spec.kind == GeneratorKind::sparse && !(spec.density > 0.0 && spec.density <= 1.0)) {
    throw std::invalid_argument("sparse density must lie in (0, 1]");
  }
  Stream rng(spec.seed);
  const bool needs_matching =
      spec.kind == GeneratorKind::sparse || spec.kind == GeneratorKind::binary;
  for (int attempt = 0; attempt < kGeneratorRetries; ++attempt) {
    NonNegMatrix m = validate(draw(spec.kind, spec.n, spec.density, rng));
    if (!needs_matching || support_has_perfect_matching(m).has_perfect_matching) return m;
  }
  throw std::runtime_error("generator retry budget exhausted for " + spec.to_string());
}

NonNegMatrix generate(GeneratorKind kind, int n, std::uint64_t seed, double density) {
  return generate(GeneratorSpec{kind, n, seed, density});
}

}  // namespace permabound
