#include "permabound/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace permabound {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, int line) {
  const std::string t = trim(field);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("line " + std::to_string(line) + ": not a number: '" + t + "'");
}

}  // namespace

NonNegMatrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    std::stringstream fields(t);
    std::string field;
    while (std::getline(fields, field, ',')) row.push_back(parse_number(field, line_no));
    if (t.back() == ',') throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing comma");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  return validate(rows);
}

NonNegMatrix read_matrix_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed matrix JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw std::invalid_argument("matrix JSON needs an \"entries\" array");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : doc["entries"]) {
    if (!r.is_array()) throw std::invalid_argument("matrix JSON rows must be arrays");
    std::vector<double> row;
    for (const auto& v : r) {
      if (!v.is_number()) throw std::invalid_argument("matrix JSON entries must be numbers");
      row.push_back(v.get<double>());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("matrix JSON has ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (doc.contains("n")) {
    if (!doc["n"].is_number_integer() || doc["n"].get<long long>() != static_cast<long long>(rows.size())) {
      throw std::invalid_argument("matrix JSON \"n\" disagrees with entries");
    }
  }
  return validate(rows);
}

NonNegMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? read_matrix_json(in) : read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_matrix_json(std::ostream& out, const Matrix& m) {
  nlohmann::ordered_json doc;
  doc["n"] = m.rows();
  auto& entries = doc["entries"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    entries.push_back(std::move(row));
  }
  out << doc.dump() << '\n';
}

}  // namespace permabound
