#include "permabound/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace permabound {

using Json = nlohmann::ordered_json;

std::set<Relaxation> parse_relaxations(const std::string& text) {
  std::set<Relaxation> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "re") out.insert(Relaxation::re);
    else if (item == "rc") out.insert(Relaxation::rc);
    else if (item == "ro") out.insert(Relaxation::ro);
    else if (item == "rp") out.insert(Relaxation::rp);
    else if (item == "rq") out.insert(Relaxation::rq);
    else throw std::invalid_argument("unknown relaxation '" + item + "'");
  }
  if (out.empty()) throw std::invalid_argument("no relaxations selected");
  return out;
}

std::string to_string(Relaxation r) {
  switch (r) {
    case Relaxation::re: return "re";
    case Relaxation::rc: return "rc";
    case Relaxation::ro: return "ro";
    case Relaxation::rp: return "rp";
    case Relaxation::rq: return "rq";
  }
  return "?";
}

void RunConfig::check() const {
  for (double t : {sinkhorn_tol, dual_tol, bethe_tol, theorem_tol}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("tolerances must be positive");
  }
  if (sinkhorn_max_iters < 1 || dual_max_iters < 1 || bethe_max_iters < 1) {
    throw std::invalid_argument("iteration limits must be positive");
  }
  if (exact_threshold < 0 || exact_threshold > 30) {
    throw std::invalid_argument("exact_threshold must lie in [0, 30]");
  }
}

double RunConfig::sandwich_slack() const {
  return 100.0 * std::min({sinkhorn_tol, dual_tol, bethe_tol});
}

bool BoundsReport::solver_failed() const {
  return std::any_of(solvers.begin(), solvers.end(),
                     [](const auto& kv) { return !kv.second.error.empty(); });
}

bool BoundsReport::check_failed() const {
  return std::any_of(sandwich_checks.begin(), sandwich_checks.end(),
                     [](const SandwichCheck& c) { return !c.holds; });
}

int BoundsReport::exit_code() const {
  if (check_failed()) return kExitViolation;
  if (solver_failed()) return kExitSolver;
  return kExitOk;
}

namespace {

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double as_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("report: expected a number, got " + j.dump());
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return as_number(obj[key]);
}

Json to_json(const BoundsReport& r, bool include_timings) {
  Json j;
  j["instance"] = r.instance;
  j["n"] = r.n;
  Json per;
  per["method"] = r.per_exact.method;
  per["value"] = optional_number(r.per_exact.value);
  per["log"] = r.per_exact.value ? number(std::log(*r.per_exact.value)) : Json(nullptr);
  j["per_exact"] = per;

  Json rel = Json::object();
  rel["r_e"] = optional_number(r.r_e);
  rel["log_r_c"] = optional_number(r.log_r_c);
  rel["r_o"] = optional_number(r.r_o);
  rel["log_r_p"] = optional_number(r.log_r_p);
  rel["log_r_q"] = optional_number(r.log_r_q);
  j["relaxations"] = rel;

  Json checks = Json::array();
  for (const auto& c : r.sandwich_checks) {
    checks.push_back(Json{{"name", c.name},
                          {"lhs", number(c.lhs)},
                          {"rhs", number(c.rhs)},
                          {"slack", number(c.slack)},
                          {"holds", c.holds}});
  }
  j["sandwich_checks"] = checks;

  Json solvers = Json::object();
  for (const auto& [name, rec] : r.solvers) {
    solvers[name] = Json{{"iterations", rec.diagnostics.iterations},
                         {"final_residual", number(rec.diagnostics.final_residual)},
                         {"converged", rec.diagnostics.converged},
                         {"error", rec.error}};
  }
  j["diagnostics"] = solvers;
  j["notes"] = r.notes;
  j["exit_code"] = r.exit_code();
  if (include_timings) {
    Json t = Json::object();
    for (const auto& [name, secs] : r.timings) t[name] = secs;
    j["timings"] = t;
  }
  return j;
}

BoundsReport from_json(const Json& j) {
  BoundsReport r;
  r.instance = j.at("instance").get<std::string>();
  r.n = j.at("n").get<int>();
  const Json& per = j.at("per_exact");
  r.per_exact.method = per.at("method").get<std::string>();
  r.per_exact.value = read_optional(per, "value");

  const Json& rel = j.at("relaxations");
  r.r_e = read_optional(rel, "r_e");
  r.log_r_c = read_optional(rel, "log_r_c");
  r.r_o = read_optional(rel, "r_o");
  r.log_r_p = read_optional(rel, "log_r_p");
  r.log_r_q = read_optional(rel, "log_r_q");

  // Empty containers flatten to null.
  if (j.contains("sandwich_checks") && j["sandwich_checks"].is_array()) {
    for (const auto& c : j["sandwich_checks"]) {
      r.sandwich_checks.push_back(SandwichCheck{c.at("name").get<std::string>(),
                                                as_number(c.at("lhs")), as_number(c.at("rhs")),
                                                as_number(c.at("slack")),
                                                c.at("holds").get<bool>()});
    }
  }
  if (j.contains("diagnostics") && j["diagnostics"].is_object()) {
    for (const auto& [name, d] : j["diagnostics"].items()) {
      SolverRecord rec;
      rec.diagnostics.iterations = d.at("iterations").get<int>();
      rec.diagnostics.final_residual = as_number(d.at("final_residual"));
      rec.diagnostics.converged = d.at("converged").get<bool>();
      rec.error = d.at("error").get<std::string>();
      r.solvers[name] = rec;
    }
  }
  if (j.contains("notes") && j["notes"].is_array()) {
    for (const auto& s : j["notes"]) r.notes.push_back(s.get<std::string>());
  }
  if (j.contains("timings") && j["timings"].is_object()) {
    for (const auto& [name, v] : j["timings"].items()) r.timings[name] = as_number(v);
  }
  return r;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// Splits "key,value" where value may be a quoted string.
std::pair<std::string, std::string> split_csv_line(const std::string& line) {
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("report CSV: missing comma");
  return {line.substr(0, comma), line.substr(comma + 1)};
}

Json parse_csv_value(const std::string& v) {
  if (v.empty()) return nullptr;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw std::invalid_argument("report CSV: bad quoting");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      out += v[i];
      if (v[i] == '"') ++i;
    }
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  return Json::parse(v);
}

}  // namespace

std::string report_to_json(const BoundsReport& report, bool include_timings) {
  return to_json(report, include_timings).dump(2) + "\n";
}

BoundsReport report_from_json(const std::string& text) {
  try {
    return from_json(Json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report JSON: ") + e.what());
  }
}

std::string report_to_csv(const BoundsReport& report, bool include_timings) {
  const Json flat = to_json(report, include_timings).flatten();
  std::string out = "key,value\n";
  for (const auto& [key, value] : flat.items()) {
    out += key;
    out += ',';
    if (value.is_string()) out += csv_quote(value.get<std::string>());
    else if (!value.is_null()) out += value.dump();
    out += '\n';
  }
  return out;
}

BoundsReport report_from_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "key,value") {
    throw std::invalid_argument("report CSV: missing header");
  }
  Json flat = Json::object();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto [key, value] = split_csv_line(line);
    flat[key] = parse_csv_value(value);
  }
  try {
    return from_json(flat.unflatten());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report CSV: ") + e.what());
  }
}

}  // namespace permabound
