#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "averaging.hpp"
#include "convexity_modulus.hpp"
#include "error.hpp"
#include "field_analysis.hpp"
#include "field_grid.hpp"
#include "kinetic.hpp"
#include "norm_spec.hpp"
#include "vortex_field.hpp"

namespace normfield::io {

using json = nlohmann::ordered_json;

/// Malformed input files or configuration (exit code 2 in the CLI).
class InputError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError("norm spec: \"" + path + "\" must be a number");
  return j.get<double>();
}

}  // namespace detail

inline NormSpec norm_spec_from_json(const json& j, const std::string& path = "") {
  if (!j.is_object()) throw InputError("norm spec: " + (path.empty() ? std::string("top level") : "\"" + path + "\"") +
                                       " must be an object");
  if (!j.contains("kind")) throw InputError("norm spec: missing key \"" + detail::join(path, "kind") + "\"");
  if (!j["kind"].is_string()) throw InputError("norm spec: \"" + detail::join(path, "kind") + "\" must be a string");
  const std::string kind = j["kind"].get<std::string>();
  std::set<std::string> allowed{"kind"};
  NormSpec s;
  if (kind == "euclidean") {
    s = NormSpec::euclidean();
  } else if (kind == "lp") {
    allowed.insert("p");
    if (!j.contains("p")) throw InputError("norm spec: missing key \"" + detail::join(path, "p") + "\"");
    const json& p = j["p"];
    double value = 0.0;
    if (p.is_string() && (p.get<std::string>() == "inf" || p.get<std::string>() == "infinity"))
      value = INFINITY;
    else
      value = detail::number_at(p, detail::join(path, "p"));
    s = NormSpec::lp(value);
  } else if (kind == "polygon") {
    allowed.insert("vertices");
    const std::string vp = detail::join(path, "vertices");
    if (!j.contains("vertices") || !j["vertices"].is_array())
      throw InputError("norm spec: \"" + vp + "\" must be an array of [x, y] pairs");
    std::vector<Vec2> vs;
    for (std::size_t k = 0; k < j["vertices"].size(); ++k) {
      const json& v = j["vertices"][k];
      const std::string ip = vp + "[" + std::to_string(k) + "]";
      if (!v.is_array() || v.size() != 2) throw InputError("norm spec: \"" + ip + "\" must be an [x, y] pair");
      vs.push_back({detail::number_at(v[0], ip + "[0]"), detail::number_at(v[1], ip + "[1]")});
    }
    s = NormSpec::polygon(std::move(vs));
  } else if (kind == "sum") {
    allowed.insert("terms");
    const std::string tp = detail::join(path, "terms");
    if (!j.contains("terms") || !j["terms"].is_array()) throw InputError("norm spec: \"" + tp + "\" must be an array");
    std::vector<NormSpec> terms;
    for (std::size_t k = 0; k < j["terms"].size(); ++k)
      terms.push_back(norm_spec_from_json(j["terms"][k], tp + "[" + std::to_string(k) + "]"));
    s = NormSpec::sum(std::move(terms));
  } else if (kind == "dual" || kind == "scaled") {
    allowed.insert("of");
    if (!j.contains("of")) throw InputError("norm spec: missing key \"" + detail::join(path, "of") + "\"");
    NormSpec of = norm_spec_from_json(j["of"], detail::join(path, "of"));
    if (kind == "dual") {
      s = NormSpec::dual(std::move(of));
    } else {
      allowed.insert("factor");
      if (!j.contains("factor")) throw InputError("norm spec: missing key \"" + detail::join(path, "factor") + "\"");
      s = NormSpec::scaled(detail::number_at(j["factor"], detail::join(path, "factor")), std::move(of));
    }
  } else {
    throw InputError("norm spec: unknown kind \"" + kind + "\" at key \"" + detail::join(path, "kind") + "\"");
  }
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw InputError("norm spec: unknown key \"" + detail::join(path, item.key()) + "\" for kind \"" + kind + "\"");
  if (path.empty()) {
    try {
      validate(s);
    } catch (const InputError&) {
      throw;
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  return s;
}

inline json to_json(const NormSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case NormKind::euclidean:
      break;
    case NormKind::lp:
      if (std::isinf(s.p))
        j["p"] = "inf";
      else
        j["p"] = s.p;
      break;
    case NormKind::polygon: {
      json vs = json::array();
      for (Vec2 v : s.vertices) vs.push_back({v.x, v.y});
      j["vertices"] = vs;
      break;
    }
    case NormKind::sum: {
      json ts = json::array();
      for (const auto& t : s.terms) ts.push_back(to_json(t));
      j["terms"] = ts;
      break;
    }
    case NormKind::dual:
      j["of"] = to_json(s.of());
      break;
    case NormKind::scaled:
      j["factor"] = s.factor;
      j["of"] = to_json(s.of());
      break;
  }
  return j;
}

/// Parses JSON text; syntax errors report line and column.
inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < upto; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    const auto colon = msg.find("syntax error");
    if (colon != std::string::npos) msg = msg.substr(colon);
    throw InputError(what + ": parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": " + msg);
  }
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A file path or an inline JSON document.
inline NormSpec parse_norm_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return norm_spec_from_json(parse_json_text(arg, "norm"));
  if (!std::filesystem::exists(arg)) throw InputError("norm: no such file \"" + arg + "\" (and not inline JSON)");
  return norm_spec_from_json(parse_json_text(read_text(arg), arg));
}

// ----------------------------------------------------------------------------
// Number formatting and CSV

inline std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << text;
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline std::string curve_csv(const ModulusCurve& c) {
  std::string s = "delta,value\n";
  for (std::size_t k = 0; k < c.deltas.size(); ++k) s += fmt(c.deltas[k], 12) + "," + fmt(c.values[k], 12) + "\n";
  return s;
}

inline std::string trace_csv(const TraceResult& t) {
  std::string s = "x2,mx,my\n";
  for (std::size_t k = 0; k < t.x2.size(); ++k)
    s += fmt(t.x2[k]) + "," + fmt(t.values[k].x) + "," + fmt(t.values[k].y) + "\n";
  return s;
}

/// Sidecar holding the grid geometry: "<stem>.grid.json" next to the CSV.
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".grid.json");
  return p;
}

inline void write_field(const std::filesystem::path& csv, const FieldGrid& g) {
  std::string s = "x,y,mx,my\n";
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!g.inside(i, j)) continue;
      const Vec2 c = g.center(i, j), m = g.at(i, j);
      s += fmt(c.x) + "," + fmt(c.y) + "," + fmt(m.x) + "," + fmt(m.y) + "\n";
    }
  write_text(csv, s);
  json side;
  side["origin"] = {g.origin.x, g.origin.y};
  side["h"] = g.h;
  side["nx"] = g.nx;
  side["ny"] = g.ny;
  write_json(sidecar_path(csv), side);
}

/// Reads a field CSV and its sidecar. Rows must sit on cell centers; absent
/// cells are masked. A row whose value is not of unit norm is reported by
/// its line number.
inline FieldGrid read_field(const std::filesystem::path& csv, const PlanarNorm& norm, double field_tol = 1e-6) {
  const auto side_path = sidecar_path(csv);
  if (!std::filesystem::exists(side_path)) throw InputError("missing grid sidecar " + side_path.string());
  const json side = parse_json_text(read_text(side_path), side_path.string());
  for (const char* key : {"origin", "h", "nx", "ny"})
    if (!side.is_object() || !side.contains(key)) throw InputError(side_path.string() + ": missing key \"" + key + "\"");
  for (const auto& item : side.items())
    if (item.key() != "origin" && item.key() != "h" && item.key() != "nx" && item.key() != "ny")
      throw InputError(side_path.string() + ": unknown key \"" + item.key() + "\"");
  FieldGrid g;
  g.norm = norm;
  try {
    g.origin = {side["origin"].at(0).get<double>(), side["origin"].at(1).get<double>()};
    g.h = side["h"].get<double>();
    g.nx = side["nx"].get<std::size_t>();
    g.ny = side["ny"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError(side_path.string() + ": " + e.what());
  }
  if (!(g.h > 0.0) || g.nx < 3 || g.ny < 3) throw InputError(side_path.string() + ": invalid grid geometry");
  g.values.assign(g.nx * g.ny, Vec2{});
  g.mask.assign(g.nx * g.ny, 0);

  std::ifstream in(csv);
  if (!in) throw InputError("cannot open " + csv.string());
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw InputError(csv.string() + ": empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,mx,my") throw InputError(csv.string() + ": header must be x,y,mx,my");
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = csv.string() + " line " + std::to_string(lineno);
    double v[4];
    std::stringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 4) throw InputError(where + ": expected 4 columns");
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(where + ": not a number: \"" + cell + "\"");
      }
      ++k;
    }
    if (k != 4) throw InputError(where + ": expected 4 columns");
    const double fi = (v[0] - g.origin.x) / g.h, fj = (v[1] - g.origin.y) / g.h;
    const double ri = std::round(fi), rj = std::round(fj);
    if (std::fabs(fi - ri) > 1e-6 || std::fabs(fj - rj) > 1e-6 || ri < 0 || rj < 0 ||
        ri >= static_cast<double>(g.nx) || rj >= static_cast<double>(g.ny))
      throw InputError(where + ": point is not a cell center of the grid");
    const auto i = static_cast<std::size_t>(ri), j = static_cast<std::size_t>(rj);
    if (g.mask[g.index(i, j)]) throw InputError(where + ": duplicate cell");
    const Vec2 m{v[2], v[3]};
    const double defect = std::fabs(norm(m) - 1.0);
    if (!(defect <= field_tol))
      throw InputError(where + ": field value is not of unit norm (|norm - 1| = " + fmt(defect, 3) + ")");
    g.values[g.index(i, j)] = m;
    g.mask[g.index(i, j)] = 1;
  }
  try {
    validate_grid(g, field_tol);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(csv.string() + ": " + e.what());
  }
  return g;
}

// ----------------------------------------------------------------------------
// Reports

inline json vec(Vec2 v) { return json::array({v.x, v.y}); }

inline json to_json(const PowerTypeFit& f) {
  return {{"p_hat", f.p_hat}, {"K_hat", f.K_hat}, {"r_squared", f.r_squared}, {"delta_min", f.delta_min},
          {"delta_max", f.delta_max}, {"n_points", f.n_points}};
}

inline json to_json(const HolderEstimate& e) {
  return {{"exponent", e.exponent}, {"constant", e.constant}, {"r_in", e.r_in},     {"r_out", e.r_out},
          {"r_squared", e.r_squared}, {"seed", e.seed},         {"saturated", e.saturated}};
}

inline json to_json(const SandwichReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"delta", x.delta},
                    {"omega", x.omega},
                    {"rho_half_delta", x.rho_half},
                    {"rho_delta", x.rho_full},
                    {"lower_margin", x.lower_margin},
                    {"upper_margin", x.upper_margin}});
  return {{"slack", r.slack}, {"passed", r.passed}, {"rows", rows}};
}

inline json to_json(const NordlanderReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"delta", x.delta}, {"omega", x.omega}, {"omega_euclidean", x.omega_euclidean}, {"margin", x.margin}});
  return {{"slack", r.slack}, {"passed", r.passed}, {"rows", rows}};
}

inline json to_json(const ReconstructionReport& r) {
  json pts = json::array();
  for (std::size_t k = 0; k < r.points.size(); ++k) pts.push_back({{"x", vec(r.points[k])}, {"residual", r.residuals[k]}});
  return {{"n_samples", r.n_samples}, {"quad_tol", r.quad_tol}, {"max_error", r.max_error},
          {"mean_error", r.mean_error}, {"passed", r.passed},    {"points", pts}};
}

inline json to_json(const ConvergenceReport& r) {
  return {{"n_samples", r.n_samples}, {"error_n", r.error_n}, {"error_2n", r.error_2n}, {"ratio", r.ratio},
          {"passed", r.passed}};
}

inline json to_json(const ArcReport& r) {
  return {{"n_arcs", r.n_arcs}, {"max_defect", r.max_defect}, {"quad_tol", r.quad_tol}, {"passed", r.passed}};
}

inline json to_json(const KineticReport& r) {
  json dirs = json::array();
  for (const auto& d : r.residuals)
    dirs.push_back({{"s_index", d.s_index}, {"s", vec(d.s)}, {"residual", d.residual}, {"scaled", d.scaled}});
  return {{"max_residual", r.max_residual},
          {"max_scaled", r.max_scaled},
          {"kinetic_tol", r.kinetic_tol},
          {"curl_residual", r.curl_residual},
          {"curl_test_residual", r.curl_test_residual},
          {"circulation_residual", r.circulation_residual},
          {"curl_tol", r.curl_tol},
          {"n_test_functions", r.n_test_functions},
          {"mollifier_widths", r.mollifier_widths},
          {"h", r.h},
          {"passed", r.passed},
          {"residuals", dirs}};
}

inline json to_json(const CurlBoundReport& r) {
  return {{"curl_residual", r.curl_residual}, {"mean_kinetic", r.mean_kinetic}, {"perimeter", r.perimeter},
          {"slack", r.slack},                 {"bound", r.bound},               {"holds", r.holds}};
}

inline json to_json(const CharacteristicsReport& r) {
  json probes = json::array();
  for (const auto& p : r.probes)
    probes.push_back({{"start", vec(p.start)}, {"end", vec(p.end)}, {"direction", vec(p.direction)},
                      {"deviation", p.deviation}});
  return {{"step", r.step}, {"max_deviation", r.max_deviation}, {"probes", probes}};
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const SingularityReport& r) {
  return {{"classification", to_string(r.classification)},
          {"reason", r.reason},
          {"center_estimate", std::isfinite(r.center_estimate.x) ? vec(r.center_estimate) : json(nullptr)},
          {"sign", r.sign},
          {"line_fit_residual", finite_or_null(r.line_fit_residual)},
          {"l1_deviation_from_vortex", finite_or_null(r.l1_deviation_from_vortex)},
          {"condition_number", finite_or_null(r.condition_number)},
          {"n_lines", r.n_lines},
          {"class_tol", r.class_tol},
          {"exclusion_radius", r.exclusion_radius},
          {"condition_limit", r.condition_limit}};
}

inline json to_json(const ClassificationReport& r) {
  return {{"detection", to_json(r.detection)},
          {"power_type", to_json(r.power_type)},
          {"holder", to_json(r.holder)},
          {"holder_window",
           {{"center", vec(r.holder_window.center)},
            {"r_in", r.holder_window.r_in},
            {"r_out", r.holder_window.r_out},
            {"d_min", r.holder_window.d_min},
            {"d_max", r.holder_window.d_max}}},
          {"predicted_exponent", r.predicted_exponent},
          {"exponent_tol", r.exponent_tol},
          {"consistent", r.consistent},
          {"verdict", r.verdict}};
}

inline json to_json(const SignPropagationReport& r) {
  return {{"n_pairs", r.n_pairs}, {"n_checked", r.n_checked}, {"violations", r.violations}, {"worst", r.worst},
          {"lipschitz", r.lipschitz}, {"tol", r.tol}, {"passed", r.passed}};
}

}  // namespace normfield::io
