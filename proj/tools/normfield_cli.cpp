// normfield command line driver.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage or input error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normfield/averaging.hpp"
#include "normfield/convexity_modulus.hpp"
#include "normfield/field_analysis.hpp"
#include "normfield/io.hpp"
#include "normfield/kinetic.hpp"

using namespace normfield;
namespace fs = std::filesystem;
using io::json;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kInputError = 2 };

struct Config {
  std::string command;
  std::string norm_arg;
  std::string field;
  std::string out = "normfield_out";
  std::size_t samples = 0;  // 0 selects the per-command default
  std::size_t directions = 64;
  std::uint64_t seed = 0;
  bool emit_plot_data = false;
  // vortex gen
  std::vector<double> center{0.0, 0.0};
  int sign = 1;
  std::size_t grid = 256;
  double half_width = 1.0;
};

json config_json(const Config& c, const NormSpec& spec, std::size_t samples) {
  json j;
  j["command"] = c.command;
  j["norm"] = io::to_json(spec);
  if (!c.field.empty()) j["field"] = c.field;
  j["out"] = c.out;
  j["samples"] = samples;
  j["directions"] = c.directions;
  j["seed"] = c.seed;
  j["emit_plot_data"] = c.emit_plot_data;
  return j;
}

fs::path out_file(const Config& c, const std::string& name) { return fs::path(c.out) / name; }

void finish(const Config& c, const std::string& name, json report) {
  io::write_json(out_file(c, name), report);
  std::cout << "wrote " << out_file(c, name).string() << "\n";
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------

int cmd_norm_inspect(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const std::size_t n = c.samples ? c.samples : 4096;
  const PlanarNorm norm(spec);
  const auto atlas = boundary_atlas(norm, n);
  const double fine = boundary_atlas(norm, 16 * n).perimeter();

  json spots = json::array();
  for (Vec2 x : {Vec2{1, 0}, Vec2{0, 1}, Vec2{3, 4}, Vec2{-0.6, 0.25}})
    spots.push_back({{"x", io::vec(x)}, {"norm", norm(x)}, {"dual", norm.dual(x)}});
  double min_step = INFINITY, max_step = 0.0;
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    const double step = atlas.cum_arclength[i + 1] - atlas.cum_arclength[i];
    min_step = std::min(min_step, step);
    max_step = std::max(max_step, step);
  }

  json rep;
  rep["config"] = config_json(c, spec, n);
  rep["smoothness"] = to_string(norm.smoothness());
  rep["strictly_convex"] = norm.is_strictly_convex();
  rep["c_low"] = norm.c_low();
  rep["c_high"] = norm.c_high();
  rep["spot_checks"] = spots;
  rep["atlas"] = {{"n_points", atlas.size()}, {"min_step", min_step}, {"max_step", max_step}};
  rep["perimeter"] = atlas.perimeter();
  rep["perimeter_refined"] = fine;
  rep["perimeter_gap"] = std::fabs(atlas.perimeter() - fine);

  std::printf("smoothness      %s\n", to_string(norm.smoothness()));
  std::printf("strictly convex %s\n", norm.is_strictly_convex() ? "yes" : "no");
  std::printf("c_low, c_high   %.6f %.6f\n", norm.c_low(), norm.c_high());
  std::printf("perimeter       %.10f (refined %.10f)\n", atlas.perimeter(), fine);
  for (const auto& s : spots)
    std::printf("  ||(%g, %g)|| = %.10g   dual %.10g\n", s["x"][0].get<double>(), s["x"][1].get<double>(),
                s["norm"].get<double>(), s["dual"].get<double>());
  finish(c, "norm_inspect.json", rep);
  return kPass;
}

json fit_or_error(const ModulusCurve& curve) {
  try {
    return io::to_json(fit_power_type(curve));
  } catch (const DegenerateModulus& e) {
    return {{"error", e.what()}};
  }
}

int cmd_modulus(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const std::size_t n = c.samples ? c.samples : 4096;
  const PlanarNorm norm(spec);
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(0.1 * k);
  const auto fit_deltas = log_deltas(1e-3, 1e-1, 16);

  const auto sandwich = sandwich_check(norm, grid, n);
  const auto nord = nordlander_check(norm, grid, n);
  const auto om = omega_curve(norm, fit_deltas, n);
  const json fit = fit_or_error(om);

  json rep;
  rep["config"] = config_json(c, spec, n);
  rep["sandwich"] = io::to_json(sandwich);
  rep["nordlander"] = io::to_json(nord);
  rep["fit"] = fit;
  io::write_text(out_file(c, "omega.csv"), io::curve_csv(omega_curve(norm, grid, n)));
  io::write_text(out_file(c, "rho.csv"), io::curve_csv(rho_curve(norm, grid, n)));
  if (c.emit_plot_data) io::write_text(out_file(c, "omega_fit_range.csv"), io::curve_csv(om));
  io::write_json(out_file(c, "fit.json"), fit);

  std::printf("sandwich   %s\n", verdict(sandwich.passed));
  std::printf("nordlander %s\n", verdict(nord.passed));
  if (fit.contains("error"))
    std::printf("fit        %s\n", fit["error"].get<std::string>().c_str());
  else
    std::printf("fit        p_hat = %.4f  K_hat = %.4g\n", fit["p_hat"].get<double>(), fit["K_hat"].get<double>());
  finish(c, "modulus.json", rep);
  return sandwich.passed && nord.passed ? kPass : kCheckFailed;
}

int cmd_fit(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const std::size_t n = c.samples ? c.samples : 4096;
  const auto om = omega_curve(PlanarNorm(spec), log_deltas(1e-3, 1e-1, 16), n);
  json rep = fit_or_error(om);
  rep["config"] = config_json(c, spec, n);
  io::write_text(out_file(c, "omega.csv"), io::curve_csv(om));
  if (rep.contains("error"))
    std::printf("fit: %s\n", rep["error"].get<std::string>().c_str());
  else
    std::printf("p_hat = %.4f  K_hat = %.4g  r^2 = %.6f\n", rep["p_hat"].get<double>(), rep["K_hat"].get<double>(),
                rep["r_squared"].get<double>());
  finish(c, "fit.json", rep);
  return kPass;
}

int cmd_averaging(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const std::size_t n = c.samples ? c.samples : 20000;
  const PlanarNorm norm(spec);
  const auto rule = quadrature_rule(norm, n);
  const auto recon = verify_reconstruction(rule, 64, c.seed);
  const auto conv = reconstruction_convergence(norm, n, 64, c.seed);
  const auto stj = stieltjes_check(rule, 64, c.seed);
  const auto anti = antisymmetry_check(rule, 64, c.seed);

  json rep;
  rep["config"] = config_json(c, spec, n);
  rep["reconstruction"] = io::to_json(recon);
  rep["convergence"] = io::to_json(conv);
  rep["arc_measure"] = io::to_json(stj);
  rep["antisymmetry"] = io::to_json(anti);
  if (c.emit_plot_data) {
    std::string s = "x,y,residual\n";
    for (std::size_t k = 0; k < recon.points.size(); ++k)
      s += io::fmt(recon.points[k].x) + "," + io::fmt(recon.points[k].y) + "," + io::fmt(recon.residuals[k]) + "\n";
    io::write_text(out_file(c, "reconstruction.csv"), s);
  }
  std::printf("reconstruction max %.3e (tol %.1e) %s\n", recon.max_error, recon.quad_tol, verdict(recon.passed));
  std::printf("convergence ratio  %.3f %s\n", conv.ratio, verdict(conv.passed));
  std::printf("arc measure        %.3e %s\n", stj.max_defect, verdict(stj.passed));
  std::printf("antisymmetry       %.3e %s\n", anti.max_defect, verdict(anti.passed));
  finish(c, "averaging.json", rep);
  return recon.passed && conv.passed && stj.passed && anti.passed ? kPass : kCheckFailed;
}

int cmd_vortex_gen(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  if (c.sign != 1 && c.sign != -1) throw io::InputError("--sign must be 1 or -1");
  if (c.grid < 3) throw io::InputError("--grid must be at least 3");
  if (!(c.half_width > 0.0)) throw io::InputError("--half-width must be positive");
  const VortexField v{PlanarNorm(spec), {c.center[0], c.center[1]}, c.sign};
  const auto g = vortex_grid(v, c.grid, c.half_width);
  const fs::path csv = c.field.empty() ? out_file(c, "field.csv") : fs::path(c.field);
  io::write_field(csv, g);

  std::size_t masked = 0;
  for (auto m : g.mask) masked += m == 0;
  json rep;
  rep["config"] = config_json(c, spec, 0);
  rep["config"]["center"] = c.center;
  rep["config"]["sign"] = c.sign;
  rep["config"]["grid"] = c.grid;
  rep["config"]["half_width"] = c.half_width;
  rep["field"] = csv.string();
  rep["h"] = g.h;
  rep["masked_cells"] = masked;
  std::printf("wrote %s (%zux%zu, %zu masked)\n", csv.string().c_str(), g.nx, g.ny, masked);
  finish(c, "vortex_gen.json", rep);
  return kPass;
}

FieldGrid load_field(const Config& c, const NormSpec& spec) {
  if (c.field.empty()) throw io::InputError("--field is required");
  return io::read_field(c.field, PlanarNorm(spec));
}

int cmd_kinetic(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const auto g = load_field(c, spec);
  const auto k = kinetic_check(g, c.directions);
  const auto bound = kinetic_implies_curl_check(g, c.directions);
  const auto ch = characteristics_check(g, 64, c.seed);

  json rep;
  rep["config"] = config_json(c, spec, 0);
  rep["kinetic"] = io::to_json(k);
  rep["curl_bound"] = io::to_json(bound);
  rep["characteristics"] = io::to_json(ch);
  if (c.emit_plot_data) {
    std::string s = "s_index,sx,sy,residual,scaled\n";
    for (const auto& d : k.residuals)
      s += std::to_string(d.s_index) + "," + io::fmt(d.s.x) + "," + io::fmt(d.s.y) + "," + io::fmt(d.residual) + "," +
           io::fmt(d.scaled) + "\n";
    io::write_text(out_file(c, "kinetic_residuals.csv"), s);
  }
  std::printf("kinetic max %.3e scaled %.3e (tol %.1e)\n", k.max_residual, k.max_scaled, k.kinetic_tol);
  std::printf("curl        %.3e (tol %.3e)\n", k.curl_residual, k.curl_tol);
  std::printf("%s\n", verdict(k.passed));
  finish(c, "kinetic.json", rep);
  return k.passed ? kPass : kCheckFailed;
}

int cmd_field_analyze(const Config& c) {
  const NormSpec spec = io::parse_norm_argument(c.norm_arg);
  const auto g = load_field(c, spec);
  json rep;
  rep["config"] = config_json(c, spec, 0);
  ClassifyOptions opt;
  opt.seed = c.seed;
  bool ok = true;
  SingularityReport det;
  try {
    const auto cls = classify_field(g, opt);
    det = cls.detection;
    rep["classification"] = io::to_json(cls);
    ok = cls.consistent;
  } catch (const DegenerateModulus&) {
    det = detect_singularity(g, opt.n_lines, opt.seed, opt.class_tol);
    rep["classification"] = {{"detection", io::to_json(det)}, {"error", "degenerate modulus"}};
  }
  if (g.norm.is_c1() && g.norm.is_strictly_convex()) {
    const auto sp = sign_propagation_check(g, 1000, c.seed);
    rep["sign_propagation"] = io::to_json(sp);
    ok = ok && sp.passed;
    std::printf("sign propagation %zu violations of %zu %s\n", sp.violations, sp.n_checked, verdict(sp.passed));
  }
  if (c.emit_plot_data && det.classification == Classification::vortex) {
    const Vec2 d = g.norm.unit_normal(g.norm.boundary_point(0.0));
    const Vec2 lo = g.lower(), hi = g.upper();
    const double reach = 0.5 * std::min(hi.x - lo.x, hi.y - lo.y) - 4 * g.h;
    const Vec2 p = det.center_estimate;
    try {
      const auto t = trace_along_segment(g, p - 0.5 * reach * d, p + 0.5 * reach * d, {2 * g.h, g.h});
      io::write_text(out_file(c, "trace.csv"), io::trace_csv(t));
    } catch (const Error& e) {
      rep["trace_error"] = e.what();
    }
  }
  std::printf("classification %s", to_string(det.classification));
  if (det.classification == Classification::vortex)
    std::printf(" center (%.6f, %.6f) sign %+d", det.center_estimate.x, det.center_estimate.y, det.sign);
  std::printf("\n%s\n", verdict(ok));
  finish(c, "field_analysis.json", rep);
  return ok ? kPass : kCheckFailed;
}

void add_common(CLI::App* app, Config& c, bool needs_field) {
  app->add_option("--norm", c.norm_arg, "Norm spec: JSON file or inline JSON")->required();
  auto* f = app->add_option("--field", c.field, "Field CSV (a .grid.json sidecar sits next to it)");
  if (needs_field) f->required();
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--samples", c.samples, "Boundary samples (default depends on the command)");
  app->add_option("--directions", c.directions, "Kinetic directions")->capture_default_str();
  app->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app->add_flag("--emit-plot-data", c.emit_plot_data, "Also write plot CSVs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normfield: planar norms, vortex fields and kinetic checks"};
  app.require_subcommand(1);
  Config c;

  auto* norm = app.add_subcommand("norm", "Norm utilities");
  norm->require_subcommand(1);
  auto* inspect = norm->add_subcommand("inspect", "Gauge and dual spot checks, smoothness, perimeter");
  add_common(inspect, c, false);
  auto* modulus = app.add_subcommand("modulus", "Moduli of convexity, sandwich and euclidean bound");
  add_common(modulus, c, false);
  auto* fit = app.add_subcommand("fit-power-type", "Power-type fit of the modulus of convexity");
  add_common(fit, c, false);
  auto* averaging = app.add_subcommand("averaging", "Averaging formula");
  averaging->require_subcommand(1);
  auto* verify = averaging->add_subcommand("verify", "Reconstruction and arc-measure checks");
  add_common(verify, c, false);
  auto* vortex = app.add_subcommand("vortex", "Vortex fields");
  vortex->require_subcommand(1);
  auto* gen = vortex->add_subcommand("gen", "Write a vortex field grid");
  add_common(gen, c, false);
  gen->add_option("--center", c.center, "Vortex center x y")->expected(2)->capture_default_str();
  gen->add_option("--sign", c.sign, "Orientation, 1 or -1")->capture_default_str();
  gen->add_option("--grid", c.grid, "Cells per side")->capture_default_str();
  gen->add_option("--half-width", c.half_width, "Grid covers [-w, w]^2")->capture_default_str();
  auto* kinetic = app.add_subcommand("kinetic", "Kinetic formulation");
  kinetic->require_subcommand(1);
  auto* check = kinetic->add_subcommand("check", "Kinetic and curl residuals of a field");
  add_common(check, c, true);
  auto* field = app.add_subcommand("field", "Field analysis");
  field->require_subcommand(1);
  auto* analyze = field->add_subcommand("analyze", "Singularity detection and classification");
  add_common(analyze, c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*inspect) {
      c.command = "norm inspect";
      return cmd_norm_inspect(c);
    }
    if (*modulus) {
      c.command = "modulus";
      return cmd_modulus(c);
    }
    if (*fit) {
      c.command = "fit-power-type";
      return cmd_fit(c);
    }
    if (*verify) {
      c.command = "averaging verify";
      return cmd_averaging(c);
    }
    if (*gen) {
      c.command = "vortex gen";
      return cmd_vortex_gen(c);
    }
    if (*check) {
      c.command = "kinetic check";
      return cmd_kinetic(c);
    }
    if (*analyze) {
      c.command = "field analyze";
      return cmd_field_analyze(c);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
