// Command-line front end: runs transport solves, projections, proximal
// steps, evolutions and the verification suite from a JSON config.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 solver failure. Errors go to stderr as one JSON object.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otbv/density_io.hpp"
#include "otbv/diagnostics.hpp"
#include "otbv/ot1d.hpp"
#include "otbv/projection.hpp"
#include "otbv/schemes.hpp"
#include "otbv/sinkhorn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
  json config;
  fs::path out_dir;
  std::uint64_t seed = 0;
  json manifest;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void emit(const fs::path& rel, const std::string& text) {
    const fs::path p = out_dir / rel;
    otbv::write_text_atomic(p, text);
    outputs.push_back(p.string());
  }
  void finish() {
    manifest["config"] = config;
    manifest["outputs"] = outputs;
    manifest["timings_ms"]["total"] =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
    otbv::write_text_atomic(out_dir / "manifest.json", manifest.dump(2));
  }
};

[[noreturn]] void config_fail(const std::string& msg) {
  throw otbv::ConfigError(msg);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      config_fail("unknown key '" + it.key() + "' in " + where);
}

otbv::GridDensity load_density(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) config_fail("missing '" + key + "'");
  const std::string path = cfg.at(key).get<std::string>();
  if (!fs::exists(path)) config_fail("file not found: " + path);
  return otbv::read_density(path);
}

otbv::ConstraintField load_cap(const json& cfg, const otbv::Grid& grid) {
  if (cfg.contains("cap") && cfg.contains("cap_field"))
    config_fail("give either 'cap' or 'cap_field', not both");
  if (cfg.contains("cap"))
    return otbv::ConstraintField::constant(grid, cfg.at("cap").get<double>());
  if (cfg.contains("cap_field")) {
    const std::string path = cfg.at("cap_field").get<std::string>();
    if (!fs::exists(path)) config_fail("file not found: " + path);
    const otbv::GridDensity d = otbv::read_density(path);
    if (!(d.grid == grid)) config_fail("cap_field grid differs from input");
    return otbv::ConstraintField{d.grid, d.values};
  }
  config_fail("missing 'cap' or 'cap_field'");
}

otbv::ConvexIntegrand parse_integrand(const json& cfg) {
  if (!cfg.contains("integrand")) config_fail("missing 'integrand'");
  const json& j = cfg.at("integrand");
  check_keys(j, {"kind", "cap", "exponent", "m", "eps_m"}, "integrand");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return otbv::ConvexIntegrand::zero();
  if (kind == "indicator")
    return otbv::ConvexIntegrand::indicator(j.at("cap").get<double>());
  if (kind == "quadratic") return otbv::ConvexIntegrand::quadratic();
  if (kind == "entropy") return otbv::ConvexIntegrand::entropy();
  if (kind == "power")
    return otbv::ConvexIntegrand::power(j.at("exponent").get<double>());
  if (kind == "penalty") {
    const int m = j.at("m").get<int>();
    const double em = j.contains("eps_m") ? j.at("eps_m").get<double>()
                                          : otbv::epsilon_schedule(m);
    return otbv::ConvexIntegrand::penalty(m, em);
  }
  config_fail("unknown integrand kind '" + kind + "'");
}

std::string plan_csv(const otbv::TransportPlan& plan) {
  std::ostringstream os;
  os.precision(17);
  os << "source,target,weight\n";
  for (const auto& e : plan.entries)
    os << e.source << ',' << e.target << ',' << e.weight << '\n';
  return os.str();
}

// minimal line chart: TV and mass against the step index
std::string trace_svg(const otbv::SchemeTrace& trace) {
  const int W = 640, H = 360, pad = 40;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
     << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  if (trace.rows.size() >= 2) {
    double ymax = 1e-12;
    for (const auto& r : trace.rows)
      ymax = std::max({ymax, r.tv, r.mass_value});
    auto polyline = [&](auto pick, const char* color) {
      os << "<polyline fill='none' stroke='" << color << "' points='";
      for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const double x =
            pad + (W - 2.0 * pad) * k / (trace.rows.size() - 1.0);
        const double y = H - pad - (H - 2.0 * pad) * pick(trace.rows[k]) / ymax;
        os << x << ',' << y << ' ';
      }
      os << "'/>\n";
    };
    polyline([](const otbv::SchemeStep& r) { return r.tv; }, "#c33");
    polyline([](const otbv::SchemeStep& r) { return r.mass_value; }, "#36c");
    os << "<text x='" << pad << "' y='20' font-size='12'>tv (red), mass "
          "(blue) per step</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_trace(RunContext& ctx, const otbv::SchemeTrace& trace) {
  ctx.emit("trace.csv", otbv::trace_csv(trace));
  json schema;
  schema["columns"] = {"step",    "time", "mass", "tv",       "tv_pre",
                       "w2_step", "min",  "max",  "violation"};
  schema["description"] =
      "one row per evolution step; row 0 is the initial state";
  ctx.emit("trace.schema.json", schema.dump(2));
  ctx.emit("trace.svg", trace_svg(trace));
  for (const auto& [step, snap] : trace.snapshots) {
    std::ostringstream name;
    name << "snapshot_" << step << ".json";
    ctx.emit(name.str(), otbv::density_to_json(snap));
  }
  ctx.manifest["diagnostics"]["steps"] =
      static_cast<int>(trace.rows.size()) - 1;
  ctx.manifest["diagnostics"]["truncated"] = trace.truncated;
}

int cmd_ot(RunContext& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg,
             {"schema_version", "command", "seed", "output_dir", "source",
              "target", "method", "epsilon", "max_iter", "tol"},
             "config");
  const otbv::GridDensity rho = load_density(cfg, "source");
  const otbv::GridDensity g = load_density(cfg, "target");
  const std::string method = cfg.value("method", "lp");

  if (method == "exact1d") {
    const double w = otbv::w2_1d(rho, g);
    const otbv::DualPotentials duals = otbv::potentials_1d(rho, g);
    ctx.emit("phi.json", otbv::field_to_json(rho.grid, duals.phi));
    ctx.emit("psi.json", otbv::field_to_json(g.grid, duals.psi));
    ctx.manifest["diagnostics"]["w2"] = w;
  } else if (method == "lp") {
    const otbv::LpSolution sol = otbv::solve_ot_lp(rho, g);
    ctx.emit("plan.csv", plan_csv(sol.plan));
    ctx.emit("phi.json", otbv::field_to_json(rho.grid, sol.duals.phi));
    ctx.emit("psi.json", otbv::field_to_json(g.grid, sol.duals.psi));
    ctx.manifest["diagnostics"]["cost"] = sol.plan.cost;
    ctx.manifest["diagnostics"]["w2"] = std::sqrt(2.0 * sol.plan.cost);
    ctx.manifest["diagnostics"]["duality_gap"] = sol.duality_gap;
  } else if (method == "sinkhorn") {
    if (!cfg.contains("epsilon")) config_fail("sinkhorn needs 'epsilon'");
    const otbv::SinkhornResult sol =
        otbv::sinkhorn(rho, g, cfg.at("epsilon").get<double>(),
                       cfg.value("max_iter", 50000), cfg.value("tol", 1e-9));
    ctx.emit("plan.csv", plan_csv(sol.plan));
    ctx.emit("phi.json", otbv::field_to_json(rho.grid, sol.duals.phi));
    ctx.emit("psi.json", otbv::field_to_json(g.grid, sol.duals.psi));
    ctx.manifest["diagnostics"]["cost"] = sol.plan.cost;
    ctx.manifest["diagnostics"]["marginal_error"] = sol.marginal_error;
    ctx.manifest["diagnostics"]["iterations"] = sol.iterations;
  } else {
    config_fail("unknown ot method '" + method + "'");
  }
  return 0;
}

int cmd_project(RunContext& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg,
             {"schema_version", "command", "seed", "output_dir", "input",
              "cap", "cap_field", "method", "epsilon", "m", "max_iter", "tol"},
             "config");
  const otbv::GridDensity g = load_density(cfg, "input");
  const otbv::ConstraintField f = load_cap(cfg, g.grid);
  const std::string method = cfg.value("method", "lp");

  otbv::ProjectionResult res;
  if (method == "lp") {
    res = otbv::project_lp(g, f);
  } else if (method == "k1") {
    bool constant = true;
    for (double v : f.values)
      if (std::abs(v - f.values[0]) > 1e-12) constant = false;
    if (!constant) config_fail("method k1 needs a constant cap");
    res = otbv::project_k1_1d(g, f.values[0]);
  } else if (method == "entropic") {
    if (!cfg.contains("epsilon")) config_fail("entropic needs 'epsilon'");
    res = otbv::project_entropic(g, f, cfg.at("epsilon").get<double>(),
                                 cfg.value("max_iter", 20000),
                                 cfg.value("tol", 1e-7));
  } else if (method == "penalized") {
    if (!cfg.contains("m")) config_fail("penalized needs 'm'");
    const int m = cfg.at("m").get<int>();
    res.rho = otbv::project_penalized(g, f, m, otbv::epsilon_schedule(m));
  } else {
    config_fail("unknown project method '" + method + "'");
  }

  ctx.emit("projection.json", otbv::density_to_json(res.rho));
  if (!res.duals.phi.empty())
    ctx.emit("phi.json", otbv::field_to_json(g.grid, res.duals.phi));
  json rep;
  rep["threshold"] = res.threshold;
  rep["duality_gap"] = res.duality_gap;
  rep["constraint_violation"] = res.constraint_violation;
  rep["transport_cost"] = res.transport_cost;
  rep["iterations"] = res.iterations;
  rep["tv_input"] = otbv::total_variation(g);
  rep["tv_projection"] = otbv::total_variation(res.rho);
  ctx.emit("report.json", rep.dump(2));
  ctx.manifest["diagnostics"] = rep;
  return 0;
}

int cmd_jko(RunContext& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg,
             {"schema_version", "command", "seed", "output_dir", "input",
              "integrand", "tau", "method", "epsilon", "max_iter", "tol"},
             "config");
  const otbv::GridDensity prev = load_density(cfg, "input");
  const otbv::ConvexIntegrand h = parse_integrand(cfg);
  if (!cfg.contains("tau")) config_fail("missing 'tau'");
  const std::string method = cfg.value("method", "entropic");
  otbv::JkoOptions opt;
  opt.eps = cfg.value("epsilon", 0.0);
  opt.max_iter = cfg.value("max_iter", 20000);
  opt.tol = cfg.value("tol", 1e-9);
  const otbv::GridDensity next = otbv::jko_step(
      prev, h, cfg.at("tau").get<double>(),
      method == "lp" ? otbv::JkoMethod::lp : otbv::JkoMethod::entropic, opt);
  ctx.emit("step.json", otbv::density_to_json(next));
  ctx.manifest["diagnostics"]["mass"] = otbv::mass(next);
  ctx.manifest["diagnostics"]["tv"] = otbv::total_variation(next);
  return 0;
}

int cmd_evolve(RunContext& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg,
             {"schema_version", "command", "seed", "output_dir", "input",
              "scheme", "tau", "t_final", "sigma", "velocity", "integrand",
              "snapshot_stride", "method", "epsilon", "max_iter", "tol"},
             "config");
  const otbv::GridDensity rho0 = load_density(cfg, "input");
  otbv::SchemeConfig sc;
  sc.tau = cfg.value("tau", 0.1);
  sc.t_final = cfg.value("t_final", 0.3);
  sc.sigma = cfg.value("sigma", 0.0);
  sc.snapshot_stride = cfg.value("snapshot_stride", 1);
  if (cfg.contains("velocity")) {
    const auto v = cfg.at("velocity").get<std::vector<double>>();
    if (v.size() != 2) config_fail("'velocity' must be [vx, vy]");
    sc.velocity.assign(rho0.grid.cells(), {v[0], v[1]});
  }
  if (cfg.contains("method") && cfg.at("method").get<std::string>() == "lp")
    sc.jko_method = otbv::JkoMethod::lp;
  sc.jko_options.eps = cfg.value("epsilon", 0.0);
  sc.jko_options.max_iter = cfg.value("max_iter", 20000);
  sc.jko_options.tol = cfg.value("tol", 1e-9);

  const std::string scheme = cfg.value("scheme", "");
  otbv::SchemeTrace trace;
  if (scheme == "set_growth") {
    sc.kind = otbv::SchemeKind::set_growth;
    trace = otbv::evolve_set_growth(rho0, sc);
  } else if (scheme == "crowd") {
    sc.kind = otbv::SchemeKind::crowd;
    trace = otbv::evolve_crowd(rho0, sc);
  } else if (scheme == "porous_medium") {
    sc.kind = otbv::SchemeKind::porous_medium;
    sc.integrand = parse_integrand(cfg);
    trace = otbv::evolve_porous_medium(rho0, sc);
  } else {
    config_fail("unknown scheme '" + scheme + "'");
  }
  emit_trace(ctx, trace);
  return 0;
}

int cmd_verify(RunContext& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"schema_version", "command", "seed", "output_dir", "suite"},
             "config");
  const std::string suite = cfg.value("suite", "canonical");
  if (suite != "canonical") config_fail("unknown suite '" + suite + "'");

  const std::vector<otbv::VerificationReport> reports =
      otbv::canonical_examples();
  ctx.emit("reports.json", otbv::reports_to_json(reports));

  bool all_pass = true;
  std::cout << "check                        pass  slack\n";
  for (const auto& r : reports) {
    std::cout << r.name;
    for (std::size_t k = r.name.size(); k < 29; ++k) std::cout << ' ';
    std::cout << (r.pass ? "ok  " : "FAIL") << "  " << r.slack << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal-transport projection toolkit"};
  std::string config_path;
  std::string out_override;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--jobs", jobs, "parallelism bound for sweeps");
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--seed", seed_override, "seed override");
  CLI11_PARSE(app, argc, argv);

  auto fail_json = [](int code, const std::string& kind,
                      const std::string& msg) {
    json err;
    err["error"] = kind;
    err["message"] = msg;
    std::cerr << err.dump() << std::endl;
    return code;
  };

  RunContext ctx;
  try {
    std::ifstream in(config_path);
    if (!in) return fail_json(2, "ConfigError", "cannot open " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    ctx.config = json::parse(buf.str());
    if (!ctx.config.contains("schema_version") ||
        ctx.config.at("schema_version").get<int>() != 1)
      config_fail("unsupported or missing schema_version (expected 1)");
    if (!ctx.config.contains("command")) config_fail("missing 'command'");
    ctx.seed = seed_override.value_or(ctx.config.value("seed", 0ull));
    ctx.config["seed"] = ctx.seed;
    ctx.out_dir = out_override.empty() ? ctx.config.value("output_dir", "out")
                                       : out_override;
    fs::create_directories(ctx.out_dir);

    const std::string cmd = ctx.config.at("command").get<std::string>();
    int rc;
    if (cmd == "ot")
      rc = cmd_ot(ctx);
    else if (cmd == "project")
      rc = cmd_project(ctx);
    else if (cmd == "jko")
      rc = cmd_jko(ctx);
    else if (cmd == "evolve")
      rc = cmd_evolve(ctx);
    else if (cmd == "verify")
      rc = cmd_verify(ctx);
    else
      config_fail("unknown command '" + cmd + "'");
    ctx.finish();
    return rc;
  } catch (const otbv::ConfigError& e) {
    return fail_json(2, "ConfigError", e.what());
  } catch (const otbv::InvalidDensityFile& e) {
    return fail_json(2, "InvalidDensityFile", e.what());
  } catch (const json::exception& e) {
    return fail_json(2, "ConfigError", e.what());
  } catch (const otbv::NotConverged& e) {
    return fail_json(3, "NotConverged", e.what());
  } catch (const std::runtime_error& e) {
    // remaining domain errors are solver-side
    std::string kind = "SolverFailure";
    if (dynamic_cast<const otbv::Infeasible*>(&e)) kind = "Infeasible";
    if (dynamic_cast<const otbv::MassMismatch*>(&e)) kind = "MassMismatch";
    if (dynamic_cast<const otbv::InstanceTooLarge*>(&e))
      kind = "InstanceTooLarge";
    if (dynamic_cast<const otbv::TargetOutsideDomain*>(&e))
      kind = "TargetOutsideDomain";
    return fail_json(3, kind, e.what());
  }
}
