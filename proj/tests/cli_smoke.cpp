#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "helpers.hpp"
#include "otbv/density_io.hpp"

using namespace otbv;
using namespace otbv::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("otbv_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter() {
    static int c = 0;
    return c++;
  }
};

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(OTBV_CLI_PATH) + " " + args + " > /dev/null 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

}  // namespace

TEST_CASE("missing config file exits with the configuration code") {
  CHECK(run_cli("--config /nonexistent/cfg.json") == 2);
}

TEST_CASE("malformed and invalid configs exit with the configuration code") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  {
    std::ofstream out(cfg);
    out << "{not json";
  }
  CHECK(run_cli("--config " + cfg.string()) == 2);

  write_json(cfg, {{"schema_version", 99}, {"command", "project"}});
  CHECK(run_cli("--config " + cfg.string()) == 2);

  write_json(cfg, {{"schema_version", 1}, {"command", "no_such_command"}});
  CHECK(run_cli("--config " + cfg.string()) == 2);

  write_json(cfg, {{"schema_version", 1},
                   {"command", "project"},
                   {"surprise_key", 1}});
  CHECK(run_cli("--config " + cfg.string()) == 2);
}

TEST_CASE("projection run emits artifacts and a manifest") {
  TempDir tmp;
  const Grid g = line_grid(64, -1.0, 1.0);
  const auto rho = clipped_smooth(g, 9, 0, 1.2);
  write_density(tmp.path / "input.json", rho);

  const fs::path out = tmp.path / "out";
  write_json(tmp.path / "cfg.json", {{"schema_version", 1},
                                     {"command", "project"},
                                     {"input", (tmp.path / "input.json").string()},
                                     {"cap", 1.0},
                                     {"method", "k1"},
                                     {"output_dir", out.string()}});
  REQUIRE(run_cli("--config " + (tmp.path / "cfg.json").string()) == 0);

  REQUIRE(fs::exists(out / "projection.json"));
  REQUIRE(fs::exists(out / "report.json"));
  REQUIRE(fs::exists(out / "manifest.json"));

  const auto proj = read_density(out / "projection.json");
  CHECK(mass(proj) == doctest::Approx(mass(rho)).epsilon(1e-7));
  for (double v : proj.values) CHECK(v <= 1.0 + 1e-7);

  std::ifstream min(out / "manifest.json");
  std::stringstream mbuf;
  mbuf << min.rdbuf();
  const json manifest = json::parse(mbuf.str());
  CHECK(manifest.contains("config"));
  CHECK(manifest.contains("outputs"));
  CHECK(manifest.contains("timings_ms"));
  CHECK(manifest["diagnostics"]["constraint_violation"].get<double>() <= 1e-7);
}

TEST_CASE("infeasible projection exits with the solver code") {
  TempDir tmp;
  const Grid g = line_grid(32, 0.0, 1.0);
  const auto rho = clipped_smooth(g, 5, 1, 2.0);  // mass above the box capacity
  write_density(tmp.path / "input.json", rho);
  write_json(tmp.path / "cfg.json", {{"schema_version", 1},
                                     {"command", "project"},
                                     {"input", (tmp.path / "input.json").string()},
                                     {"cap", 1.0},
                                     {"method", "k1"},
                                     {"output_dir", (tmp.path / "out").string()}});
  CHECK(run_cli("--config " + (tmp.path / "cfg.json").string()) == 3);
}

TEST_CASE("exact 1d transport run reports the distance") {
  TempDir tmp;
  const Grid g = line_grid(64, -1.0, 1.0);
  write_density(tmp.path / "a.json", gaussian_1d(g, -0.2, 0.15, 1.0));
  write_density(tmp.path / "b.json", gaussian_1d(g, 0.2, 0.15, 1.0));
  const fs::path out = tmp.path / "out";
  write_json(tmp.path / "cfg.json", {{"schema_version", 1},
                                     {"command", "ot"},
                                     {"source", (tmp.path / "a.json").string()},
                                     {"target", (tmp.path / "b.json").string()},
                                     {"method", "exact1d"},
                                     {"output_dir", out.string()}});
  REQUIRE(run_cli("--config " + (tmp.path / "cfg.json").string()) == 0);
  REQUIRE(fs::exists(out / "phi.json"));
  REQUIRE(fs::exists(out / "psi.json"));

  std::ifstream min(out / "manifest.json");
  std::stringstream mbuf;
  mbuf << min.rdbuf();
  const json manifest = json::parse(mbuf.str());
  CHECK(manifest["diagnostics"]["w2"].get<double>() ==
        doctest::Approx(0.4).epsilon(1e-3));
}

TEST_CASE("evolution run writes a trace with snapshots") {
  TempDir tmp;
  const Grid g = line_grid(128, -1.0, 2.0);
  write_density(tmp.path / "input.json", indicator_1d(g, 0.0, 1.0, 1.0));
  const fs::path out = tmp.path / "out";
  write_json(tmp.path / "cfg.json", {{"schema_version", 1},
                                     {"command", "evolve"},
                                     {"scheme", "set_growth"},
                                     {"input", (tmp.path / "input.json").string()},
                                     {"tau", 0.1},
                                     {"t_final", 0.2},
                                     {"snapshot_stride", 1},
                                     {"output_dir", out.string()}});
  REQUIRE(run_cli("--config " + (tmp.path / "cfg.json").string()) == 0);
  REQUIRE(fs::exists(out / "trace.csv"));
  REQUIRE(fs::exists(out / "trace.schema.json"));
  REQUIRE(fs::exists(out / "trace.svg"));
  REQUIRE(fs::exists(out / "snapshot_0.json"));
  REQUIRE(fs::exists(out / "snapshot_2.json"));

  std::ifstream tin(out / "trace.csv");
  std::string header;
  std::getline(tin, header);
  CHECK(header == "step,time,mass,tv,tv_pre,w2_step,min,max,violation");
  int rows = 0;
  for (std::string line; std::getline(tin, line);) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("verification suite exits cleanly and writes reports") {
  TempDir tmp;
  const fs::path out = tmp.path / "out";
  write_json(tmp.path / "cfg.json", {{"schema_version", 1},
                                     {"command", "verify"},
                                     {"suite", "canonical"},
                                     {"output_dir", out.string()}});
  REQUIRE(run_cli("--config " + (tmp.path / "cfg.json").string()) == 0);
  REQUIRE(fs::exists(out / "reports.json"));
  std::ifstream rin(out / "reports.json");
  std::stringstream rbuf;
  rbuf << rin.rdbuf();
  const json reports = json::parse(rbuf.str());
  REQUIRE(reports.is_array());
  CHECK(reports.size() == 3);
  for (const auto& r : reports) CHECK(r["pass"] == true);
}
