#include "otbv/density_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace otbv {

using nlohmann::json;

namespace {

json grid_header(const Grid& g) {
  json j;
  j["dim"] = g.dim;
  if (g.dim == 1) {
    j["shape"] = {g.shape[0]};
    j["origin"] = {g.origin[0]};
  } else {
    j["shape"] = {g.shape[0], g.shape[1]};
    j["origin"] = {g.origin[0], g.origin[1]};
  }
  j["spacing"] = g.spacing;
  return j;
}

Grid grid_from_header(const json& j) {
  Grid g;
  g.dim = j.at("dim").get<int>();
  const auto shape = j.at("shape").get<std::vector<int>>();
  const auto origin = j.at("origin").get<std::vector<double>>();
  if (static_cast<int>(shape.size()) != g.dim || static_cast<int>(origin.size()) != g.dim)
    throw InvalidDensityFile("density file: shape/origin length does not match dim");
  g.shape = {shape[0], g.dim == 2 ? shape[1] : 1};
  g.origin = {origin[0], g.dim == 2 ? origin[1] : 0.0};
  g.spacing = j.at("spacing").get<double>();
  g.validate();
  return g;
}

}  // namespace

std::string density_to_json(const GridDensity& rho) {
  json j = grid_header(rho.grid);
  j["values"] = rho.values;
  return j.dump();
}

GridDensity density_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidDensityFile(std::string("density file: ") + e.what());
  }
  Grid g;
  std::vector<double> values;
  try {
    g = grid_from_header(j);
    values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidDensityFile(std::string("density file: ") + e.what());
  }
  if (values.size() != g.cells())
    throw InvalidDensityFile("density file: value count does not match shape");
  for (double v : values)
    if (std::isnan(v) || v < 0.0)
      throw InvalidDensityFile("density file: NaN or negative value rejected");
  return GridDensity(g, std::move(values));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp);
    out << text;
    if (!out) throw ConfigError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_density(const std::filesystem::path& path, const GridDensity& rho) {
  write_text_atomic(path, density_to_json(rho));
}

GridDensity read_density(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open density file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return density_from_json(ss.str());
}

std::string field_to_json(const Grid& grid, const std::vector<double>& values) {
  if (values.size() != grid.cells())
    throw ConfigError("field_to_json: value count does not match grid");
  json j = grid_header(grid);
  j["values"] = values;
  return j.dump();
}

void write_field(const std::filesystem::path& path, const Grid& grid,
                 const std::vector<double>& values) {
  write_text_atomic(path, field_to_json(grid, values));
}

}  // namespace otbv
