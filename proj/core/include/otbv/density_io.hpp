#pragma once

#include <filesystem>
#include <string>

#include "otbv/grid.hpp"

namespace otbv {

// Density file format: a JSON document
//   {"dim": int, "shape": [ints], "origin": [reals], "spacing": real,
//    "values": [reals row-major]}
// Readers reject NaN and negative values. Writing is atomic (temp + rename)
// and round-trips bit-exactly.

std::string density_to_json(const GridDensity& rho);
GridDensity density_from_json(const std::string& text);

void write_density(const std::filesystem::path& path, const GridDensity& rho);
GridDensity read_density(const std::filesystem::path& path);

// Potentials and other per-cell scalar fields share the same format; values
// may then be negative.
std::string field_to_json(const Grid& grid, const std::vector<double>& values);
void write_field(const std::filesystem::path& path, const Grid& grid,
                 const std::vector<double>& values);

// Atomic text-file write used for every artifact the toolkit emits.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace otbv
