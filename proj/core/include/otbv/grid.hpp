#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "otbv/errors.hpp"

namespace otbv {

// Regular 1D/2D grid of cells. Cell (i) resp. (i,j) has its center at
// origin + index * spacing; values attached to a grid are cell averages.
// 2D data is stored row-major: index = iy * shape[0] + ix.
struct Grid {
  int dim = 1;
  std::array<int, 2> shape{2, 1};     // cells per axis; shape[1] == 1 in 1D
  std::array<double, 2> origin{0, 0}; // coordinate of the first cell center
  double spacing = 1.0;               // uniform, equal per axis

  static Grid line(int n, double x0, double h);
  static Grid box2d(int nx, int ny, double x0, double y0, double h);

  std::size_t cells() const {
    return static_cast<std::size_t>(shape[0]) * (dim == 2 ? shape[1] : 1);
  }
  double cell_volume() const { return dim == 2 ? spacing * spacing : spacing; }

  // Cell-center coordinate; the y component is 0 in 1D.
  std::array<double, 2> center(std::size_t idx) const;
  double x_of(int ix) const { return origin[0] + ix * spacing; }
  double y_of(int iy) const { return origin[1] + iy * spacing; }

  bool operator==(const Grid&) const = default;
  void validate() const;
};

// Cell-averaged nonnegative density (units mass / volume).
struct GridDensity {
  Grid grid;
  std::vector<double> values;

  GridDensity() = default;
  GridDensity(Grid g, std::vector<double> v);
  static GridDensity zeros(const Grid& g);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// Upper bound field f; same layout as GridDensity but not a density itself.
struct ConstraintField {
  Grid grid;
  std::vector<double> values;

  static ConstraintField constant(const Grid& g, double c);
};

double mass(const GridDensity& rho);
double second_moment(const GridDensity& rho);

// Discrete total variation.
// 1D: sum of interior jumps of the piecewise-constant interpolant.
// 2D: sum over cells of h * |(forward dx, forward dy)|_2, with zero padding
// outside the box so boundary jumps are counted.
double total_variation(const GridDensity& rho);

GridDensity rescale_mass(const GridDensity& rho, double lambda);

// Deposits each cell's mass at target[cell] by linear (1D) / bilinear (2D)
// splitting onto the neighboring cells. Mass is conserved exactly.
// Throws TargetOutsideDomain if a target exits the box by more than one cell.
GridDensity pushforward(const GridDensity& rho,
                        const std::vector<std::array<double, 2>>& target);

// L1 distance between densities on the same grid.
double l1_distance(const GridDensity& a, const GridDensity& b);

}  // namespace otbv
