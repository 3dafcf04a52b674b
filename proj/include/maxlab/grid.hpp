#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "maxlab/geometry.hpp"

namespace maxlab {

using Index = std::array<std::size_t, kMaxDim>;

// Nonnegative piecewise-constant density on a uniform grid of cubic cells.
// The function is zero outside the grid bounding box.
class GridFunction {
 public:
  GridFunction(std::vector<std::size_t> shape, Point origin, double cell_size,
               std::vector<double> values);

  static GridFunction zeros(std::vector<std::size_t> shape, Point origin,
                            double cell_size);
  // Samples fn at cell centers.
  static GridFunction sample(std::vector<std::size_t> shape, Point origin,
                             double cell_size,
                             const std::function<double(const Point&)>& fn);

  int dim() const { return dim_; }
  std::size_t extent(int axis) const { return axis < dim_ ? shape_[axis] : 1; }
  std::vector<std::size_t> shape() const;
  std::size_t size() const { return values_.size(); }
  const Point& origin() const { return origin_; }
  double cell_size() const { return h_; }
  double cell_volume() const;

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double at(const Index& idx) const { return values_[flat(idx)]; }

  std::size_t flat(const Index& idx) const;
  Index unflatten(std::size_t flat) const;
  Point cell_center(std::size_t flat) const;
  Box cell_box(std::size_t flat) const;
  Box bounds() const;
  // Flat index of the cell containing x (half-open cells), or size() when x is
  // outside the grid.
  std::size_t locate(const Point& x) const;

  double max_value() const;
  // Integral of the density: sum of values times the cell volume.
  double integral() const;

  GridFunction with_values(std::vector<double> values) const;
  GridFunction pow(double exponent) const;
  GridFunction scaled(double factor) const;

  bool same_lattice(const GridFunction& other) const;

 private:
  int dim_;
  std::array<std::size_t, kMaxDim> shape_{1, 1, 1};
  Point origin_{};
  double h_;
  std::vector<double> values_;
};

// Cumulative sums over cells, one accumulator per lattice corner. Extended
// precision keeps small sub-box sums accurate next to large totals.
class SummedTable {
 public:
  explicit SummedTable(const GridFunction& g);

  int dim() const { return dim_; }
  double cell_size() const { return h_; }
  const Point& origin() const { return origin_; }
  std::size_t extent(int axis) const { return axis < dim_ ? shape_[axis] : 1; }

  // Sum of cell values over the half-open index range [lo, hi).
  long double cell_sum(const Index& lo, const Index& hi) const;
  // Exact integral of the density over a real box (zero outside the grid).
  double box_mass(const Box& box) const;
  // Average over the box; 0 for zero-volume boxes. Inverted boxes throw.
  double box_average(const Box& box) const;

  struct Quadrature {
    double mass = 0.0;
    double volume = 0.0;
    double average() const { return volume > 0.0 ? mass / volume : 0.0; }
  };
  // Boxes, l^inf balls and all bodies in one dimension are integrated exactly.
  // Other balls use subsample^(n-1) transverse lines per cell row with exact
  // integration along axis 0; mass and volume share the same quadrature.
  Quadrature body_quadrature(const Body& body, int subsample = 4) const;
  double body_average(const Body& body, int subsample = 4) const;

 private:
  long double corner(std::size_t i, std::size_t j, std::size_t k) const;
  // Integral of f over [origin, x] with x clamped to the grid.
  long double cumulative(const Point& x) const;
  // Integral along axis 0 of the row of cells with transverse index (j, k).
  double row_integral(std::size_t j, std::size_t k, double a, double b) const;

  int dim_;
  std::array<std::size_t, kMaxDim> shape_{1, 1, 1};
  Point origin_{};
  double h_;
  std::vector<long double> sums_;
};

SummedTable build_table(const GridFunction& g);
double box_average(const SummedTable& table, const Box& box);
double body_average(const GridFunction& g, const Body& body, int subsample = 4);
double lp_norm(const GridFunction& g, double p);
// Measure of {f > t} inside the grid bounding box.
double superlevel_measure(const GridFunction& g, double t);

// ".ggrid" text format: "n N1 .. Nn", "origin_1 .. origin_n h", then values in
// row-major order (last axis fastest).
void write_ggrid(std::ostream& out, const GridFunction& g);
GridFunction read_ggrid(std::istream& in);
void write_ggrid(const std::string& path, const GridFunction& g);
GridFunction read_ggrid(const std::string& path);

}  // namespace maxlab
