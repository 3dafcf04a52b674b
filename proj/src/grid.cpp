#include "maxlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "maxlab/error.hpp"

namespace maxlab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

GridFunction::GridFunction(std::vector<std::size_t> shape, Point origin,
                           double cell_size, std::vector<double> values)
    : dim_(static_cast<int>(shape.size())),
      origin_(origin),
      h_(cell_size),
      values_(std::move(values)) {
  if (dim_ < 1 || dim_ > kMaxDim) {
    throw Error(ErrorKind::dimension, "grid dimension must be 1, 2 or 3");
  }
  std::size_t total = 1;
  for (int i = 0; i < dim_; ++i) {
    if (shape[i] < 1) throw Error(ErrorKind::invalid_parameter, "grid shape entries must be >= 1");
    shape_[i] = shape[i];
    total *= shape[i];
  }
  for (int i = dim_; i < kMaxDim; ++i) origin_[i] = 0.0;
  if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw Error(ErrorKind::invalid_parameter, "cell size must be positive");
  }
  if (values_.size() != total) {
    throw Error(ErrorKind::invalid_parameter,
                "expected " + std::to_string(total) + " values, got " +
                    std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::invalid_parameter, "grid values must be finite and nonnegative");
    }
  }
}

GridFunction GridFunction::zeros(std::vector<std::size_t> shape, Point origin,
                                 double cell_size) {
  std::size_t total = 1;
  for (auto n : shape) total *= n;
  return GridFunction(std::move(shape), origin, cell_size, std::vector<double>(total, 0.0));
}

GridFunction GridFunction::sample(std::vector<std::size_t> shape, Point origin,
                                  double cell_size,
                                  const std::function<double(const Point&)>& fn) {
  GridFunction g = zeros(std::move(shape), origin, cell_size);
  for (std::size_t c = 0; c < g.size(); ++c) g.values_[c] = fn(g.cell_center(c));
  return g.with_values(std::move(g.values_));
}

std::vector<std::size_t> GridFunction::shape() const {
  return {shape_.begin(), shape_.begin() + dim_};
}

double GridFunction::cell_volume() const { return std::pow(h_, dim_); }

std::size_t GridFunction::flat(const Index& idx) const {
  return (idx[0] * shape_[1] + idx[1]) * shape_[2] + idx[2];
}

Index GridFunction::unflatten(std::size_t flat) const {
  Index idx{};
  idx[2] = flat % shape_[2];
  flat /= shape_[2];
  idx[1] = flat % shape_[1];
  idx[0] = flat / shape_[1];
  return idx;
}

Point GridFunction::cell_center(std::size_t flat) const {
  const Index idx = unflatten(flat);
  Point c{};
  for (int i = 0; i < dim_; ++i) c[i] = origin_[i] + (static_cast<double>(idx[i]) + 0.5) * h_;
  return c;
}

Box GridFunction::cell_box(std::size_t flat) const {
  const Index idx = unflatten(flat);
  Box b;
  b.dim = dim_;
  for (int i = 0; i < dim_; ++i) {
    b.lo[i] = origin_[i] + static_cast<double>(idx[i]) * h_;
    b.hi[i] = origin_[i] + static_cast<double>(idx[i] + 1) * h_;
  }
  return b;
}

Box GridFunction::bounds() const {
  Box b;
  b.dim = dim_;
  for (int i = 0; i < dim_; ++i) {
    b.lo[i] = origin_[i];
    b.hi[i] = origin_[i] + static_cast<double>(shape_[i]) * h_;
  }
  return b;
}

std::size_t GridFunction::locate(const Point& x) const {
  Index idx{};
  for (int i = 0; i < dim_; ++i) {
    const double u = std::floor((x[i] - origin_[i]) / h_);
    if (u < 0.0 || u >= static_cast<double>(shape_[i])) return size();
    idx[i] = static_cast<std::size_t>(u);
  }
  return flat(idx);
}

double GridFunction::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double GridFunction::integral() const {
  long double s = 0.0L;
  for (double v : values_) s += v;
  return static_cast<double>(s) * cell_volume();
}

GridFunction GridFunction::with_values(std::vector<double> values) const {
  return GridFunction(shape(), origin_, h_, std::move(values));
}

GridFunction GridFunction::pow(double exponent) const {
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(values_[i], exponent);
  return with_values(std::move(v));
}

GridFunction GridFunction::scaled(double factor) const {
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] * factor;
  return with_values(std::move(v));
}

bool GridFunction::same_lattice(const GridFunction& other) const {
  return dim_ == other.dim_ && shape_ == other.shape_ && origin_ == other.origin_ &&
         h_ == other.h_;
}

// ---------------------------------------------------------------------------

SummedTable::SummedTable(const GridFunction& g)
    : dim_(g.dim()), origin_(g.origin()), h_(g.cell_size()) {
  for (int i = 0; i < kMaxDim; ++i) shape_[i] = g.extent(i);
  const std::size_t n0 = shape_[0] + 1, n1 = shape_[1] + 1, n2 = shape_[2] + 1;
  sums_.assign(n0 * n1 * n2, 0.0L);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> long double& {
    return sums_[(i * n1 + j) * n2 + k];
  };
  for (std::size_t i = 1; i < n0; ++i) {
    for (std::size_t j = 1; j < n1; ++j) {
      for (std::size_t k = 1; k < n2; ++k) {
        const long double v = g.at({i - 1, j - 1, k - 1});
        at(i, j, k) = v + at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) -
                      at(i - 1, j - 1, k) - at(i - 1, j, k - 1) - at(i, j - 1, k - 1) +
                      at(i - 1, j - 1, k - 1);
      }
    }
  }
}

long double SummedTable::corner(std::size_t i, std::size_t j, std::size_t k) const {
  return sums_[(i * (shape_[1] + 1) + j) * (shape_[2] + 1) + k];
}

long double SummedTable::cell_sum(const Index& lo, const Index& hi) const {
  for (int a = 0; a < kMaxDim; ++a) {
    if (hi[a] <= lo[a]) return 0.0L;
  }
  return corner(hi[0], hi[1], hi[2]) - corner(lo[0], hi[1], hi[2]) -
         corner(hi[0], lo[1], hi[2]) - corner(hi[0], hi[1], lo[2]) +
         corner(lo[0], lo[1], hi[2]) + corner(lo[0], hi[1], lo[2]) +
         corner(hi[0], lo[1], lo[2]) - corner(lo[0], lo[1], lo[2]);
}

long double SummedTable::cumulative(const Point& x) const {
  std::array<std::size_t, kMaxDim> cell{0, 0, 0};
  std::array<long double, kMaxDim> frac{1.0L, 1.0L, 1.0L};
  for (int a = 0; a < dim_; ++a) {
    const long double u = (static_cast<long double>(x[a]) - origin_[a]) / h_;
    const long double n = static_cast<long double>(shape_[a]);
    if (u <= 0.0L) {
      return 0.0L;
    } else if (u >= n) {
      cell[a] = shape_[a] - 1;
      frac[a] = 1.0L;
    } else {
      const long double c = std::floor(u);
      cell[a] = static_cast<std::size_t>(c);
      frac[a] = u - c;
    }
  }
  long double acc = 0.0L;
  for (int bits = 0; bits < 8; ++bits) {
    long double w = 1.0L;
    std::array<std::size_t, kMaxDim> idx{};
    for (int a = 0; a < kMaxDim; ++a) {
      const int b = (bits >> a) & 1;
      w *= b ? frac[a] : 1.0L - frac[a];
      idx[a] = cell[a] + static_cast<std::size_t>(b);
    }
    if (w != 0.0L) acc += w * corner(idx[0], idx[1], idx[2]);
  }
  return acc;
}

double SummedTable::box_mass(const Box& box) const {
  if (box.empty()) return 0.0;
  long double acc = 0.0L;
  const int corners = 1 << dim_;
  for (int bits = 0; bits < corners; ++bits) {
    Point x{};
    int sign = 1;
    for (int a = 0; a < dim_; ++a) {
      if ((bits >> a) & 1) {
        x[a] = box.hi[a];
      } else {
        x[a] = box.lo[a];
        sign = -sign;
      }
    }
    acc += sign * cumulative(x);
  }
  // Exact arithmetic gives a nonnegative result; clamp rounding noise.
  return std::max(0.0, static_cast<double>(acc * std::pow(static_cast<long double>(h_), dim_)));
}

double SummedTable::box_average(const Box& box) const {
  if (box.inverted()) {
    throw Error(ErrorKind::invalid_region, "box has a side with lo > hi");
  }
  const double vol = box.volume();
  if (vol <= 0.0) return 0.0;
  return box_mass(box) / vol;
}

double SummedTable::row_integral(std::size_t j, std::size_t k, double a, double b) const {
  const double lo = origin_[0];
  const double hi = origin_[0] + static_cast<double>(shape_[0]) * h_;
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(b > a)) return 0.0;
  const auto cell_of = [&](double x) {
    const double u = std::floor((x - lo) / h_);
    return static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(shape_[0] - 1)));
  };
  const std::size_t ca = cell_of(a);
  const std::size_t cb = cell_of(b);
  const auto value = [&](std::size_t c) {
    return static_cast<double>(cell_sum({c, j, k}, {c + 1, j + 1, k + 1}));
  };
  if (ca == cb) return value(ca) * (b - a);
  const double left = value(ca) * (lo + static_cast<double>(ca + 1) * h_ - a);
  const double right = value(cb) * (b - (lo + static_cast<double>(cb) * h_));
  const double middle = static_cast<double>(cell_sum({ca + 1, j, k}, {cb, j + 1, k + 1})) * h_;
  return left + middle + right;
}

SummedTable::Quadrature SummedTable::body_quadrature(const Body& body, int subsample) const {
  body.validate();
  if (body.dim != dim_) throw Error(ErrorKind::dimension, "body and grid dimensions differ");
  if (subsample < 1) throw Error(ErrorKind::invalid_parameter, "subsample must be >= 1");
  Quadrature q;
  if (body.kind == BodyKind::box || body.kind == BodyKind::ball_inf || dim_ == 1) {
    const Box box = body.bounding_box();
    q.volume = box.volume();
    q.mass = box_mass(box);
    return q;
  }
  const double step = h_ / subsample;
  const double weight = std::pow(step, dim_ - 1);
  std::array<std::int64_t, kMaxDim> kmin{0, 0, 0}, kmax{0, 0, 0};
  for (int a = 1; a < dim_; ++a) {
    kmin[a] = static_cast<std::int64_t>(
        std::ceil((body.center[a] - body.half_widths[a] - origin_[a]) / step - 0.5));
    kmax[a] = static_cast<std::int64_t>(
        std::floor((body.center[a] + body.half_widths[a] - origin_[a]) / step - 0.5));
  }
  long double mass = 0.0L, volume = 0.0L;
  const std::int64_t s = subsample;
  for (std::int64_t k1 = kmin[1]; k1 <= kmax[1]; ++k1) {
    for (std::int64_t k2 = kmin[2]; k2 <= kmax[2]; ++k2) {
      Point x{};
      x[1] = origin_[1] + (static_cast<double>(k1) + 0.5) * step;
      if (dim_ > 2) x[2] = origin_[2] + (static_cast<double>(k2) + 0.5) * step;
      const double half = body.chord_half_length(x);
      if (half < 0.0) continue;
      volume += 2.0L * half;
      const std::int64_t j = floor_div(k1, s);
      const std::int64_t k = dim_ > 2 ? floor_div(k2, s) : 0;
      if (j < 0 || j >= static_cast<std::int64_t>(shape_[1])) continue;
      if (k < 0 || k >= static_cast<std::int64_t>(shape_[2])) continue;
      mass += row_integral(static_cast<std::size_t>(j), static_cast<std::size_t>(k),
                           body.center[0] - half, body.center[0] + half);
    }
  }
  q.mass = static_cast<double>(mass) * weight;
  q.volume = static_cast<double>(volume) * weight;
  return q;
}

double SummedTable::body_average(const Body& body, int subsample) const {
  return body_quadrature(body, subsample).average();
}

SummedTable build_table(const GridFunction& g) { return SummedTable(g); }

double box_average(const SummedTable& table, const Box& box) { return table.box_average(box); }

double body_average(const GridFunction& g, const Body& body, int subsample) {
  return SummedTable(g).body_average(body, subsample);
}

double lp_norm(const GridFunction& g, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw Error(ErrorKind::invalid_exponent, "lp_norm requires p > 1");
  }
  long double s = 0.0L;
  for (double v : g.values()) {
    if (v == 0.0) continue;
    const long double x = v;
    s += p == 2.0 ? x * x : std::pow(x, static_cast<long double>(p));
  }
  return static_cast<double>(std::pow(s * g.cell_volume(), 1.0L / p));
}

double superlevel_measure(const GridFunction& g, double t) {
  std::size_t count = 0;
  for (double v : g.values()) count += v > t ? 1 : 0;
  return static_cast<double>(count) * g.cell_volume();
}

// ---------------------------------------------------------------------------

void write_ggrid(std::ostream& out, const GridFunction& g) {
  out << g.dim();
  for (int i = 0; i < g.dim(); ++i) out << ' ' << g.extent(i);
  out << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < g.dim(); ++i) out << g.origin()[i] << ' ';
  out << g.cell_size() << '\n';
  const std::size_t row = g.extent(g.dim() - 1);
  for (std::size_t c = 0; c < g.size(); ++c) {
    out << g[c] << ((c + 1) % row == 0 ? '\n' : ' ');
  }
}

GridFunction read_ggrid(std::istream& in) {
  int dim = 0;
  if (!(in >> dim) || dim < 1 || dim > kMaxDim) {
    throw Error(ErrorKind::io, "ggrid: bad dimension header");
  }
  std::vector<std::size_t> shape(dim);
  std::size_t total = 1;
  for (auto& n : shape) {
    long long v = 0;
    if (!(in >> v) || v < 1) throw Error(ErrorKind::io, "ggrid: bad shape header");
    n = static_cast<std::size_t>(v);
    total *= n;
  }
  Point origin{};
  for (int i = 0; i < dim; ++i) {
    if (!(in >> origin[i])) throw Error(ErrorKind::io, "ggrid: bad origin");
  }
  double h = 0.0;
  if (!(in >> h)) throw Error(ErrorKind::io, "ggrid: bad cell size");
  std::vector<double> values(total);
  for (auto& v : values) {
    if (!(in >> v)) throw Error(ErrorKind::io, "ggrid: truncated values");
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorKind::io, "ggrid: trailing data");
  return GridFunction(std::move(shape), origin, h, std::move(values));
}

void write_ggrid(const std::string& path, const GridFunction& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  write_ggrid(out, g);
}

GridFunction read_ggrid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  return read_ggrid(in);
}

}  // namespace maxlab
