#include "maxlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "maxlab/error.hpp"

namespace maxlab {

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= std::max(0.0, side(i));
  return v;
}

double Box::diameter() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += side(i) * side(i);
  return std::sqrt(s);
}

Point Box::center() const {
  Point c{};
  for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

bool Box::contains(const Point& x) const {
  for (int i = 0; i < dim; ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

double Box::overlap_volume(const Box& other) const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) {
    const double a = std::max(lo[i], other.lo[i]);
    const double b = std::min(hi[i], other.hi[i]);
    if (b <= a) return 0.0;
    v *= b - a;
  }
  return v;
}

bool Box::inverted() const {
  for (int i = 0; i < dim; ++i) {
    if (hi[i] < lo[i]) return true;
  }
  return false;
}

bool Box::empty() const {
  for (int i = 0; i < dim; ++i) {
    if (!(hi[i] > lo[i])) return true;
  }
  return false;
}

std::string to_string(BodyKind kind) {
  switch (kind) {
    case BodyKind::box: return "box";
    case BodyKind::ball1: return "ball1";
    case BodyKind::ball2: return "ball2";
    case BodyKind::ball_inf: return "ball_inf";
  }
  return "box";
}

BodyKind body_kind_from_string(const std::string& name) {
  if (name == "box") return BodyKind::box;
  if (name == "ball1") return BodyKind::ball1;
  if (name == "ball2") return BodyKind::ball2;
  if (name == "ball_inf") return BodyKind::ball_inf;
  throw Error(ErrorKind::configuration, "unknown body kind '" + name + "'");
}

Body Body::from_box(const Box& box) {
  Body b;
  b.kind = BodyKind::box;
  b.dim = box.dim;
  for (int i = 0; i < box.dim; ++i) {
    b.center[i] = 0.5 * (box.lo[i] + box.hi[i]);
    b.half_widths[i] = 0.5 * (box.hi[i] - box.lo[i]);
  }
  return b;
}

Body Body::dilate(double factor) const {
  Body b = *this;
  for (int i = 0; i < dim; ++i) b.half_widths[i] *= factor;
  return b;
}

double Body::volume() const {
  double prod = 1.0;
  for (int i = 0; i < dim; ++i) prod *= half_widths[i];
  switch (kind) {
    case BodyKind::box:
    case BodyKind::ball_inf:
      return std::pow(2.0, dim) * prod;
    case BodyKind::ball1: {
      double fact = 1.0;
      for (int i = 2; i <= dim; ++i) fact *= i;
      return std::pow(2.0, dim) / fact * prod;
    }
    case BodyKind::ball2:
      if (dim == 1) return 2.0 * prod;
      if (dim == 2) return std::numbers::pi * prod;
      return 4.0 / 3.0 * std::numbers::pi * prod;
  }
  return 0.0;
}

bool Body::contains(const Point& x) const {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double u = std::abs(x[i] - center[i]) / half_widths[i];
    switch (kind) {
      case BodyKind::box:
      case BodyKind::ball_inf:
        if (u > 1.0) return false;
        break;
      case BodyKind::ball1: acc += u; break;
      case BodyKind::ball2: acc += u * u; break;
    }
  }
  return acc <= 1.0;
}

Box Body::bounding_box() const {
  Box b;
  b.dim = dim;
  for (int i = 0; i < dim; ++i) {
    b.lo[i] = center[i] - half_widths[i];
    b.hi[i] = center[i] + half_widths[i];
  }
  return b;
}

double Body::chord_half_length(const Point& x) const {
  double acc = 0.0;
  for (int i = 1; i < dim; ++i) {
    const double u = std::abs(x[i] - center[i]) / half_widths[i];
    switch (kind) {
      case BodyKind::box:
      case BodyKind::ball_inf:
        if (u > 1.0) return -1.0;
        break;
      case BodyKind::ball1: acc += u; break;
      case BodyKind::ball2: acc += u * u; break;
    }
  }
  if (acc > 1.0) return -1.0;
  switch (kind) {
    case BodyKind::box:
    case BodyKind::ball_inf: return half_widths[0];
    case BodyKind::ball1: return half_widths[0] * (1.0 - acc);
    case BodyKind::ball2: return half_widths[0] * std::sqrt(1.0 - acc);
  }
  return -1.0;
}

void Body::validate() const {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorKind::dimension, "body dimension must be 1..3");
  }
  for (int i = 0; i < dim; ++i) {
    if (!(half_widths[i] > 0.0) || !std::isfinite(half_widths[i])) {
      throw Error(ErrorKind::invalid_body, "body half widths must be positive");
    }
    if (!std::isfinite(center[i])) {
      throw Error(ErrorKind::invalid_body, "body center must be finite");
    }
  }
}

double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

namespace {
nlohmann::json point_json(const Point& p, int dim) {
  auto arr = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) arr.push_back(p[i]);
  return arr;
}
}  // namespace

nlohmann::json to_json(const Box& box) {
  return {{"lo", point_json(box.lo, box.dim)}, {"hi", point_json(box.hi, box.dim)}};
}

nlohmann::json to_json(const Body& body) {
  return {{"kind", to_string(body.kind)},
          {"center", point_json(body.center, body.dim)},
          {"half_widths", point_json(body.half_widths, body.dim)}};
}

}  // namespace maxlab
