#pragma once

#include <array>
#include <cstddef>
#include <string>

#include <json.hpp>

namespace maxlab {

inline constexpr int kMaxDim = 3;

// Coordinates beyond dim() are ignored and kept at zero.
using Point = std::array<double, kMaxDim>;

// Closed axis-parallel box [lo, hi].
struct Box {
  int dim = 1;
  Point lo{};
  Point hi{};

  double side(int axis) const { return hi[axis] - lo[axis]; }
  double volume() const;
  double diameter() const;
  Point center() const;
  bool contains(const Point& x) const;
  // Volume of the intersection with another box (0 when disjoint).
  double overlap_volume(const Box& other) const;
  // True when some side is negative (inverted box).
  bool inverted() const;
  bool empty() const;
};

enum class BodyKind { box, ball1, ball2, ball_inf };

std::string to_string(BodyKind kind);
BodyKind body_kind_from_string(const std::string& name);

// A centrally symmetric convex body: an axis-parallel box or an l^q ball with
// per-axis half widths, i.e. {x : || ((x - c) / a) ||_q <= 1}.
struct Body {
  BodyKind kind = BodyKind::box;
  int dim = 1;
  Point center{};
  Point half_widths{};

  static Body from_box(const Box& box);

  // Homothety about the center.
  Body dilate(double factor) const;
  double volume() const;
  bool contains(const Point& x) const;
  Box bounding_box() const;
  // Half-length of the chord through the transverse point (coordinates of
  // axes 1..dim-1 taken from x) along axis 0; negative when the line misses.
  double chord_half_length(const Point& x) const;
  void validate() const;
};

double distance(const Point& a, const Point& b, int dim);

nlohmann::json to_json(const Box& box);
nlohmann::json to_json(const Body& body);

}  // namespace maxlab
