#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dynres {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 &operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2 &operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2 &) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

using PointList = std::vector<Vec2>;

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Rect {
  Vec2 lo;
  Vec2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  bool contains(Vec2 p, double inflate = 0.0) const {
    return p.x >= lo.x - inflate && p.x <= hi.x + inflate &&
           p.y >= lo.y - inflate && p.y <= hi.y + inflate;
  }
  Vec2 clamp(Vec2 p) const {
    return {std::fmin(std::fmax(p.x, lo.x), hi.x),
            std::fmin(std::fmax(p.y, lo.y), hi.y)};
  }
};

/// Meter <-> pixel mapping for an H x W grid laid over a workspace rectangle.
/// Pixel coordinates are continuous: cell (row r, col c) spans
/// [c, c+1) x [r, r+1) and its center is (c + 0.5, r + 0.5).
struct PixelTransform {
  Vec2 origin;             // meters at pixel (0, 0)
  double cell_size = 1.0;  // meters per pixel
  int rows = 0;
  int cols = 0;

  Vec2 to_pixel(Vec2 m) const {
    return {(m.x - origin.x) / cell_size, (m.y - origin.y) / cell_size};
  }
  Vec2 to_meter(Vec2 px) const {
    return {origin.x + px.x * cell_size, origin.y + px.y * cell_size};
  }
  Vec2 cell_center(int row, int col) const { return {col + 0.5, row + 0.5}; }
  bool operator==(const PixelTransform &) const = default;
};

inline Vec2 centroid(const PointList &pts) {
  Vec2 s;
  for (const auto &p : pts) s += p;
  if (pts.empty()) return s;
  return s * (1.0 / static_cast<double>(pts.size()));
}

}  // namespace dynres
