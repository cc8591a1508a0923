#ifndef LQG_GRID_HPP
#define LQG_GRID_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lqg {

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

// Regular square grid of n x n cells covering [origin, origin + L]^2.
// Cell (i,j) has center origin + ((i+1/2) dx, (j+1/2) dx), stored row-major
// with i the x index (fast) and j the y index (slow).
struct Grid {
  Vec2 origin{0.0, 0.0};
  double side = 1.0;
  std::uint32_t n = 0;

  double dx() const { return side / double(n); }
  std::int64_t cell_count() const { return std::int64_t(n) * n; }
  std::int64_t index(std::int64_t i, std::int64_t j) const { return j * n + i; }

  Vec2 center(std::int64_t i, std::int64_t j) const {
    const double h = dx();
    return {origin.x + (double(i) + 0.5) * h, origin.y + (double(j) + 0.5) * h};
  }

  bool contains(Vec2 p) const {
    return p.x >= origin.x && p.x <= origin.x + side && p.y >= origin.y &&
           p.y <= origin.y + side;
  }

  // Cell containing p; clamped so boundary points map to edge cells.
  void locate(Vec2 p, std::int64_t& i, std::int64_t& j) const {
    if (!contains(p)) throw std::domain_error("Grid::locate: point outside grid");
    const double h = dx();
    i = std::int64_t((p.x - origin.x) / h);
    j = std::int64_t((p.y - origin.y) / h);
    if (i >= n) i = n - 1;
    if (j >= n) j = n - 1;
    if (i < 0) i = 0;
    if (j < 0) j = 0;
  }

  bool operator==(const Grid&) const = default;
};

}  // namespace lqg

#endif
