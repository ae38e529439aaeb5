#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qlbm/errors.hpp"

namespace qlbm {

using Coord = std::array<int, 3>;

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  int b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

/// Periodic L^d grid with L = 2^bits. Sites are flattened as x + L*y + L^2*z.
struct GridSpec {
  int dim = 3;
  int bits = 0;

  std::size_t side() const { return std::size_t{1} << bits; }
  std::size_t sites() const { return std::size_t{1} << (bits * dim); }
  int qubits() const { return bits * dim; }

  std::size_t index(Coord c) const {
    const std::size_t L = side();
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int a = 0; a < dim; ++a) {
      const auto v = static_cast<std::size_t>(((c[a] % static_cast<int>(L)) + static_cast<int>(L)) %
                                              static_cast<int>(L));
      idx += v * stride;
      stride *= L;
    }
    return idx;
  }

  Coord coords(std::size_t idx) const {
    Coord c{0, 0, 0};
    const std::size_t mask = side() - 1;
    for (int a = 0; a < dim; ++a) {
      c[a] = static_cast<int>(idx & mask);
      idx >>= bits;
    }
    return c;
  }

  /// Index of the site displaced by `delta`, with periodic wrapping.
  std::size_t shifted(std::size_t idx, const Coord& delta) const {
    Coord c = coords(idx);
    for (int a = 0; a < dim; ++a) c[a] += delta[a];
    return index(c);
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec make_grid(int dim, std::size_t side) {
  if (dim != 2 && dim != 3) throw ShapeError("grid dimension must be 2 or 3, got " + std::to_string(dim));
  if (!is_power_of_two(side) || side < 2)
    throw ShapeError("grid side length must be a power of two >= 2, got " + std::to_string(side));
  return GridSpec{dim, log2_exact(side)};
}

/// Real scalar density Phi(r) on a grid.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridSpec g, double fill = 0.0) : grid(g), values(g.sites(), fill) {}
  ScalarField(GridSpec g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.sites()) throw ShapeError("scalar field size does not match grid");
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  double norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
};

/// Vector field u(r); components beyond grid.dim are absent.
struct VelocityField {
  GridSpec grid;
  std::array<std::vector<double>, 3> comp;

  VelocityField() = default;
  explicit VelocityField(GridSpec g) : grid(g) {
    for (int a = 0; a < g.dim; ++a) comp[a].assign(g.sites(), 0.0);
  }

  double operator()(int axis, std::size_t site) const { return comp[axis][site]; }
  double& operator()(int axis, std::size_t site) { return comp[axis][site]; }

  double max_abs() const {
    double m = 0.0;
    for (int a = 0; a < grid.dim; ++a)
      for (double v : comp[a]) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Solid-wall sites (true = wall).
struct WallMask {
  GridSpec grid;
  std::vector<std::uint8_t> solid;

  WallMask() = default;
  explicit WallMask(GridSpec g) : grid(g), solid(g.sites(), 0) {}

  bool operator[](std::size_t i) const { return solid[i] != 0; }
  void set(std::size_t i, bool v = true) { solid[i] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto s : solid) n += s;
    return n;
  }
  bool empty() const { return count() == 0; }
};

}  // namespace qlbm
