#pragma once

// Rotation angles that load the collision weights into the direction register.
// Prep:   g^P_a(r) = arccos sqrt((1 + 3 u_a(r)) / 2)
// Unprep: per-axis splits g^Q_a and the axis-selection angles g^Q_lambda, g^Q_mu.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/lattice.hpp"

namespace qlbm {

/// One angle (radians, in [0, pi/2]) per site.
struct AngleField {
  GridSpec grid;
  std::vector<double> values;
};

namespace detail {

/// arccos(sqrt(x)) with a small tolerance for round-off at the ends of [0, 1].
inline double arccos_sqrt(double x, const char* what) {
  constexpr double tol = 1e-12;
  if (!(x >= -tol && x <= 1.0 + tol))
    throw DomainError(std::string(what) + ": arccos argument " + std::to_string(x) + " outside [0, 1]");
  return std::acos(std::sqrt(std::clamp(x, 0.0, 1.0)));
}

/// u_a(r - e_a) - u_a(r + e_a)
inline double axis_jump(const VelocityField& u, std::size_t r, int axis) {
  Coord e{0, 0, 0};
  e[axis] = 1;
  Coord me{0, 0, 0};
  me[axis] = -1;
  return u(axis, u.grid.shifted(r, me)) - u(axis, u.grid.shifted(r, e));
}

inline double behind(const VelocityField& u, std::size_t r, int axis) {
  Coord me{0, 0, 0};
  me[axis] = -1;
  return u(axis, u.grid.shifted(r, me));
}

}  // namespace detail

inline AngleField prep_angles(const VelocityField& u, int axis) {
  if (axis < 0 || axis >= u.grid.dim) throw ShapeError("axis out of range for velocity field");
  AngleField f{u.grid, std::vector<double>(u.grid.sites())};
  for (std::size_t r = 0; r < u.grid.sites(); ++r)
    f.values[r] = detail::arccos_sqrt((1.0 + 3.0 * u(axis, r)) / 2.0, "g^P");
  return f;
}

struct UnprepAngles {
  std::vector<AngleField> pair;  // g^Q_x, g^Q_y[, g^Q_z]
  AngleField lambda;             // separates the x pair from the remaining axes
  AngleField mu;                 // separates y from z (3D only; empty in 2D)
};

/// The 2D variant uses the same construction with D2Q5 weights:
/// g^Q_lambda = arccos sqrt((2 + 3 dx) / 4), and no mu.
inline UnprepAngles unprep_angles(const VelocityField& u) {
  const GridSpec& g = u.grid;
  UnprepAngles out;
  for (int a = 0; a < g.dim; ++a) {
    AngleField f{g, std::vector<double>(g.sites())};
    for (std::size_t r = 0; r < g.sites(); ++r) {
      const double den = 2.0 + 3.0 * detail::axis_jump(u, r, a);
      if (!(den > 1e-15)) throw DomainError("g^Q denominator is not positive");
      f.values[r] = detail::arccos_sqrt((1.0 + 3.0 * detail::behind(u, r, a)) / den, "g^Q");
    }
    out.pair.push_back(std::move(f));
  }
  out.lambda = AngleField{g, std::vector<double>(g.sites())};
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const double dx = detail::axis_jump(u, r, 0);
    out.lambda.values[r] = detail::arccos_sqrt((2.0 + 3.0 * dx) / (g.dim == 3 ? 6.0 : 4.0), "g^Q_lambda");
  }
  if (g.dim == 3) {
    out.mu = AngleField{g, std::vector<double>(g.sites())};
    for (std::size_t r = 0; r < g.sites(); ++r) {
      const double dx = detail::axis_jump(u, r, 0);
      const double dy = detail::axis_jump(u, r, 1);
      out.mu.values[r] = detail::arccos_sqrt((2.0 + 3.0 * dy) / (4.0 - 3.0 * dx), "g^Q_mu");
    }
  }
  return out;
}

}  // namespace qlbm
