#pragma once

// Classical lattice Boltzmann advection-diffusion (BGK, tau = 1) on DmQn lattices.
// This is the reference every circuit-level result is checked against.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"

namespace qlbm {

/// DmQn geometry. Direction i >= 1 points along axis (i-1)/2 with sign (-1)^(i+1).
struct LatticeModel {
  std::string name;
  int dim = 0;
  int q = 0;
  std::vector<Coord> c;
  std::vector<double> w;
  double cs = 1.0 / std::numbers::sqrt3;

  /// Axis index of direction i (i >= 1).
  static int axis(int i) { return (i - 1) / 2; }
  /// +1 for odd i, -1 for even i (i >= 1).
  static int sign(int i) { return (i % 2 == 1) ? 1 : -1; }
  /// Index of -c_i.
  static int opposite(int i) { return i == 0 ? 0 : (i % 2 == 1 ? i + 1 : i - 1); }
};

inline LatticeModel build_model(std::string_view name) {
  LatticeModel m;
  m.name = std::string(name);
  if (name == "D2Q5") {
    m.dim = 2;
    m.q = 5;
    m.w = {1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  } else if (name == "D3Q7") {
    m.dim = 3;
    m.q = 7;
    m.w = {1.0 / 4.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0};
  } else {
    throw ConfigError("unsupported lattice model '" + std::string(name) + "' (expected D2Q5 or D3Q7)");
  }
  m.c.assign(m.q, Coord{0, 0, 0});
  for (int i = 1; i < m.q; ++i) m.c[i][LatticeModel::axis(i)] = LatticeModel::sign(i);
  return m;
}

/// nb[i][r] = flattened index of r + c_i (periodic).
inline std::vector<std::vector<std::size_t>> neighbor_table(const GridSpec& grid, const LatticeModel& model) {
  std::vector<std::vector<std::size_t>> nb(model.q, std::vector<std::size_t>(grid.sites()));
  for (int i = 0; i < model.q; ++i)
    for (std::size_t r = 0; r < grid.sites(); ++r) nb[i][r] = grid.shifted(r, model.c[i]);
  return nb;
}

/// Per-site collision weights k_i(r), stored row-major as k[r * q + i].
struct KernelField {
  GridSpec grid;
  int q = 0;
  std::vector<double> k;

  double operator()(std::size_t site, int i) const { return k[site * q + i]; }
  double& operator()(std::size_t site, int i) { return k[site * q + i]; }
};

inline constexpr double kMaxSpeed = 1.0 / 3.0;

inline void check_speed_bound(const VelocityField& u) {
  const double m = u.max_abs();
  if (!(m <= kMaxSpeed + 1e-12))
    throw DomainError("velocity component magnitude " + std::to_string(m) + " exceeds 1/3");
}

/// Central-difference divergence, periodic.
inline ScalarField discrete_divergence(const VelocityField& u) {
  const GridSpec& g = u.grid;
  ScalarField div(g);
  for (std::size_t r = 0; r < g.sites(); ++r) {
    double d = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      Coord e{0, 0, 0};
      e[a] = 1;
      Coord me{0, 0, 0};
      me[a] = -1;
      d += 0.5 * (u(a, g.shifted(r, e)) - u(a, g.shifted(r, me)));
    }
    div[r] = d;
  }
  return div;
}

inline double max_abs_divergence(const VelocityField& u) {
  const ScalarField d = discrete_divergence(u);
  double m = 0.0;
  for (double v : d.values) m = std::max(m, std::abs(v));
  return m;
}

/// k_i(r) = w_i [1 + 3 c_i . u(r)]. With walls, flow toward a wall is folded into k_0
/// and wall sites get the identity kernel (k_0 = 1).
inline KernelField collision_kernels(const LatticeModel& model, const VelocityField& u,
                                     const WallMask* walls = nullptr) {
  if (u.grid.dim != model.dim) throw ShapeError("velocity field dimension does not match lattice model");
  if (walls && !(walls->grid == u.grid)) throw ShapeError("wall mask grid does not match velocity grid");
  check_speed_bound(u);
  const GridSpec& g = u.grid;
  KernelField kf{g, model.q, std::vector<double>(g.sites() * model.q)};
  for (std::size_t r = 0; r < g.sites(); ++r) {
    for (int i = 0; i < model.q; ++i) {
      double cu = 0.0;
      if (i > 0) cu = LatticeModel::sign(i) * u(LatticeModel::axis(i), r);
      kf(r, i) = std::max(0.0, model.w[i] * (1.0 + 3.0 * cu));
    }
  }
  if (walls) {
    for (std::size_t r = 0; r < g.sites(); ++r) {
      if ((*walls)[r]) {
        for (int i = 0; i < model.q; ++i) kf(r, i) = (i == 0) ? 1.0 : 0.0;
        continue;
      }
      for (int i = 1; i < model.q; ++i) {
        if ((*walls)[g.shifted(r, model.c[i])]) {
          kf(r, 0) += kf(r, i);
          kf(r, i) = 0.0;
        }
      }
    }
  }
  return kf;
}

/// One BGK step with tau = 1: Phi'(r) = sum_i k_i(r - c_i) Phi(r - c_i).
inline ScalarField classical_step(const ScalarField& phi, const KernelField& kernels, const LatticeModel& model) {
  if (!(phi.grid == kernels.grid) || kernels.q != model.q)
    throw ShapeError("density and kernel fields are defined on different grids");
  const GridSpec& g = phi.grid;
  ScalarField out(g);
  std::vector<Coord> back(model.q);
  for (int i = 0; i < model.q; ++i)
    for (int a = 0; a < 3; ++a) back[i][a] = -model.c[i][a];
  for (std::size_t r = 0; r < g.sites(); ++r) {
    double acc = 0.0;
    for (int i = 0; i < model.q; ++i) {
      const std::size_t s = g.shifted(r, back[i]);
      acc += kernels(s, i) * phi[s];
    }
    out[r] = acc;
  }
  return out;
}

inline std::vector<ScalarField> simulate_classical(const ScalarField& phi0, const VelocityField& u,
                                                   const LatticeModel& model, int steps,
                                                   const WallMask* walls = nullptr) {
  if (steps < 0) throw DomainError("step count must be non-negative");
  const KernelField k = collision_kernels(model, u, walls);
  std::vector<ScalarField> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);
  traj.push_back(phi0);
  for (int t = 0; t < steps; ++t) traj.push_back(classical_step(traj.back(), k, model));
  return traj;
}

// ---------------------------------------------------------------------------
// Velocity presets

inline VelocityField zero_velocity(const GridSpec& g) { return VelocityField(g); }

inline VelocityField constant_velocity(const GridSpec& g, const std::array<double, 3>& v) {
  VelocityField u(g);
  for (int a = 0; a < g.dim; ++a) std::fill(u.comp[a].begin(), u.comp[a].end(), v[a]);
  return u;
}

/// u = A(-sin(2 pi y / L), sin(2 pi x / L), 0).
inline VelocityField swirl_velocity(const GridSpec& g, double amplitude = 0.2) {
  VelocityField u(g);
  const double k = 2.0 * std::numbers::pi / static_cast<double>(g.side());
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord c = g.coords(r);
    u(0, r) = -amplitude * std::sin(k * c[1]);
    u(1, r) = amplitude * std::sin(k * c[0]);
  }
  return u;
}

/// u = (A sin(2 pi y / L), 0, 0).
inline VelocityField shear_velocity(const GridSpec& g, double amplitude = 1.0 / 3.0) {
  VelocityField u(g);
  const double k = 2.0 * std::numbers::pi / static_cast<double>(g.side());
  for (std::size_t r = 0; r < g.sites(); ++r) u(0, r) = amplitude * std::sin(k * g.coords(r)[1]);
  return u;
}

/// Plug flow along x in every x-line that contains no wall site; zero elsewhere.
/// u_x depends only on the transverse coordinates, so the field is discretely divergence-free.
inline VelocityField channel_velocity(const WallMask& walls, double speed) {
  const GridSpec& g = walls.grid;
  VelocityField u(g);
  const std::size_t L = g.side();
  const std::size_t lines = g.sites() / L;
  for (std::size_t line = 0; line < lines; ++line) {
    bool blocked = false;
    for (std::size_t x = 0; x < L && !blocked; ++x) blocked = walls[line * L + x];
    if (blocked) continue;
    for (std::size_t x = 0; x < L; ++x) u(0, line * L + x) = speed;
  }
  return u;
}

/// Curl of an i.i.d. Gaussian potential (central differences), rescaled so max |u_a| = max_abs.
inline VelocityField random_divergence_free(const GridSpec& g, double max_abs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto central = [&](const std::vector<double>& f, std::size_t r, int axis) {
    Coord e{0, 0, 0};
    e[axis] = 1;
    Coord me{0, 0, 0};
    me[axis] = -1;
    return 0.5 * (f[g.shifted(r, e)] - f[g.shifted(r, me)]);
  };
  VelocityField u(g);
  if (g.dim == 2) {
    std::vector<double> psi(g.sites());
    for (auto& v : psi) v = nd(rng);
    for (std::size_t r = 0; r < g.sites(); ++r) {
      u(0, r) = central(psi, r, 1);
      u(1, r) = -central(psi, r, 0);
    }
  } else {
    std::array<std::vector<double>, 3> psi;
    for (auto& p : psi) {
      p.resize(g.sites());
      for (auto& v : p) v = nd(rng);
    }
    for (std::size_t r = 0; r < g.sites(); ++r) {
      u(0, r) = central(psi[2], r, 1) - central(psi[1], r, 2);
      u(1, r) = central(psi[0], r, 2) - central(psi[2], r, 0);
      u(2, r) = central(psi[1], r, 0) - central(psi[0], r, 1);
    }
  }
  const double m = u.max_abs();
  if (m > 0.0)
    for (int a = 0; a < g.dim; ++a)
      for (auto& v : u.comp[a]) v *= max_abs / m;
  return u;
}

// ---------------------------------------------------------------------------
// Initial conditions

/// Isotropic Gaussian with periodic minimum-image distance, normalized to unit L2 norm.
inline ScalarField gaussian_field(const GridSpec& g, double sigma, std::optional<std::array<double, 3>> center = {},
                                  double background = 0.0) {
  if (!(sigma > 0.0)) throw DomainError("gaussian sigma must be positive");
  const double L = static_cast<double>(g.side());
  std::array<double, 3> c0 = center.value_or(std::array<double, 3>{L / 2, L / 2, L / 2});
  ScalarField f(g);
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord c = g.coords(r);
    double d2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      double d = std::fmod(std::abs(c[a] - c0[a]), L);
      d = std::min(d, L - d);
      d2 += d * d;
    }
    f[r] = background + std::exp(-d2 / (2.0 * sigma * sigma));
  }
  const double n = f.norm();
  for (auto& v : f.values) v /= n;
  return f;
}

inline ScalarField delta_field(const GridSpec& g, std::size_t site) {
  ScalarField f(g);
  f[site] = 1.0;
  return f;
}

inline ScalarField uniform_field(const GridSpec& g) {
  return ScalarField(g, 1.0 / std::sqrt(static_cast<double>(g.sites())));
}

inline void zero_walls(ScalarField& f, const WallMask& walls) {
  for (std::size_t r = 0; r < f.size(); ++r)
    if (walls[r]) f[r] = 0.0;
}

}  // namespace qlbm
