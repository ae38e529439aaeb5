#pragma once

// Wall boundaries: which neighbors of a fluid site are solid, and the direction-register
// rotations that fold blocked streaming weight back into the rest direction.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/statevector.hpp"

namespace qlbm {

/// Per-site 2d-bit pattern; bit (i-1) is set iff r + c_i is a wall. Wall sites carry 0.
struct WallFlags {
  GridSpec grid;
  int directions = 0;  // 2d
  std::vector<std::uint8_t> pattern;

  std::uint8_t operator[](std::size_t r) const { return pattern[r]; }
};

inline WallFlags wall_flags(const WallMask& mask, const LatticeModel& model) {
  if (mask.grid.dim != model.dim) throw ShapeError("wall mask dimension does not match lattice model");
  const GridSpec& g = mask.grid;
  WallFlags f{g, model.q - 1, std::vector<std::uint8_t>(g.sites(), 0)};
  for (std::size_t r = 0; r < g.sites(); ++r) {
    if (mask[r]) continue;
    std::uint8_t bits = 0;
    for (int i = 1; i < model.q; ++i)
      if (mask[g.shifted(r, model.c[i])]) bits |= static_cast<std::uint8_t>(1u << (i - 1));
    f.pattern[r] = bits;
  }
  return f;
}

/// Swap each +/- pair: bit (i-1) of the result is set iff r - c_i is a wall.
inline std::uint8_t mirror_pattern(std::uint8_t p, int directions) {
  std::uint8_t out = 0;
  for (int i = 1; i <= directions; ++i)
    if (p & (1u << (i - 1))) out |= static_cast<std::uint8_t>(1u << (LatticeModel::opposite(i) - 1));
  return out;
}

struct CorrectionRotation {
  int direction = 0;  // blocked direction j; the rotation acts on (|0_H>, |j_H>)
  double angle = 0.0;
};

/// Rotation sequence for every possible flag pattern.
struct CorrectionPlan {
  int directions = 0;
  std::vector<std::vector<CorrectionRotation>> by_pattern;  // indexed by pattern, size 2^(2d)

  const std::vector<CorrectionRotation>& at(std::uint8_t pattern) const {
    if (pattern >= by_pattern.size()) throw InternalError("wall pattern " + std::to_string(pattern) + " missing from plan");
    return by_pattern[pattern];
  }
};

/// For each pattern, rotate each blocked |j_H> (ascending j) into |0_H>. The angle
/// arcsin(a_j / sqrt(acc^2 + a_j^2)) zeroes a_j = sqrt(w_j) given the rest amplitude acc
/// accumulated so far, so corner patterns are zeroed exactly.
inline CorrectionPlan build_correction_plan(const LatticeModel& model) {
  if (model.name != "D2Q5" && model.name != "D3Q7")
    throw ConfigError("no wall correction plan for model '" + model.name + "'");
  const int dirs = model.q - 1;
  CorrectionPlan plan{dirs, std::vector<std::vector<CorrectionRotation>>(std::size_t{1} << dirs)};
  for (std::size_t p = 0; p < plan.by_pattern.size(); ++p) {
    double acc2 = model.w[0];
    for (int j = 1; j <= dirs; ++j) {
      if (!(p & (std::size_t{1} << (j - 1)))) continue;
      const double aj2 = model.w[j];
      plan.by_pattern[p].push_back({j, std::asin(std::sqrt(aj2 / (acc2 + aj2)))});
      acc2 += aj2;
    }
  }
  return plan;
}

enum class CorrectionStage { Prep, Unprep };

/// Per-direction angle tables: table[j-1][r] is the RBS(|0_H>, |j_H>) angle applied at site r.
/// Applying the tables for j = 1..2d in order reproduces each site's rotation sequence.
inline std::vector<std::vector<double>> correction_angle_tables(const WallFlags& flags, const CorrectionPlan& plan,
                                                                CorrectionStage stage) {
  std::vector<std::vector<double>> tables(flags.directions, std::vector<double>(flags.grid.sites(), 0.0));
  for (std::size_t r = 0; r < flags.grid.sites(); ++r) {
    std::uint8_t p = flags[r];
    if (stage == CorrectionStage::Unprep) p = mirror_pattern(p, flags.directions);
    for (const auto& rot : plan.at(p)) tables[rot.direction - 1][r] = rot.angle;
  }
  return tables;
}

/// Gate form of V_P (prep stage) or of the rotation R_in whose adjoint is V_Q (unprep stage).
inline Circuit correction_circuit(const RegisterLayout& layout, const WallFlags& flags, const CorrectionPlan& plan,
                                  CorrectionStage stage) {
  Circuit c;
  auto tables = correction_angle_tables(flags, plan, stage);
  for (int j = 1; j <= flags.directions; ++j) {
    bool any = false;
    for (double t : tables[j - 1]) any = any || t != 0.0;
    if (any) c.push_back(GateOp::multiplexed_rbs(layout.dir_qubit(0), layout.dir_qubit(j), std::move(tables[j - 1])));
  }
  return c;
}

/// Prep stage applies V_P after U_P. Unprep stage applies V_Q = R_in^dagger before U_Q,
/// where R_in folds the incoming-from-wall directions (mirrored flags) into |0_H>.
inline void apply_wall_corrections(StateVector& state, const WallFlags& flags, const CorrectionPlan& plan,
                                   CorrectionStage stage) {
  if (state.layout.grid_size() != flags.grid.sites()) throw ShapeError("wall flags do not match grid register");
  const Circuit c = correction_circuit(state.layout, flags, plan, stage);
  if (stage == CorrectionStage::Prep)
    apply_circuit(state, c);
  else
    apply_circuit_inverse(state, c);
}

/// A velocity field is compatible with walls when, across every fluid/wall face, the
/// normal component vanishes on both sides.
inline void validate_wall_velocity(const WallMask& mask, const VelocityField& u, const LatticeModel& model,
                                   double tol = 1e-14) {
  const GridSpec& g = mask.grid;
  if (mask.count() == g.sites()) throw ConfigError("wall mask leaves no fluid site");
  for (std::size_t r = 0; r < g.sites(); ++r) {
    if (mask[r]) continue;
    for (int i = 1; i < model.q; ++i) {
      const std::size_t w = g.shifted(r, model.c[i]);
      if (!mask[w]) continue;
      const int a = LatticeModel::axis(i);
      if (std::abs(u(a, r)) > tol || std::abs(u(a, w)) > tol) {
        const Coord c = g.coords(r);
        throw DomainError("velocity has a normal component across the wall face at site (" + std::to_string(c[0]) +
                          "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + "), direction " +
                          std::to_string(i));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Mask primitives

/// Every site whose coordinate along `axis` equals `position`.
inline void add_slab(WallMask& m, int axis, int position) {
  for (std::size_t r = 0; r < m.grid.sites(); ++r)
    if (m.grid.coords(r)[axis] == position) m.set(r);
}

/// Inclusive box [lo, hi] per axis.
inline void add_box(WallMask& m, const Coord& lo, const Coord& hi) {
  for (std::size_t r = 0; r < m.grid.sites(); ++r) {
    const Coord c = m.grid.coords(r);
    bool inside = true;
    for (int a = 0; a < m.grid.dim; ++a) inside = inside && c[a] >= lo[a] && c[a] <= hi[a];
    if (inside) m.set(r);
  }
}

}  // namespace qlbm
