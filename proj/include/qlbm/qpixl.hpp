#pragma once

// Uniformly controlled rotations compiled from a Walsh-Hadamard spectrum (QPIXL-style).
//
// A grid-controlled rotation sum_r |r><r| (x) R(theta_r) over n control qubits is
// emitted as 2^n rotations R(alpha_j) interleaved with CNOTs along a Gray-code cycle,
// where alpha_j = [(H/2)^{(x)n} theta]_{gray(j)}. Rotations with |alpha| <= threshold
// are dropped and the surrounding CNOTs merged by parity.

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/fwht.hpp"
#include "qlbm/statevector.hpp"

namespace qlbm {

struct ProgramGate {
  enum class Kind { Rotation, Cnot };
  Kind kind = Kind::Rotation;
  int control = -1;            // control qubit index (Cnot)
  double angle = 0.0;          // rotation angle (Rotation)
  std::size_t coefficient = 0; // Walsh index that produced the angle (Rotation)
};

struct GateProgram {
  int controls = 0;
  std::vector<ProgramGate> gates;
  double dropped_weight = 0.0;  // sum of |alpha| over discarded rotations

  std::size_t rotation_count() const {
    std::size_t n = 0;
    for (const auto& g : gates) n += g.kind == ProgramGate::Kind::Rotation;
    return n;
  }
  std::size_t cnot_count() const { return gates.size() - rotation_count(); }
};

inline std::size_t gray_code(std::size_t j) { return j ^ (j >> 1); }

namespace detail {

inline void emit_parity(GateProgram& p, std::size_t parity) {
  for (int c = 0; c < p.controls; ++c)
    if (parity & (std::size_t{1} << c)) p.gates.push_back({ProgramGate::Kind::Cnot, c, 0.0, 0});
}

}  // namespace detail

/// Build the program from Walsh coefficients indexed by Walsh index (length 2^n).
inline GateProgram qpixl_program_from_spectrum(std::span<const double> spectrum, double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("pruning threshold must be non-negative");
  if (!is_power_of_two(spectrum.size())) throw ShapeError("spectrum length must be a power of two");
  GateProgram p;
  p.controls = log2_exact(spectrum.size());
  // Before rotation j the branch for control value r carries sign (-1)^popcount(r & gray(j)).
  std::size_t current = 0;
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    const std::size_t w = gray_code(j);
    const double alpha = spectrum[w];
    if (std::abs(alpha) <= threshold) {
      p.dropped_weight += std::abs(alpha);
      continue;
    }
    detail::emit_parity(p, current ^ w);
    current = w;
    p.gates.push_back({ProgramGate::Kind::Rotation, -1, alpha, w});
  }
  detail::emit_parity(p, current);
  return p;
}

/// Dense angle table (one angle per control value) -> program.
inline GateProgram qpixl_program(std::span<const double> angles, double threshold) {
  std::vector<double> spec(angles.begin(), angles.end());
  fwht_inplace(spec);
  return qpixl_program_from_spectrum(spec, threshold);
}

inline GateProgram qpixl_program(const SparseSpectrum& spectrum, double threshold) {
  return qpixl_program_from_spectrum(spectrum.to_dense(), threshold);
}

/// Angle each control value actually receives from the program.
inline std::vector<double> effective_angles(const GateProgram& p) {
  std::vector<double> theta(std::size_t{1} << p.controls, 0.0);
  for (std::size_t r = 0; r < theta.size(); ++r) {
    int parity = 0;
    double acc = 0.0;
    for (const auto& g : p.gates) {
      if (g.kind == ProgramGate::Kind::Cnot)
        parity ^= static_cast<int>((r >> g.control) & 1u);
      else
        acc += parity ? -g.angle : g.angle;
    }
    theta[r] = acc;
  }
  return theta;
}

/// Execute with an RBS(p, q) target. Control c is grid qubit c; the sign flip that a CNOT
/// provides for a Y rotation is supplied by CZ on qubit p.
inline void apply_program_rbs(StateVector& s, const GateProgram& prog, int p, int q) {
  if (prog.controls != s.layout.grid_qubits) throw ShapeError("program controls do not match grid register");
  for (const auto& g : prog.gates) {
    if (g.kind == ProgramGate::Kind::Cnot)
      apply_cz(s, g.control, p);
    else
      apply_rbs(s, p, q, g.angle);
  }
}

/// Execute with an RY(2 alpha) target and CNOT entanglers.
inline void apply_program_ry(StateVector& s, const GateProgram& prog, int target) {
  if (prog.controls != s.layout.grid_qubits) throw ShapeError("program controls do not match grid register");
  for (const auto& g : prog.gates) {
    if (g.kind == ProgramGate::Kind::Cnot)
      apply_cnot(s, g.control, target);
    else
      apply_ry(s, target, 2.0 * g.angle);
  }
}

}  // namespace qlbm
