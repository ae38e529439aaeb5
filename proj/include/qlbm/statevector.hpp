#pragma once

// Dense statevector over grid (G), direction (D) and optional ancilla registers.
// Qubit q corresponds to bit q of the amplitude index. Grid qubits come first
// (x bits, then y, then z, each little-endian), direction qubits sit above them.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qlbm/errors.hpp"

namespace qlbm {

using cplx = std::complex<double>;

struct RegisterLayout {
  int grid_qubits = 0;
  int dir_qubits = 0;
  int ancillas = 0;

  int total() const { return grid_qubits + dir_qubits + ancillas; }
  std::size_t dim() const { return std::size_t{1} << total(); }
  std::size_t grid_size() const { return std::size_t{1} << grid_qubits; }
  std::size_t grid_mask() const { return grid_size() - 1; }
  int dir_qubit(int i) const { return grid_qubits + i; }

  /// |i_H>: a single 1 at position i of the direction register.
  static std::uint64_t one_hot(int i) { return std::uint64_t{1} << i; }

  std::size_t index(std::size_t grid, std::uint64_t dir, std::uint64_t anc = 0) const {
    return grid | (static_cast<std::size_t>(dir) << grid_qubits) |
           (static_cast<std::size_t>(anc) << (grid_qubits + dir_qubits));
  }
  std::uint64_t dir_bits(std::size_t idx) const {
    return (idx >> grid_qubits) & ((std::uint64_t{1} << dir_qubits) - 1);
  }
  std::uint64_t ancilla_bits(std::size_t idx) const { return idx >> (grid_qubits + dir_qubits); }

  friend bool operator==(const RegisterLayout&, const RegisterLayout&) = default;
};

inline constexpr int kMaxQubits = 28;

struct StateVector {
  RegisterLayout layout;
  std::vector<cplx> amp;

  StateVector() = default;
  explicit StateVector(RegisterLayout l) : layout(l) {
    if (l.total() > kMaxQubits) throw ResourceError("statevector with " + std::to_string(l.total()) + " qubits exceeds desk scale");
    amp.assign(l.dim(), cplx{0.0, 0.0});
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amp) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }
  void normalize() {
    const double n = norm();
    if (n == 0.0) throw NumericalError("cannot normalize a zero statevector");
    for (auto& a : amp) a /= n;
  }
};

// ---------------------------------------------------------------------------
// Gate kernels. All act in place on the full amplitude vector.

using Mat2 = std::array<cplx, 4>;  // row-major [[m00, m01], [m10, m11]]

inline void apply_1q(StateVector& s, int q, const Mat2& m) {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    if (i & bit) continue;
    const cplx a0 = s.amp[i];
    const cplx a1 = s.amp[i | bit];
    s.amp[i] = m[0] * a0 + m[1] * a1;
    s.amp[i | bit] = m[2] * a0 + m[3] * a1;
  }
}

inline void apply_x(StateVector& s, int q) {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t i = 0; i < s.amp.size(); ++i)
    if (!(i & bit)) std::swap(s.amp[i], s.amp[i | bit]);
}

/// RY(phi) = [[cos phi/2, -sin phi/2], [sin phi/2, cos phi/2]].
inline void apply_ry(StateVector& s, int q, double phi) {
  const double c = std::cos(phi / 2), sn = std::sin(phi / 2);
  apply_1q(s, q, Mat2{cplx{c}, cplx{-sn}, cplx{sn}, cplx{c}});
}

inline void apply_cnot(StateVector& s, int control, int target) {
  const std::size_t cb = std::size_t{1} << control, tb = std::size_t{1} << target;
  for (std::size_t i = 0; i < s.amp.size(); ++i)
    if ((i & cb) && !(i & tb)) std::swap(s.amp[i], s.amp[i | tb]);
}

inline void apply_cz(StateVector& s, int control, int target) {
  const std::size_t mask = (std::size_t{1} << control) | (std::size_t{1} << target);
  for (std::size_t i = 0; i < s.amp.size(); ++i)
    if ((i & mask) == mask) s.amp[i] = -s.amp[i];
}

/// RBS(theta) on the ordered pair (p, q), acting on {|p=0,q=1>, |p=1,q=0>}:
///   |q> -> cos(theta)|q> + sin(theta)|p>,   |p> -> -sin(theta)|q> + cos(theta)|p>.
/// |00> and |11> are fixed.
inline void apply_rbs(StateVector& s, int p, int q, double theta) {
  const std::size_t pb = std::size_t{1} << p, qb = std::size_t{1} << q;
  const double c = std::cos(theta), sn = std::sin(theta);
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    if ((i & pb) || !(i & qb)) continue;
    const std::size_t j = (i ^ qb) | pb;
    const cplx aq = s.amp[i], ap = s.amp[j];
    s.amp[i] = c * aq - sn * ap;
    s.amp[j] = sn * aq + c * ap;
  }
}

/// sum_r |r><r|_G (x) RBS_{p,q}(theta[r]): an RBS whose angle is selected by the grid value.
inline void apply_multiplexed_rbs(StateVector& s, int p, int q, std::span<const double> theta) {
  if (theta.size() != s.layout.grid_size()) throw ShapeError("multiplexed angle table does not match grid register");
  const std::size_t pb = std::size_t{1} << p, qb = std::size_t{1} << q;
  const std::size_t gmask = s.layout.grid_mask();
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    if ((i & pb) || !(i & qb)) continue;
    const double t = theta[i & gmask];
    if (t == 0.0) continue;
    const std::size_t j = (i ^ qb) | pb;
    const double c = std::cos(t), sn = std::sin(t);
    const cplx aq = s.amp[i], ap = s.amp[j];
    s.amp[i] = c * aq - sn * ap;
    s.amp[j] = sn * aq + c * ap;
  }
}

/// A gate as data. Multiplexed gates hold one angle per grid basis value (controls |r><r|_G).
struct GateOp {
  enum class Kind { X, RY, CNOT, CZ, RBS, MultiplexedRBS };
  Kind kind = Kind::X;
  int a = 0;  // target (X, RY), control (CNOT, CZ), or first qubit p (RBS)
  int b = 0;  // target (CNOT, CZ) or second qubit q (RBS)
  double angle = 0.0;
  std::shared_ptr<const std::vector<double>> grid_angles;

  static GateOp x(int q) { return {Kind::X, q, 0, 0.0, nullptr}; }
  static GateOp ry(int q, double phi) { return {Kind::RY, q, 0, phi, nullptr}; }
  static GateOp cnot(int c, int t) { return {Kind::CNOT, c, t, 0.0, nullptr}; }
  static GateOp cz(int c, int t) { return {Kind::CZ, c, t, 0.0, nullptr}; }
  static GateOp rbs(int p, int q, double theta) { return {Kind::RBS, p, q, theta, nullptr}; }
  static GateOp multiplexed_rbs(int p, int q, std::vector<double> theta) {
    return {Kind::MultiplexedRBS, p, q, 0.0, std::make_shared<const std::vector<double>>(std::move(theta))};
  }

  GateOp inverse() const {
    GateOp g = *this;
    switch (kind) {
      case Kind::RY:
      case Kind::RBS:
        g.angle = -angle;
        break;
      case Kind::MultiplexedRBS: {
        std::vector<double> neg(*grid_angles);
        for (auto& t : neg) t = -t;
        g.grid_angles = std::make_shared<const std::vector<double>>(std::move(neg));
        break;
      }
      default:
        break;
    }
    return g;
  }
};

inline void apply_gate(StateVector& s, const GateOp& g) {
  switch (g.kind) {
    case GateOp::Kind::X:
      apply_x(s, g.a);
      break;
    case GateOp::Kind::RY:
      apply_ry(s, g.a, g.angle);
      break;
    case GateOp::Kind::CNOT:
      apply_cnot(s, g.a, g.b);
      break;
    case GateOp::Kind::CZ:
      apply_cz(s, g.a, g.b);
      break;
    case GateOp::Kind::RBS:
      apply_rbs(s, g.a, g.b, g.angle);
      break;
    case GateOp::Kind::MultiplexedRBS:
      apply_multiplexed_rbs(s, g.a, g.b, *g.grid_angles);
      break;
  }
}

using Circuit = std::vector<GateOp>;

inline void apply_circuit(StateVector& s, const Circuit& c) {
  for (const auto& g : c) apply_gate(s, g);
}

inline void apply_circuit_inverse(StateVector& s, const Circuit& c) {
  for (auto it = c.rbegin(); it != c.rend(); ++it) apply_gate(s, it->inverse());
}

}  // namespace qlbm
