#pragma once

// Statevector semantics of one QLBM time step:
//   PREP (U_P) -> [V_P] -> streaming (U_S) -> [V_Q] -> UNPREP (U_Q) -> post-select D = |0...0>.
// PREP/UNPREP exist in two routes: "isometry" applies the defining maps directly from the
// kernel field, "gates" runs the RBS construction driven by the g-function angle tables.

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qlbm/angles.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/qpixl.hpp"
#include "qlbm/statevector.hpp"
#include "qlbm/walls.hpp"

namespace qlbm {

enum class Route { Isometry, Gates };

inline Route parse_route(std::string_view s) {
  if (s == "isometry") return Route::Isometry;
  if (s == "gates") return Route::Gates;
  throw ConfigError("unknown route '" + std::string(s) + "' (expected isometry or gates)");
}

inline const char* route_name(Route r) { return r == Route::Isometry ? "isometry" : "gates"; }

/// Gate-route options. With `qpixl`, every grid-multiplexed RBS is synthesized as a
/// uniformly controlled rotation and pruned at `prune_threshold`.
struct GateOptions {
  bool qpixl = false;
  double prune_threshold = 0.0;
};

inline RegisterLayout make_layout(const GridSpec& grid, const LatticeModel& model) {
  if (grid.dim != model.dim) throw ShapeError("grid dimension does not match lattice model");
  return RegisterLayout{grid.qubits(), model.q, 0};
}

/// Precomputed data for stepping one (model, velocity, walls) configuration.
class QlbmOperator {
 public:
  QlbmOperator(LatticeModel model, const VelocityField& u, std::optional<WallMask> walls = std::nullopt,
               GateOptions gate_options = {})
      : model_(std::move(model)), grid_(u.grid), layout_(make_layout(u.grid, model_)), gate_options_(gate_options) {
    check_speed_bound(u);
    if (walls) {
      if (!(walls->grid == grid_)) throw ShapeError("wall mask grid does not match velocity grid");
      if (walls->empty()) walls.reset();
    }
    if (walls) {
      validate_wall_velocity(*walls, u, model_);
      flags_ = wall_flags(*walls, model_);
      plan_ = build_correction_plan(model_);
    }
    walls_ = std::move(walls);
    kernels_ = collision_kernels(model_, u, walls_ ? &*walls_ : nullptr);
    for (int i = 0; i < model_.q; ++i) {
      Coord back{-model_.c[i][0], -model_.c[i][1], -model_.c[i][2]};
      std::vector<std::size_t> fwd(grid_.sites()), bwd(grid_.sites());
      for (std::size_t r = 0; r < grid_.sites(); ++r) {
        fwd[r] = grid_.shifted(r, model_.c[i]);
        bwd[r] = grid_.shifted(r, back);
      }
      forward_.push_back(std::move(fwd));
      backward_.push_back(std::move(bwd));
    }
    build_unprep_columns();
    build_gate_circuits(u);
  }

  const LatticeModel& model() const { return model_; }
  const GridSpec& grid() const { return grid_; }
  const RegisterLayout& layout() const { return layout_; }
  const KernelField& kernels() const { return kernels_; }
  const std::optional<WallMask>& walls() const { return walls_; }
  const std::optional<WallFlags>& flags() const { return flags_; }

  /// U_P|r>|0> = |r> sum_i sqrt(k_i(r)) |i_H>
  void prep(StateVector& s, Route route) const {
    check_layout(s);
    require_only_zero_sector(s, "apply_prep");
    if (route == Route::Isometry) {
      for (std::size_t r = 0; r < grid_.sites(); ++r) {
        const cplx a = s.amp[r];
        if (a == cplx{}) continue;
        s.amp[r] = 0.0;
        for (int i = 0; i < model_.q; ++i)
          s.amp[layout_.index(r, RegisterLayout::one_hot(i))] = a * std::sqrt(kernels_(r, i));
      }
      return;
    }
    run(s, prep_circuit_, false);
    if (flags_) apply_wall_corrections(s, *flags_, *plan_, CorrectionStage::Prep);
  }

  /// U_S: shift the grid value of every |i_H> sector by c_i. Other sectors are untouched.
  void stream(StateVector& s) const {
    check_layout(s);
    std::vector<cplx> buf(grid_.sites());
    for (int i = 1; i < model_.q; ++i) {
      const std::size_t off = layout_.index(0, RegisterLayout::one_hot(i));
      for (std::size_t r = 0; r < grid_.sites(); ++r) buf[forward_[i][r]] = s.amp[off + r];
      for (std::size_t r = 0; r < grid_.sites(); ++r) s.amp[off + r] = buf[r];
    }
  }

  /// U_Q with U_Q^dagger |r>|0> = sum_i sqrt(k_i(r - c_i)) |i_H>.
  void unprep(StateVector& s, Route route) const {
    check_layout(s);
    if (route == Route::Isometry) {
      require_one_hot_span(s);
      const int q = model_.q;
      std::vector<cplx> in(q + 1), out(q + 1);
      for (std::size_t r = 0; r < grid_.sites(); ++r) {
        bool any = false;
        in[0] = s.amp[r];
        for (int i = 0; i < q; ++i) {
          in[i + 1] = s.amp[layout_.index(r, RegisterLayout::one_hot(i))];
          any = any || in[i + 1] != cplx{};
        }
        any = any || in[0] != cplx{};
        if (!any) continue;
        // out = W_r^T in, W_r columns stored row-major in columns_[r].
        const double* W = &columns_[r * (q + 1) * (q + 1)];
        for (int c = 0; c <= q; ++c) {
          cplx acc{};
          for (int k = 0; k <= q; ++k) acc += W[k * (q + 1) + c] * in[k];
          out[c] = acc;
        }
        s.amp[r] = out[0];
        for (int i = 0; i < q; ++i) s.amp[layout_.index(r, RegisterLayout::one_hot(i))] = out[i + 1];
      }
      return;
    }
    if (flags_) apply_wall_corrections(s, *flags_, *plan_, CorrectionStage::Unprep);
    run(s, unprep_dagger_circuit_, true);
  }

  const Circuit& prep_circuit() const { return prep_circuit_; }
  const Circuit& unprep_dagger_circuit() const { return unprep_dagger_circuit_; }

  /// Column U_Q^dagger |r>|0> restricted to the one-hot states (entry i is sqrt(k_i(r - c_i))).
  std::vector<double> unprep_column(std::size_t r) const {
    std::vector<double> v(model_.q);
    const int q = model_.q;
    for (int i = 0; i < q; ++i) v[i] = columns_[r * (q + 1) * (q + 1) + (i + 1) * (q + 1) + 0];
    return v;
  }

 private:
  void check_layout(const StateVector& s) const {
    if (!(s.layout == layout_)) throw ShapeError("statevector layout does not match the QLBM operator");
  }

  void require_only_zero_sector(const StateVector& s, const char* op) const {
    double in = 0.0, out = 0.0;
    for (std::size_t i = 0; i < s.amp.size(); ++i) {
      if (i < grid_.sites())
        in += std::norm(s.amp[i]);
      else
        out += std::norm(s.amp[i]);
    }
    if (out > 1e-20 * std::max(in, 1e-300))
      throw PreconditionError(std::string(op) + ": direction register must be |0...0> on every populated component");
  }

  void require_one_hot_span(const StateVector& s) const {
    double tot = 0.0, bad = 0.0;
    for (std::size_t i = 0; i < s.amp.size(); ++i) {
      const double p = std::norm(s.amp[i]);
      tot += p;
      const auto d = layout_.dir_bits(i);
      if (d != 0 && !std::has_single_bit(d)) bad += p;
    }
    if (bad > 1e-20 * std::max(tot, 1e-300))
      throw PreconditionError("apply_unprep: state has weight outside grid (x) one-hot direction states");
  }

  void run(StateVector& s, const Circuit& c, bool inverse) const {
    if (!gate_options_.qpixl) {
      inverse ? apply_circuit_inverse(s, c) : apply_circuit(s, c);
      return;
    }
    auto exec = [&](const GateOp& g) {
      if (g.kind != GateOp::Kind::MultiplexedRBS) {
        apply_gate(s, g);
        return;
      }
      const GateProgram prog = qpixl_program(*g.grid_angles, gate_options_.prune_threshold);
      apply_program_rbs(s, prog, g.a, g.b);
    };
    if (inverse) {
      for (auto it = c.rbegin(); it != c.rend(); ++it) exec(it->inverse());
    } else {
      for (const auto& g : c) exec(g);
    }
  }

  // Per-site orthogonal completion W_r on the basis [|0...0>, |0_H>, ..., |(q-1)_H>]:
  // column 0 is U_Q^dagger|r,0>, the rest come from Gram-Schmidt over canonical vectors
  // in index order.
  void build_unprep_columns() {
    const int q = model_.q;
    const int n = q + 1;
    columns_.assign(grid_.sites() * n * n, 0.0);
    std::vector<std::vector<double>> cols;
    for (std::size_t r = 0; r < grid_.sites(); ++r) {
      std::vector<double> v(n, 0.0);
      double nrm = 0.0;
      for (int i = 0; i < q; ++i) {
        v[i + 1] = std::sqrt(kernels_(backward_[i][r], i));
        nrm += v[i + 1] * v[i + 1];
      }
      if (std::abs(nrm - 1.0) > 1e-10)
        throw DomainError("UNPREP column at site " + std::to_string(r) + " has squared norm " + std::to_string(nrm) +
                          "; the velocity field is not discretely divergence-free");
      for (auto& x : v) x /= std::sqrt(nrm);
      cols.assign(1, v);
      for (int e = 0; e < n && static_cast<int>(cols.size()) < n; ++e) {
        std::vector<double> w(n, 0.0);
        w[e] = 1.0;
        for (const auto& c : cols) {
          double d = 0.0;
          for (int k = 0; k < n; ++k) d += c[k] * w[k];
          for (int k = 0; k < n; ++k) w[k] -= d * c[k];
        }
        double wn = 0.0;
        for (double x : w) wn += x * x;
        wn = std::sqrt(wn);
        if (wn < 1e-10) continue;
        for (auto& x : w) x /= wn;
        cols.push_back(std::move(w));
      }
      if (static_cast<int>(cols.size()) != n) throw InternalError("orthogonal completion failed");
      double* W = &columns_[r * n * n];
      for (int c = 0; c < n; ++c)
        for (int k = 0; k < n; ++k) W[k * n + c] = cols[c][k];
    }
  }

  // Chain of uncontrolled RBS gates moving amplitude from |0_H> along the +axis
  // representatives so that |0_H> keeps amps[0], representative a keeps amps[a+1].
  static void push_split_chain(Circuit& c, const RegisterLayout& lay, const std::vector<double>& amps) {
    double remaining = 1.0;
    int from = 0;
    for (std::size_t k = 0; k + 1 < amps.size(); ++k) {
      const int to = 2 * static_cast<int>(k) + 1;
      const double ratio = std::clamp(amps[k] / remaining, -1.0, 1.0);
      const double theta = std::acos(ratio);
      c.push_back(GateOp::rbs(lay.dir_qubit(to), lay.dir_qubit(from), theta));
      remaining *= std::sin(theta);
      from = to;
    }
  }

  void build_gate_circuits(const VelocityField& u) {
    const int d = model_.dim;
    const auto D = [&](int i) { return layout_.dir_qubit(i); };

    // PREP: sqrt(w_0)|0_H> + sum_a sqrt(2 w_a)|(2a+1)_H>, then split each pair by g^P_a.
    prep_circuit_.push_back(GateOp::x(D(0)));
    std::vector<double> base{std::sqrt(model_.w[0])};
    for (int a = 0; a < d; ++a) base.push_back(std::sqrt(2.0 * model_.w[2 * a + 1]));
    push_split_chain(prep_circuit_, layout_, base);
    for (int a = 0; a < d; ++a)
      prep_circuit_.push_back(GateOp::multiplexed_rbs(D(2 * a + 2), D(2 * a + 1), prep_angles(u, a).values));

    // UNPREP^dagger: sqrt(w_0)|D0> + sqrt(1 - w_0)|D0 D1>, move D1 -> D3 (lambda), D3 -> D5 (mu),
    // clear D0 with CNOTs, then split each pair by g^Q_a.
    const UnprepAngles ua = unprep_angles(u);
    unprep_dagger_circuit_.push_back(GateOp::x(D(0)));
    unprep_dagger_circuit_.push_back(GateOp::ry(D(1), 2.0 * std::acos(std::sqrt(model_.w[0]))));
    unprep_dagger_circuit_.push_back(GateOp::multiplexed_rbs(D(3), D(1), ua.lambda.values));
    if (d == 3) unprep_dagger_circuit_.push_back(GateOp::multiplexed_rbs(D(5), D(3), ua.mu.values));
    for (int a = 0; a < d; ++a) unprep_dagger_circuit_.push_back(GateOp::cnot(D(2 * a + 1), D(0)));
    for (int a = 0; a < d; ++a)
      unprep_dagger_circuit_.push_back(GateOp::multiplexed_rbs(D(2 * a + 2), D(2 * a + 1), ua.pair[a].values));
  }

  LatticeModel model_;
  GridSpec grid_;
  RegisterLayout layout_;
  GateOptions gate_options_;
  std::optional<WallMask> walls_;
  std::optional<WallFlags> flags_;
  std::optional<CorrectionPlan> plan_;
  KernelField kernels_;
  std::vector<std::vector<std::size_t>> forward_, backward_;
  std::vector<double> columns_;
  Circuit prep_circuit_;
  Circuit unprep_dagger_circuit_;
};

// ---------------------------------------------------------------------------
// Free-function surface

/// |r>_G|0>_D amplitudes Phi(r)/||Phi||.
inline StateVector encode_density(const ScalarField& phi, const RegisterLayout& layout) {
  if (phi.size() != layout.grid_size()) throw ShapeError("density size does not match grid register");
  double n2 = 0.0;
  for (double v : phi.values) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("density must be finite and non-negative");
    n2 += v * v;
  }
  if (n2 == 0.0) throw DomainError("cannot encode an all-zero density");
  StateVector s(layout);
  const double n = std::sqrt(n2);
  for (std::size_t r = 0; r < phi.size(); ++r) s.amp[r] = phi[r] / n;
  return s;
}

inline void apply_streaming(StateVector& s, const QlbmOperator& op) { op.stream(s); }
inline void apply_prep(StateVector& s, const QlbmOperator& op, Route route) { op.prep(s, route); }
inline void apply_unprep(StateVector& s, const QlbmOperator& op, Route route) { op.unprep(s, route); }

struct PostSelection {
  StateVector grid_state;  // direction and ancilla registers |0...0>, renormalized
  double p_success = 0.0;
};

inline PostSelection postselect(const StateVector& s) {
  PostSelection out{StateVector(s.layout), 0.0};
  const std::size_t G = s.layout.grid_size();
  double p = 0.0;
  for (std::size_t r = 0; r < G; ++r) p += std::norm(s.amp[r]);
  if (p < 1e-15) throw NumericalError("post-selection probability " + std::to_string(p) + " is degenerate");
  const double n = std::sqrt(p);
  for (std::size_t r = 0; r < G; ++r) out.grid_state.amp[r] = s.amp[r] / n;
  out.p_success = p;
  return out;
}

/// Real parts of the |r>|0> amplitudes.
inline ScalarField grid_density(const StateVector& s, const GridSpec& grid) {
  ScalarField f(grid);
  for (std::size_t r = 0; r < f.size(); ++r) f[r] = s.amp[r].real();
  return f;
}

struct StepResult {
  StateVector grid_state;
  double p_success = 0.0;
  StateVector pre_selection;  // full state before the direction measurement
};

inline StepResult qlbm_step(const StateVector& state, const QlbmOperator& op, Route route = Route::Isometry) {
  StateVector s = state;
  op.prep(s, route);
  op.stream(s);
  op.unprep(s, route);
  PostSelection ps = postselect(s);
  return StepResult{std::move(ps.grid_state), ps.p_success, std::move(s)};
}

struct ChainResult {
  StateVector final_state;
  double cumulative_p = 1.0;
  std::vector<double> p_per_step;
  std::vector<ScalarField> trajectory;  // normalized densities, t = 0..T
};

/// T steps with a projective reset of the direction register after every step.
inline ChainResult run_chain(const StateVector& initial, const QlbmOperator& op, int steps,
                             Route route = Route::Isometry) {
  if (steps < 1) throw DomainError("run_chain needs at least one step");
  ChainResult out{initial, 1.0, {}, {}};
  out.trajectory.push_back(grid_density(initial, op.grid()));
  for (int t = 0; t < steps; ++t) {
    StepResult sr = qlbm_step(out.final_state, op, route);
    out.cumulative_p *= sr.p_success;
    out.p_per_step.push_back(sr.p_success);
    out.final_state = std::move(sr.grid_state);
    out.trajectory.push_back(grid_density(out.final_state, op.grid()));
  }
  return out;
}

}  // namespace qlbm
