#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "qlbm/angles.hpp"
#include "qlbm/circuit.hpp"
#include "qlbm/fwht.hpp"
#include "qlbm/qpixl.hpp"

using namespace qlbm;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// (1/2^n) H^{(x)n} a as a dense double sum.
std::vector<double> dense_walsh(const std::vector<double>& a) {
  const std::size_t n = a.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t w = 0; w < n; ++w) {
    for (std::size_t i = 0; i < n; ++i) out[w] += (std::popcount(w & i) % 2 ? -a[i] : a[i]);
    out[w] /= static_cast<double>(n);
  }
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(PrepAngles, ReferenceValues) {
  const GridSpec g = make_grid(2, 4);
  EXPECT_NEAR(prep_angles(zero_velocity(g), 0).values[3], std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(prep_angles(constant_velocity(g, {1.0 / 3.0, 0, 0}), 0).values[0], 0.0, 1e-7);
  EXPECT_NEAR(prep_angles(constant_velocity(g, {-1.0 / 3.0, 0, 0}), 0).values[0], std::numbers::pi / 2, 1e-15);
}

TEST(PrepAngles, OutOfRangeRejected) {
  const GridSpec g = make_grid(2, 4);
  VelocityField u(g);
  u(0, 0) = 0.5;
  EXPECT_THROW(prep_angles(u, 0), DomainError);
}

TEST(UnprepAngles, ZeroVelocity) {
  const GridSpec g = make_grid(3, 4);
  const auto a = unprep_angles(zero_velocity(g));
  ASSERT_EQ(a.pair.size(), 3u);
  for (std::size_t r = 0; r < g.sites(); ++r) {
    for (const auto& p : a.pair) EXPECT_NEAR(p.values[r], std::numbers::pi / 4, 1e-15);
    EXPECT_NEAR(a.lambda.values[r], std::acos(std::sqrt(1.0 / 3.0)), 1e-15);
    EXPECT_NEAR(a.mu.values[r], std::acos(std::sqrt(0.5)), 1e-15);
  }
}

TEST(UnprepAngles, ConstantVelocityGivesConstantAngles) {
  const GridSpec g = make_grid(3, 4);
  const auto a = unprep_angles(constant_velocity(g, {0.1, -0.2, 0.3}));
  for (std::size_t r = 1; r < g.sites(); ++r) {
    for (const auto& p : a.pair) EXPECT_DOUBLE_EQ(p.values[r], p.values[0]);
    EXPECT_DOUBLE_EQ(a.lambda.values[r], a.lambda.values[0]);
    EXPECT_DOUBLE_EQ(a.mu.values[r], a.mu.values[0]);
  }
}

TEST(GateRoute, MatchesIsometryOnRandomFields) {
  for (const char* name : {"D2Q5", "D3Q7"}) {
    const auto m = build_model(name);
    const GridSpec g = make_grid(m.dim, 4);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const QlbmOperator op(m, random_divergence_free(g, 0.3, 100 + seed));
      const auto& lay = op.layout();
      for (std::size_t r = 0; r < g.sites(); r += 3) {
        // prep: columns agree on the one-hot sector
        StateVector a = encode_density(delta_field(g, r), lay), b = a;
        apply_prep(a, op, Route::Isometry);
        apply_prep(b, op, Route::Gates);
        for (std::size_t i = 0; i < a.amp.size(); ++i) EXPECT_NEAR(std::abs(a.amp[i] - b.amp[i]), 0.0, 1e-10);
        // unprep: <r,0|U_Q|r,i_H> agree
        for (int i = 0; i < m.q; ++i) {
          StateVector x(lay), y(lay);
          x.amp[lay.index(r, RegisterLayout::one_hot(i))] = 1.0;
          y = x;
          apply_unprep(x, op, Route::Isometry);
          apply_unprep(y, op, Route::Gates);
          EXPECT_NEAR(std::abs(x.amp[r] - y.amp[r]), 0.0, 1e-10) << name << " r=" << r << " i=" << i;
        }
      }
    }
  }
}

TEST(GateRoute, QpixlSynthesisMatches) {
  const auto m = build_model("D3Q7");
  const GridSpec g = make_grid(3, 4);
  const auto u = random_divergence_free(g, 0.3, 7);
  const QlbmOperator dense(m, u);
  const QlbmOperator synth(m, u, std::nullopt, GateOptions{true, 0.0});
  const auto phi = gaussian_field(g, 1.0);
  const auto a = qlbm_step(encode_density(phi, dense.layout()), dense, Route::Gates);
  const auto b = qlbm_step(encode_density(phi, synth.layout()), synth, Route::Gates);
  for (std::size_t i = 0; i < g.sites(); ++i) EXPECT_NEAR(std::abs(a.grid_state.amp[i] - b.grid_state.amp[i]), 0.0, 1e-10);
}

TEST(Fwht, ConstantVector) {
  const auto out = fwht({1, 1, 1, 1});
  EXPECT_EQ(out, (std::vector<double>{1, 0, 0, 0}));
}

TEST(Fwht, TwoPointPair) {
  const double theta = 0.7, s = 0.2;
  const auto out = fwht({theta - s, theta + s});
  EXPECT_NEAR(out[0], theta, 1e-15);
  EXPECT_NEAR(out[1], -s, 1e-15);
}

TEST(Fwht, MatchesDenseOracle) {
  for (std::size_t n : {8u, 64u, 1024u}) {
    const auto a = random_vector(n, n);
    EXPECT_LT(max_abs_diff(fwht(a), dense_walsh(a)), 1e-12) << n;
  }
}

TEST(Fwht, RoundTrip) {
  for (int bits = 1; bits <= 15; ++bits) {
    const auto a = random_vector(std::size_t{1} << bits, bits);
    EXPECT_LT(max_abs_diff(inverse_fwht(fwht(a)), a), 1e-12) << bits;
  }
}

TEST(Fwht, RejectsNonPowerOfTwo) { EXPECT_THROW(fwht(std::vector<double>(6, 1.0)), ShapeError); }

TEST(InterpolatedFwht, FullResolutionIsExact) {
  const GridSpec g = make_grid(3, 8);
  ScalarField f(g, random_vector(g.sites(), 3));
  const auto sp = interpolated_fwht_3d(f, 8);
  EXPECT_LT(max_abs_diff(sp.to_dense(), fwht(f.values)), 1e-12);
}

TEST(InterpolatedFwht, TrilinearFieldsAreExact) {
  for (std::size_t L : {8u, 16u}) {
    const GridSpec g = make_grid(3, L);
    ScalarField f(g);
    for (std::size_t r = 0; r < g.sites(); ++r) {
      const Coord c = g.coords(r);
      f[r] = 0.3 + 0.11 * c[0] - 0.07 * c[1] + 0.05 * c[2];
    }
    const auto exact = dense_walsh(f.values);
    for (std::size_t K = 2; K <= L; K *= 2)
      EXPECT_LT(max_abs_diff(interpolated_fwht_3d(f, K).to_dense(), exact), 1e-12) << "L=" << L << " K=" << K;
  }
}

TEST(InterpolatedFwht, SinusoidErrorDecreases) {
  for (std::size_t L : {16u, 32u}) {
    const GridSpec g = make_grid(3, L);
    ScalarField f(g);
    const double w = 2.0 * std::numbers::pi / static_cast<double>(L);
    for (std::size_t r = 0; r < g.sites(); ++r) {
      const Coord c = g.coords(r);
      f[r] = 1.0 + std::sin(w * c[0]) * std::sin(w * c[1]) * std::sin(w * c[2]);
    }
    const auto exact = fwht(f.values);
    double prev = 1e300;
    for (std::size_t K = 2; K <= L; K *= 2) {
      const double err = relative_l2_error(interpolated_fwht_3d(f, K).to_dense(), exact);
      EXPECT_LT(err, prev);
      prev = err;
    }
    EXPECT_LE(prev, 1e-12);
  }
}

TEST(InterpolatedFwht, SparsityBoundIsExact) {
  for (std::size_t L : {8u, 16u, 32u}) {
    const GridSpec g = make_grid(3, L);
    ScalarField f(g, random_vector(g.sites(), L));
    for (std::size_t K = 2; K <= L; K *= 2) {
      const auto sp = interpolated_fwht_3d(f, K);
      const std::size_t r = static_cast<std::size_t>(std::log2(static_cast<double>(L / K)));
      EXPECT_EQ(sp.entries.size(), K * K * K * (1 + 3 * r)) << "L=" << L << " K=" << K;
    }
  }
}

TEST(InterpolatedFwht, ButterflyCountScaling) {
  for (std::size_t L : {16u, 32u}) {
    const GridSpec g = make_grid(3, L);
    ScalarField f(g, std::vector<double>(g.sites(), 1.0));
    for (std::size_t K : {2u, 4u, 8u}) {
      const double k = std::log2(static_cast<double>(K));
      const double model = std::pow(static_cast<double>(K), 3) * k * std::log2(std::pow(L, 3.0) / K);
      const double ratio = static_cast<double>(interpolated_fwht_3d(f, K).butterflies) / model;
      EXPECT_GE(ratio, 0.5) << "L=" << L << " K=" << K;
      EXPECT_LE(ratio, 2.0) << "L=" << L << " K=" << K;
    }
  }
}

TEST(InterpolatedFwht, InvalidSampleCount) {
  const GridSpec g = make_grid(3, 8);
  ScalarField f(g);
  EXPECT_THROW(interpolated_fwht_3d(f, 16), ShapeError);
  EXPECT_THROW(interpolated_fwht_3d(f, 3), ShapeError);
}

TEST(Qpixl, ConstantFieldSingleRotation) {
  const auto prog = qpixl_program(std::vector<double>(16, 0.4), 0.0);
  ASSERT_EQ(prog.gates.size(), 1u);
  EXPECT_EQ(prog.gates[0].kind, ProgramGate::Kind::Rotation);
  EXPECT_NEAR(prog.gates[0].angle, 0.4, 1e-15);
}

TEST(Qpixl, InfiniteThresholdIsEmpty) {
  const auto prog = qpixl_program(random_vector(16, 2), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(prog.gates.empty());
}

TEST(Qpixl, ExecutedProgramMatchesDenseMultiplexor) {
  const GridSpec g = make_grid(2, 4);
  const auto lay = make_layout(g, build_model("D2Q5"));
  const auto theta = random_vector(g.sites(), 5);
  const auto prog = qpixl_program(theta, 0.0);
  StateVector a(lay);
  const double amp = 1.0 / std::sqrt(2.0 * static_cast<double>(g.sites()));
  for (std::size_t r = 0; r < g.sites(); ++r) {
    a.amp[lay.index(r, RegisterLayout::one_hot(0))] = amp;
    a.amp[lay.index(r, RegisterLayout::one_hot(1))] = amp * (r % 3 == 0 ? -1.0 : 0.5);
  }
  StateVector b = a;
  const int p = lay.dir_qubit(0), q = lay.dir_qubit(1);
  apply_program_rbs(a, prog, p, q);
  apply_multiplexed_rbs(b, p, q, theta);
  for (std::size_t i = 0; i < a.amp.size(); ++i) EXPECT_NEAR(std::abs(a.amp[i] - b.amp[i]), 0.0, 1e-10);
}

TEST(Qpixl, RyTargetMatchesPerControlRotation) {
  const GridSpec g = make_grid(2, 4);
  const auto lay = make_layout(g, build_model("D2Q5"));
  const auto theta = random_vector(g.sites(), 8);
  StateVector s(lay);
  for (std::size_t r = 0; r < g.sites(); ++r) s.amp[r] = 0.25;
  apply_program_ry(s, qpixl_program(theta, 0.0), lay.dir_qubit(0));
  for (std::size_t r = 0; r < g.sites(); ++r) {
    EXPECT_NEAR(s.amp[r].real(), 0.25 * std::cos(theta[r]), 1e-12);
    EXPECT_NEAR(s.amp[lay.index(r, 1)].real(), 0.25 * std::sin(theta[r]), 1e-12);
  }
}

TEST(Qpixl, PrunedErrorBoundedByDroppedWeight) {
  const GridSpec g = make_grid(3, 8);
  std::vector<double> theta(g.sites());
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord c = g.coords(r);
    theta[r] = 0.6 + 0.1 * std::sin(0.7 * c[0]) * std::cos(0.3 * c[1]) + 0.02 * c[2];
  }
  double prev = 0.0;
  for (double thr : {0.0, 1e-4, 1e-3, 1e-2, 5e-2, 1.0}) {
    const auto prog = qpixl_program(theta, thr);
    const auto eff = effective_angles(prog);
    const double err = max_abs_diff(eff, theta);
    EXPECT_LE(err, prog.dropped_weight + 1e-12) << thr;
    EXPECT_GE(err, prev - 1e-15) << thr;
    prev = err;
  }
}
