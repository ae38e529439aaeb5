#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "qlbm/lattice.hpp"
#include "qlbm/mps.hpp"

using namespace qlbm;
using cd = std::complex<double>;

namespace {

std::vector<cd> random_state(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<cd> v(std::size_t{1} << n);
  double s = 0.0;
  for (auto& x : v) {
    x = {d(rng), d(rng)};
    s += std::norm(x);
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

double infidelity(const std::vector<cd>& v, int chi) {
  const auto approx = contract(compress(std::span<const cd>(v), chi));
  return 1.0 - fidelity(std::span<const cd>(approx), std::span<const cd>(v));
}

}  // namespace

TEST(Compress, ProductStateExactAtChiOne) {
  std::vector<double> v(64, 1.0);
  const auto m = compress(std::span<const double>(v), 1);
  EXPECT_EQ(m.max_bond(), 1);
  EXPECT_LT(1.0 - fidelity(m, std::span<const double>(v)), 1e-12);
}

TEST(Compress, GhzNeedsChiTwo) {
  std::vector<double> v(256, 0.0);
  v.front() = v.back() = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(1.0 - fidelity(compress(std::span<const double>(v), 1), std::span<const double>(v)), 0.5, 1e-12);
  EXPECT_LT(1.0 - fidelity(compress(std::span<const double>(v), 2), std::span<const double>(v)), 1e-12);
}

TEST(Compress, FullRankRoundTrip) {
  const auto v = random_state(8, 1);
  const auto back = contract(compress(std::span<const cd>(v), 16));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(std::abs(back[i] - v[i]), 0.0, 1e-12);
}

TEST(Compress, ContractedNormIsOne) {
  for (int chi : {1, 2, 3, 5}) {
    const auto v = random_state(7, chi);
    const auto m = compress(std::span<const cd>(v), chi);
    EXPECT_NEAR(norm_squared(m), 1.0, 1e-10);
    double s = 0.0;
    for (const auto& x : contract(m)) s += std::norm(x);
    EXPECT_NEAR(s, 1.0, 1e-10);
  }
}

TEST(Compress, BitOrderMatchesSites) {
  // |x> with bit k = site k: the state 1 (bit 0 set) must put the 1 on site 0
  std::vector<double> v(16, 0.0);
  v[1] = 1.0;
  const auto m = compress(std::span<const double>(v), 1);
  EXPECT_NEAR(std::abs(m.sites[0][1](0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(m.sites[1][0](0, 0)), 1.0, 1e-12);
}

TEST(Compress, ChiTwoMatchesSingleCutSvdForTwoBlocks) {
  // Two qubits: a single bond, so truncation error equals the discarded singular weight.
  const auto v = random_state(2, 5);
  Eigen::Matrix2cd M;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) M(a, b) = v[a + 2 * b];
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(M);
  const double s0 = svd.singularValues()(0), s1 = svd.singularValues()(1);
  EXPECT_NEAR(infidelity(v, 1), s1 * s1 / (s0 * s0 + s1 * s1), 1e-12);
}

TEST(Compress, ChiTwoOnRandomStateMatchesDenseSequentialSvd) {
  // Dense oracle: sequential truncated SVD from the left, carried out on plain matrices.
  const int n = 6;
  const auto v = random_state(n, 7);
  const int chi = 2;
  Eigen::MatrixXcd rest = Eigen::Map<const Eigen::MatrixXcd>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
  std::vector<Eigen::MatrixXcd> lefts;
  for (int k = 0; k < n - 1; ++k) {
    const Eigen::Index D = rest.rows();
    const Eigen::Index cols = rest.cols() / 2;
    Eigen::MatrixXcd M(2 * D, cols);
    for (Eigen::Index l = 0; l < D; ++l)
      for (int s = 0; s < 2; ++s)
        for (Eigen::Index t = 0; t < cols; ++t) M(l + D * s, t) = rest(l, s + 2 * t);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index keep = std::min<Eigen::Index>(chi, svd.singularValues().size());
    lefts.push_back(svd.matrixU().leftCols(keep));
    rest = svd.singularValues().head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
  }
  // contract back
  std::vector<cd> out(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Ones(1);
    for (int k = 0; k < n - 1; ++k) {
      const int s = (x >> k) & 1;
      const Eigen::Index D = row.size();
      row = row * lefts[k].middleRows(D * s, D);
    }
    out[x] = (row * rest.col((x >> (n - 1)) & 1))(0);
  }
  const double oracle = 1.0 - fidelity(std::span<const cd>(out), std::span<const cd>(v));
  EXPECT_NEAR(infidelity(v, chi), oracle, 1e-12);
}

TEST(Compress, TruncationMonotone) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto v = random_state(8, 30 + seed);
    double prev = 1.0;
    for (int chi = 1; chi <= 16; ++chi) {
      const double inf = infidelity(v, chi);
      EXPECT_LE(inf, prev + 1e-12);
      prev = inf;
    }
    EXPECT_LT(prev, 1e-12);
  }
}

TEST(Compress, Errors) {
  std::vector<double> bad(6, 1.0), zero(8, 0.0), ok(8, 1.0);
  EXPECT_THROW(compress(std::span<const double>(bad), 2), ShapeError);
  EXPECT_THROW(compress(std::span<const double>(zero), 2), DomainError);
  EXPECT_THROW(compress(std::span<const double>(ok), 0), DomainError);
}

TEST(Contract, TooLargeRejected) {
  MPS m;
  m.sites.resize(25);
  for (auto& s : m.sites) s = {MatC::Ones(1, 1), MatC::Zero(1, 1)};
  EXPECT_THROW(contract(m), ResourceError);
}

TEST(Fidelity, Basics) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1};
  EXPECT_DOUBLE_EQ(fidelity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(fidelity(a, b), 0.0);
  EXPECT_NEAR(fidelity(c, a), 0.5, 1e-15);
  EXPECT_THROW(fidelity(std::vector<double>{0, 0}, a), DomainError);
  EXPECT_THROW(fidelity(std::vector<double>{1, 0, 0}, a), ShapeError);
}

TEST(Fidelity, MpsOverloadsAgree) {
  const auto v = random_state(6, 3);
  const auto a = compress(std::span<const cd>(v), 2);
  const auto b = compress(std::span<const cd>(v), 8);
  const auto dense = contract(a);
  EXPECT_NEAR(fidelity(a, b), fidelity(std::span<const cd>(dense), std::span<const cd>(v)), 1e-12);
}

TEST(InfidelitySweep, FullRankIsExactAndChiMonotone) {
  const GridSpec g = make_grid(3, 8);
  const auto traj = simulate_classical(gaussian_field(g, 1.5, std::array<double, 3>{2.0, 2.0, 4.0}),
                                       swirl_velocity(g, 0.2), build_model("D3Q7"), 8);
  const auto tab = infidelity_sweep(traj, {1, 2, 4, 64});
  ASSERT_EQ(tab.rows.size(), 4 * traj.size());
  ASSERT_EQ(tab.peak.size(), 4u);
  for (const auto& row : tab.rows)
    if (row.chi == 64) EXPECT_LT(row.infidelity, 1e-12);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    double prev = 1.0;
    for (std::size_t c = 0; c < 4; ++c) {
      const double inf = tab.rows[c * traj.size() + t].infidelity;
      EXPECT_LE(inf, prev + 1e-12);
      prev = inf;
    }
  }
  for (std::size_t c = 1; c < 4; ++c) EXPECT_LE(tab.peak[c].second, tab.peak[c - 1].second + 1e-12);
}
