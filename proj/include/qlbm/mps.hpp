#pragma once

// Matrix product states over the grid register. Site k is qubit k (x bits, then y, then z,
// little-endian), so the amplitude index is sum_k s_k 2^k.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"

namespace qlbm {

using MatC = Eigen::MatrixXcd;

struct MPS {
  /// sites[k][s] is the (left bond x right bond) matrix for physical value s.
  std::vector<std::array<MatC, 2>> sites;
  int chi = 1;
  bool normalized = false;

  int qubits() const { return static_cast<int>(sites.size()); }
  int bond(int k) const { return static_cast<int>(sites[k][0].cols()); }  // bond right of site k
  int max_bond() const {
    int m = 1;
    for (const auto& s : sites) m = std::max<int>(m, static_cast<int>(s[0].cols()));
    return m;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : sites) n += 2 * static_cast<std::size_t>(s[0].size());
    return n;
  }
};

inline constexpr int kMaxContractQubits = 24;

/// Left-to-right successive SVD, keeping the chi largest singular values at each cut,
/// then normalized.
inline MPS compress(std::span<const std::complex<double>> amps, int chi) {
  if (chi < 1) throw DomainError("bond dimension must be at least 1");
  if (!is_power_of_two(amps.size()) || amps.size() < 2) throw ShapeError("MPS input length must be a power of two >= 2");
  const int n = log2_exact(amps.size());
  MPS m;
  m.chi = chi;
  m.sites.resize(n);

  MatC rest(1, static_cast<Eigen::Index>(amps.size()));
  for (std::size_t i = 0; i < amps.size(); ++i) rest(0, static_cast<Eigen::Index>(i)) = amps[i];

  for (int k = 0; k < n - 1; ++k) {
    const Eigen::Index D = rest.rows();
    const Eigen::Index cols = rest.cols() / 2;
    // M(l + D s, t) = rest(l, s + 2 t)
    MatC M(2 * D, cols);
    for (Eigen::Index t = 0; t < cols; ++t)
      for (int s = 0; s < 2; ++s)
        for (Eigen::Index l = 0; l < D; ++l) M(l + D * s, t) = rest(l, s + 2 * t);
    Eigen::BDCSVD<MatC> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index keep = std::min<Eigen::Index>(chi, sv.size());
    // Drop exactly-zero singular values beyond the first.
    while (keep > 1 && sv(keep - 1) == 0.0) --keep;
    const MatC U = svd.matrixU().leftCols(keep);
    for (int s = 0; s < 2; ++s) m.sites[k][s] = U.middleRows(D * s, D);
    rest = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
  }
  const double nrm = rest.norm();
  if (nrm == 0.0) throw DomainError("cannot compress a zero vector");
  for (int s = 0; s < 2; ++s) m.sites[n - 1][s] = rest.col(s) / nrm;
  m.normalized = true;
  return m;
}

inline MPS compress(std::span<const double> amps, int chi) {
  std::vector<std::complex<double>> c(amps.begin(), amps.end());
  return compress(std::span<const std::complex<double>>(c), chi);
}

inline std::vector<std::complex<double>> contract(const MPS& m) {
  const int n = m.qubits();
  if (n > kMaxContractQubits) throw ResourceError("contracting " + std::to_string(n) + " qubits exceeds desk scale");
  // rows(t) holds the partial product for the first k sites with bit pattern t.
  MatC rows = MatC::Ones(1, 1);
  for (int k = 0; k < n; ++k) {
    const Eigen::Index P = rows.rows();
    MatC next(2 * P, m.sites[k][0].cols());
    next.topRows(P) = rows * m.sites[k][0];
    next.bottomRows(P) = rows * m.sites[k][1];
    rows = std::move(next);
  }
  std::vector<std::complex<double>> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = rows(i, 0);
  return out;
}

/// <psi|psi> by transfer matrices.
inline double norm_squared(const MPS& m) {
  MatC E = MatC::Ones(1, 1);
  for (const auto& s : m.sites) E = s[0].adjoint() * E * s[0] + s[1].adjoint() * E * s[1];
  return E(0, 0).real();
}

/// |<a|b>|^2 / (<a|a><b|b>)
template <typename A, typename B>
double fidelity(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw ShapeError("fidelity operands differ in size");
  std::complex<double> ip{};
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::complex<double> x(a[i]), y(b[i]);
    ip += std::conj(x) * y;
    na += std::norm(x);
    nb += std::norm(y);
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("fidelity of a zero vector is undefined");
  return std::norm(ip) / (na * nb);
}

inline double fidelity(const std::vector<double>& a, const std::vector<double>& b) {
  return fidelity(std::span<const double>(a), std::span<const double>(b));
}

inline double fidelity(const MPS& m, std::span<const double> b) {
  const auto a = contract(m);
  return fidelity(std::span<const std::complex<double>>(a), b);
}

inline double fidelity(const MPS& a, const MPS& b) {
  const auto x = contract(a), y = contract(b);
  return fidelity(std::span<const std::complex<double>>(x), std::span<const std::complex<double>>(y));
}

struct InfidelityRow {
  int t = 0;
  int chi = 0;
  double infidelity = 0.0;
};

struct InfidelityTable {
  std::vector<InfidelityRow> rows;
  std::vector<std::pair<int, double>> peak;  // (chi, max over t)
};

inline InfidelityTable infidelity_sweep(const std::vector<ScalarField>& trajectory, const std::vector<int>& chis) {
  InfidelityTable tab;
  for (int chi : chis) {
    double peak = 0.0;
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
      const auto& v = trajectory[t].values;
      const MPS m = compress(std::span<const double>(v), chi);
      const auto approx = contract(m);
      const double inf = 1.0 - fidelity(std::span<const std::complex<double>>(approx), std::span<const double>(v));
      tab.rows.push_back({static_cast<int>(t), chi, inf});
      peak = std::max(peak, inf);
    }
    tab.peak.emplace_back(chi, peak);
  }
  return tab;
}

}  // namespace qlbm
