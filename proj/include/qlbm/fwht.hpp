#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"

namespace qlbm {

/// In-place Walsh-Hadamard transform with per-level halving, i.e. (H/2)^{(x)n} a.
/// Entry w of the result is 2^-n sum_i (-1)^popcount(w & i) a_i.
inline void fwht_inplace(std::span<double> a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ShapeError("fwht length must be a power of two");
  for (std::size_t h = 1; h < n; h *= 2)
    for (std::size_t i = 0; i < n; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j], y = a[j + h];
        a[j] = 0.5 * (x + y);
        a[j + h] = 0.5 * (x - y);
      }
}

/// Inverse of fwht_inplace: the same butterfly without halving.
inline void inverse_fwht_inplace(std::span<double> a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ShapeError("fwht length must be a power of two");
  for (std::size_t h = 1; h < n; h *= 2)
    for (std::size_t i = 0; i < n; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j], y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
}

inline std::vector<double> fwht(std::vector<double> a) {
  fwht_inplace(a);
  return a;
}

inline std::vector<double> inverse_fwht(std::vector<double> a) {
  inverse_fwht_inplace(a);
  return a;
}

/// Nonzero entries of an approximate (H/2)^{(x)n} transform of a flattened L^3 field.
struct SparseSpectrum {
  GridSpec grid;
  std::size_t coarsening = 1;  // R = 2^r
  std::size_t samples = 1;     // K = L / R
  std::map<std::size_t, double> entries;
  std::uint64_t butterflies = 0;

  std::vector<double> to_dense() const {
    std::vector<double> d(grid.sites(), 0.0);
    for (const auto& [i, v] : entries) d[i] = v;
    return d;
  }
  std::size_t bound() const {
    const std::size_t r = static_cast<std::size_t>(log2_exact(coarsening));
    return samples * samples * samples * (1 + 3 * r);
  }
};

/// Blockwise-linear approximation of the 3D transform.
///
/// The field is cut into K^3 blocks of R^3 sites. Each block is modelled as affine, whose
/// (H/2)^{(x)r} transform per axis is theta at offset 0 and -slope * 2^(m-1) at offset 2^m
/// (m < r). The first r levels along every axis are thus written down directly; the
/// remaining log2(K) levels per axis run only over the K^3 (1 + 3r) nonzero indices.
///
/// theta is the field at the block midpoint (mean of the 2^3 central sites). Slopes use
/// central differences of neighbouring block midpoints, one-sided at the first and last
/// block of each axis, so affine fields are reproduced exactly.
inline SparseSpectrum interpolated_fwht_3d(const ScalarField& f, std::size_t K) {
  const GridSpec& g = f.grid;
  if (g.dim != 3) throw ShapeError("interpolated_fwht_3d requires a 3D field");
  const std::size_t L = g.side();
  if (!is_power_of_two(K) || K > L || K < 2)
    throw ShapeError("sample count K must be a power of two with 2 <= K <= L");
  const std::size_t R = L / K;
  const int r = log2_exact(R);

  SparseSpectrum out;
  out.grid = g;
  out.coarsening = R;
  out.samples = K;

  auto site = [&](std::size_t x, std::size_t y, std::size_t z) { return x + L * (y + L * z); };

  // Block midpoint values.
  std::vector<double> mid(K * K * K);
  auto bidx = [K](std::size_t i, std::size_t j, std::size_t k) { return i + K * (j + K * k); };
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t i = 0; i < K; ++i) {
        double v = 0.0;
        if (R == 1) {
          v = f[site(i, j, k)];
        } else {
          const std::size_t cx = i * R + R / 2, cy = j * R + R / 2, cz = k * R + R / 2;
          for (std::size_t dz = 0; dz < 2; ++dz)
            for (std::size_t dy = 0; dy < 2; ++dy)
              for (std::size_t dx = 0; dx < 2; ++dx) v += f[site(cx - dx, cy - dy, cz - dz)];
          v /= 8.0;
        }
        mid[bidx(i, j, k)] = v;
      }

  auto slope = [&](std::size_t i, std::size_t j, std::size_t k, int axis) {
    std::array<std::size_t, 3> b{i, j, k};
    const std::size_t pos = b[axis];
    auto at = [&](std::size_t p) {
      auto c = b;
      c[axis] = p;
      return mid[bidx(c[0], c[1], c[2])];
    };
    if (pos == 0) return (at(1) - at(0)) / static_cast<double>(R);
    if (pos == K - 1) return (at(K - 1) - at(K - 2)) / static_cast<double>(R);
    return (at(pos + 1) - at(pos - 1)) / (2.0 * static_cast<double>(R));
  };

  // Offsets within a block that can carry nonzero coefficients.
  const std::size_t strides[3] = {1, L, L * L};
  std::vector<std::size_t> offsets{0};
  for (int a = 0; a < 3; ++a)
    for (int m = 0; m < r; ++m) offsets.push_back(strides[a] << m);

  std::unordered_map<std::size_t, double> theta;
  theta.reserve(K * K * K * offsets.size() * 2);
  std::vector<std::size_t> active;
  active.reserve(K * K * K * offsets.size());
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t i = 0; i < K; ++i) {
        const std::size_t base = site(i * R, j * R, k * R);
        theta[base] = mid[bidx(i, j, k)];
        active.push_back(base);
        for (int a = 0; a < 3; ++a) {
          const double s = slope(i, j, k, a);
          for (int m = 0; m < r; ++m) {
            const std::size_t idx = base + (strides[a] << m);
            theta[idx] = -s * std::ldexp(1.0, m - 1);
            active.push_back(idx);
          }
        }
      }
  std::sort(active.begin(), active.end());

  // Remaining levels, restricted to the active index set.
  for (std::size_t stride : strides) {
    for (std::size_t h = R * stride; h < L * stride; h *= 2) {
      for (std::size_t j : active) {
        if (j & h) continue;
        double& x = theta[j];
        double& y = theta[j + h];
        const double a = x, b = y;
        x = 0.5 * (a + b);
        y = 0.5 * (a - b);
        ++out.butterflies;
      }
    }
  }
  for (std::size_t j : active) out.entries.emplace(j, theta[j]);
  return out;
}

inline double relative_l2_error(std::span<const double> approx, std::span<const double> exact) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num += (approx[i] - exact[i]) * (approx[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  return std::sqrt(num / den);
}

}  // namespace qlbm
