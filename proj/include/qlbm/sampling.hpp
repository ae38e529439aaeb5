#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/statevector.hpp"

namespace qlbm {

// ---------------------------------------------------------------------------
// Counter-based randomness: every (seed, shot, stream) triple maps to a fixed uniform,
// so sampling does not depend on evaluation order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t shot, std::uint64_t stream) {
  const std::uint64_t h = splitmix64(splitmix64(seed ^ splitmix64(shot)) + stream * 0xd1b54a32d192ed03ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------

struct Histogram {
  std::map<std::uint64_t, std::uint64_t> counts;  // grid index -> count
  std::uint64_t total = 0;

  void add(std::uint64_t key, std::uint64_t n = 1) {
    counts[key] += n;
    total += n;
  }
};

/// Per-grid-qubit single-qubit rotations appended before a computational-basis measurement.
struct MeasurementSetting {
  std::vector<Mat2> rotations;  // rotations[q] acts on grid qubit q
  std::uint64_t seed = 0;
};

enum class ShotClass { Accepted, Rejected };

/// Accepted iff the direction and ancilla registers read all zeros.
inline ShotClass classify(std::uint64_t bitstring, const RegisterLayout& layout) {
  return (bitstring >> layout.grid_qubits) == 0 ? ShotClass::Accepted : ShotClass::Rejected;
}

struct MeasurementResult {
  Histogram histogram;              // accepted shots, keyed by grid value
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t corrupted_accepted = 0;  // noise-free outcome accepted, at least one bit flipped
  std::uint64_t corrupted_kept = 0;      // of those, still classified accepted
};

inline void apply_setting(StateVector& s, const MeasurementSetting& setting) {
  if (static_cast<int>(setting.rotations.size()) != s.layout.grid_qubits)
    throw ShapeError("measurement setting has " + std::to_string(setting.rotations.size()) +
                     " rotations for " + std::to_string(s.layout.grid_qubits) + " grid qubits");
  for (int q = 0; q < s.layout.grid_qubits; ++q) apply_1q(s, q, setting.rotations[q]);
}

/// Sample `shots` bitstrings from |amplitude|^2 (after the optional setting rotations).
/// With noise_p > 0 every direction bit flips independently with that probability before
/// classification. Rejected shots are counted and left out of the histogram.
inline MeasurementResult measure_histogram(const StateVector& state, const MeasurementSetting* setting,
                                           std::uint64_t shots, double noise_p, std::uint64_t seed) {
  if (shots == 0) throw DomainError("shot count must be at least 1");
  if (!(noise_p >= 0.0 && noise_p <= 1.0)) throw DomainError("noise probability must lie in [0, 1]");
  const StateVector* src = &state;
  StateVector rotated;
  if (setting) {
    rotated = state;
    apply_setting(rotated, *setting);
    src = &rotated;
  }
  std::vector<double> cdf(src->amp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += std::norm(src->amp[i]);
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw NumericalError("cannot sample from a zero statevector");

  const RegisterLayout& lay = state.layout;
  MeasurementResult res;
  for (std::uint64_t k = 0; k < shots; ++k) {
    const double u = counter_uniform(seed, k, 0) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    std::uint64_t b = static_cast<std::uint64_t>(it - cdf.begin());
    const bool clean_accept = classify(b, lay) == ShotClass::Accepted;
    bool flipped = false;
    if (noise_p > 0.0) {
      for (int j = 0; j < lay.dir_qubits; ++j) {
        if (counter_uniform(seed, k, 1 + static_cast<std::uint64_t>(j)) < noise_p) {
          b ^= std::uint64_t{1} << lay.dir_qubit(j);
          flipped = true;
        }
      }
    }
    const bool accepted = classify(b, lay) == ShotClass::Accepted;
    if (clean_accept && flipped) {
      ++res.corrupted_accepted;
      if (accepted) ++res.corrupted_kept;
    }
    if (accepted) {
      ++res.accepted;
      res.histogram.add(b & lay.grid_mask());
    } else {
      ++res.rejected;
    }
  }
  return res;
}

}  // namespace qlbm
