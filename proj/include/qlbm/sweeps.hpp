#pragma once

// Parameter sweeps for the MPS, FWHT and shadow tables. Points run on a bounded worker pool; results are
// stored by point index so output order does not depend on scheduling.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <complex>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/fwht.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/mps.hpp"
#include "qlbm/pipeline.hpp"
#include "qlbm/scenario.hpp"

namespace qlbm {

/// Worker count from QLBM_THREADS, else the hardware concurrency (at least 1).
inline unsigned worker_count() {
  if (const char* env = std::getenv("QLBM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("QLBM_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(0..n-1) on up to `threads` workers. The exception of the lowest failing index is
/// rethrown after all workers finish.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// MPS representability of the swirl trajectory

struct MpsSweepConfig {
  std::vector<std::size_t> grids{16, 32};
  std::vector<int> chis{2, 4, 8, 16};
  int steps_per_side = 4;  // trajectory length T = steps_per_side * L
  double amplitude = 0.2;
  double sigma_fraction = 0.125;                        // sigma = fraction * L
  std::array<double, 3> center_fraction{0.25, 0.25, 0.5};  // off the vortex centre
};

struct MpsSweepRow {
  std::size_t grid = 0;
  int chi = 0;
  int t = 0;
  double infidelity = 0.0;
};

struct MpsPeakRow {
  std::size_t grid = 0;
  int chi = 0;
  int t_peak = 0;
  double peak = 0.0;
};

struct MpsSweepResult {
  std::vector<MpsSweepRow> rows;
  std::vector<MpsPeakRow> peaks;
};

inline std::vector<ScalarField> swirl_trajectory(std::size_t L, const MpsSweepConfig& cfg) {
  const GridSpec g = make_grid(3, L);
  const double Ld = static_cast<double>(L);
  const auto u = swirl_velocity(g, cfg.amplitude);
  const auto phi0 = gaussian_field(g, cfg.sigma_fraction * Ld,
                                   std::array<double, 3>{cfg.center_fraction[0] * Ld, cfg.center_fraction[1] * Ld,
                                                         cfg.center_fraction[2] * Ld});
  return simulate_classical(phi0, u, build_model("D3Q7"), cfg.steps_per_side * static_cast<int>(L));
}

inline MpsSweepResult sweep_mps(const MpsSweepConfig& cfg, unsigned threads = 1) {
  MpsSweepResult out;
  for (std::size_t L : cfg.grids) {
    const auto traj = swirl_trajectory(L, cfg);
    std::vector<std::vector<double>> inf(cfg.chis.size(), std::vector<double>(traj.size()));
    parallel_for(traj.size() * cfg.chis.size(), threads, [&](std::size_t idx) {
      const std::size_t c = idx / traj.size(), t = idx % traj.size();
      const auto& v = traj[t].values;
      const auto approx = contract(compress(std::span<const double>(v), cfg.chis[c]));
      inf[c][t] = 1.0 - fidelity(std::span<const std::complex<double>>(approx), std::span<const double>(v));
    });
    for (std::size_t c = 0; c < cfg.chis.size(); ++c) {
      MpsPeakRow peak{L, cfg.chis[c], 0, -1.0};
      for (std::size_t t = 0; t < traj.size(); ++t) {
        out.rows.push_back({L, cfg.chis[c], static_cast<int>(t), inf[c][t]});
        if (inf[c][t] > peak.peak) {
          peak.peak = inf[c][t];
          peak.t_peak = static_cast<int>(t);
        }
      }
      out.peaks.push_back(peak);
    }
  }
  return out;
}

/// Rises to a single maximum then falls: non-decreasing before the argmax, non-increasing
/// after it, each up to `tol`.
inline bool is_unimodal(const std::vector<double>& v, double tol) {
  if (v.empty()) return true;
  const std::size_t k = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  for (std::size_t i = 1; i <= k; ++i)
    if (v[i] < v[i - 1] - tol) return false;
  for (std::size_t i = k + 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Interpolated FWHT error and cost

struct FwhtSweepRow {
  std::size_t L = 0;
  std::size_t K = 0;
  double relative_error = 0.0;
  std::uint64_t butterflies = 0;
  double cost_model = 0.0;  // K^3 log2(K) log2(N/K), N = L^3
  std::size_t nonzeros = 0;
};

/// 1 + sin(2 pi x/L) sin(2 pi y/L) sin(2 pi z/L)
inline ScalarField fwht_test_field(std::size_t L) {
  const GridSpec g = make_grid(3, L);
  ScalarField f(g);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(L);
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord c = g.coords(r);
    f[r] = 1.0 + std::sin(w * c[0]) * std::sin(w * c[1]) * std::sin(w * c[2]);
  }
  return f;
}

inline std::vector<FwhtSweepRow> sweep_fwht(const std::vector<std::size_t>& Ls, const std::vector<std::size_t>& Ks,
                                            unsigned threads = 1) {
  std::vector<std::pair<std::size_t, std::size_t>> points;
  for (std::size_t L : Ls) {
    if (!is_power_of_two(L) || L < 2) throw ConfigError("L values must be powers of two >= 2");
    for (std::size_t K : Ks) {
      if (!is_power_of_two(K) || K < 2) throw ConfigError("K values must be powers of two >= 2");
      if (K <= L) points.emplace_back(L, K);
    }
  }
  std::vector<FwhtSweepRow> rows(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const auto [L, K] = points[i];
    const ScalarField f = fwht_test_field(L);
    const auto exact = fwht(f.values);
    const SparseSpectrum sp = interpolated_fwht_3d(f, K);
    const auto approx = sp.to_dense();
    FwhtSweepRow& row = rows[i];
    row.L = L;
    row.K = K;
    row.relative_error = relative_l2_error(approx, exact);
    row.butterflies = sp.butterflies;
    const double k = std::log2(static_cast<double>(K));
    const double N = std::pow(static_cast<double>(L), 3);
    row.cost_model = std::pow(static_cast<double>(K), 3) * k * std::log2(N / static_cast<double>(K));
    row.nonzeros = sp.entries.size();
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Shadow vs direct readout

/// 16^3 D3Q7 swirl with readout-reload every step; shared by the shipped scenario file.
inline Scenario shadow_swirl_scenario() {
  Scenario s;
  s.model = "D3Q7";
  s.L = 16;
  s.steps = 10;
  s.velocity.preset = "swirl";
  s.velocity.amplitude = 0.2;
  s.initial.type = "gaussian";
  s.initial.sigma = 6.0;
  s.readout = ReadoutMethod::Shadow;
  s.readout_period = 1;
  s.shots = 20000;
  s.settings = 25;
  s.chi = 3;
  s.write_fields = false;
  return s;
}

struct ShadowSweepRow {
  std::string method;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  int t = 0;
  double fidelity = 0.0;
};

struct ShadowSweepConfig {
  Scenario base = shadow_swirl_scenario();
  std::vector<std::uint64_t> shots{1000, 10000, 20000};
  int settings = 25;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<ReadoutMethod> methods{ReadoutMethod::Shadow, ReadoutMethod::Mps};
};

inline std::vector<ShadowSweepRow> sweep_shadow(const ShadowSweepConfig& cfg, unsigned threads = 1) {
  struct Point {
    ReadoutMethod method;
    std::uint64_t shots, seed;
  };
  std::vector<Point> points;
  for (auto method : cfg.methods)
    for (auto shots : cfg.shots)
      for (auto seed : cfg.seeds) points.push_back({method, shots, seed});
  std::vector<std::vector<ShadowSweepRow>> results(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    Scenario s = cfg.base;
    s.readout = points[i].method;
    s.shots = points[i].shots;
    s.seed = points[i].seed;
    s.fit.seed = points[i].seed;
    s.settings = cfg.settings;
    s.write_fields = false;
    detail::validate_scenario(s);
    const auto res = run_pipeline(s);
    for (const auto& m : res.report.per_step)
      results[i].push_back({readout_method_name(s.readout), s.shots, s.seed, m.t, m.fidelity});
  });
  std::vector<ShadowSweepRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

}  // namespace qlbm
