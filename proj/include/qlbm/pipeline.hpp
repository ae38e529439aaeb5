#pragma once

// Scenario execution: classical reference, quantum chain with optional readout-reload, metrics
// and file outputs.

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qlbm/circuit.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/mps.hpp"
#include "qlbm/readout.hpp"
#include "qlbm/sampling.hpp"
#include "qlbm/scenario.hpp"

namespace qlbm {

struct StepMetrics {
  int t = 0;
  double fidelity = 1.0;         // reconstructed (or exact) state vs classical truth
  double exact_fidelity = 1.0;   // post-selected state before readout vs classical truth
  double p_success = 1.0;
  bool readout = false;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  double wall_leakage = 0.0;     // max |Phi| over wall sites
  double mass_error = 0.0;       // |mass_t - mass_0| / mass_0 of the exact quantum chain
  double max_deviation = 0.0;    // max |Phi_quantum - Phi_classical|, unnormalized
};

struct MetricsReport {
  std::string model;
  std::size_t L = 0;
  int steps = 0;
  std::string readout = "none";
  std::string route = "isometry";
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;
  int settings = 0;
  int chi = 0;
  double bandwidth = 0.0;
  double noise_p = 0.0;
  std::vector<StepMetrics> per_step;
  double cumulative_p = 1.0;
  double final_fidelity = 1.0;
  double max_wall_leakage = 0.0;
  double max_mass_error = 0.0;
  double max_deviation = 0.0;
  double elapsed_seconds = 0.0;  // kept out of metrics.json so that file is reproducible
};

struct PipelineResult {
  MetricsReport report;
  std::vector<ScalarField> quantum;    // t = 0..T, unit norm, as reloaded after readout
  std::vector<ScalarField> classical;  // t = 0..T, unnormalized classical reference
};

namespace detail {

inline double max_over_walls(const ScalarField& f, const std::optional<WallMask>& walls) {
  double m = 0.0;
  if (!walls) return m;
  for (std::size_t r = 0; r < f.size(); ++r)
    if ((*walls)[r]) m = std::max(m, std::abs(f[r]));
  return m;
}

inline std::uint64_t step_seed(std::uint64_t seed, int t, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(t) * 0x9e3779b97f4a7c15ULL + stream));
}

}  // namespace detail

/// Runs the scenario. `on_step`, when set, is called after every step.
inline PipelineResult run_pipeline(const Scenario& sc, const std::function<void(const StepMetrics&)>& on_step = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  const LatticeModel model = build_model(sc.model);
  const GridSpec grid = scenario_grid(sc);
  const auto walls = scenario_walls(sc);
  const VelocityField u = scenario_velocity(sc, walls);
  const ScalarField phi0 = scenario_initial(sc, walls);

  PipelineResult out;
  MetricsReport& rep = out.report;
  rep.model = sc.model;
  rep.L = sc.L;
  rep.steps = sc.steps;
  rep.readout = readout_method_name(sc.readout);
  rep.route = route_name(sc.route);
  rep.seed = sc.seed;
  rep.shots = sc.readout == ReadoutMethod::None ? 0 : sc.shots;
  rep.settings = is_shadow_method(sc.readout) ? sc.settings : 0;
  rep.chi = sc.chi;
  rep.bandwidth = sc.bandwidth;
  rep.noise_p = sc.noise_p;

  const QlbmOperator op(model, u, walls, sc.gates);
  out.classical = simulate_classical(phi0, u, model, sc.steps, walls ? &*walls : nullptr);
  out.quantum.push_back(phi0);

  const RegisterLayout layout = op.layout();
  const double norm0 = phi0.norm();
  const double mass0 = phi0.sum();
  StateVector current = encode_density(phi0, layout);
  // Exact-chain bookkeeping: ||Phi_t|| relative to ||Phi_0|| for the state actually evolved.
  double scale = norm0;
  std::optional<MPS> warm;

  for (int t = 1; t <= sc.steps; ++t) {
    StepMetrics m;
    m.t = t;
    StepResult sr;
    try {
      sr = qlbm_step(current, op, sc.route);
    } catch (const Error& e) {
      throw NumericalError("step " + std::to_string(t) + ": " + e.what());
    }
    m.p_success = sr.p_success;
    rep.cumulative_p *= sr.p_success;
    scale *= std::sqrt(sr.p_success);

    ScalarField exact = grid_density(sr.grid_state, grid);
    const ScalarField& truth = out.classical[static_cast<std::size_t>(t)];
    m.exact_fidelity = fidelity(exact.values, truth.values);

    ScalarField unnorm = exact;
    for (double& x : unnorm.values) x *= scale;
    m.wall_leakage = detail::max_over_walls(unnorm, walls);
    m.mass_error = std::abs(unnorm.sum() - mass0) / std::abs(mass0);
    for (std::size_t r = 0; r < unnorm.size(); ++r)
      m.max_deviation = std::max(m.max_deviation, std::abs(unnorm[r] - truth[r]));

    const bool do_readout = sc.readout != ReadoutMethod::None && t % sc.readout_period == 0;
    ScalarField reloaded = exact;
    if (do_readout) {
      m.readout = true;
      ReadoutInputs in;
      in.grid = grid;
      in.bandwidth = sc.bandwidth;
      in.chi = sc.chi;
      in.fit = sc.fit;
      in.fit.seed = detail::step_seed(sc.seed, t, 3);
      MeasurementResult direct;
      ShadowDataset shadow;
      try {
        if (is_shadow_method(sc.readout)) {
          auto settings = generate_settings(sc.settings, grid.qubits(), detail::step_seed(sc.seed, t, 1));
          shadow = collect_shadow_dataset(sr.pre_selection, std::move(settings), sc.shots, sc.noise_p,
                                          detail::step_seed(sc.seed, t, 2));
          m.accepted = shadow.accepted;
          m.rejected = shadow.rejected;
          in.shadow = &shadow;
          if (!warm) {
            const ScalarField& prev = out.quantum.back();
            warm = compress(std::span<const double>(prev.values), sc.chi);
          }
          in.warm_start = &*warm;
        } else {
          direct = measure_histogram(sr.pre_selection, nullptr, sc.shots, sc.noise_p, detail::step_seed(sc.seed, t, 2));
          m.accepted = direct.accepted;
          m.rejected = direct.rejected;
          in.histogram = &direct.histogram;
        }
        if (m.accepted == 0) throw NumericalError("no accepted shots");
        reloaded = reconstruct(sc.readout, in);
        if (walls) {
          // Wall positions are known; smoothing must not move density into them.
          zero_walls(reloaded, *walls);
          const double n = reloaded.norm();
          if (n == 0.0) throw NumericalError("reconstruction has no density outside the walls");
          for (double& x : reloaded.values) x /= n;
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw NumericalError("step " + std::to_string(t) + " readout: " + e.what());
      }
      if (is_shadow_method(sc.readout)) warm = compress(std::span<const double>(reloaded.values), sc.chi);
      current = encode_density(reloaded, layout);
      scale = norm0 * std::sqrt(rep.cumulative_p);
    } else {
      current = std::move(sr.grid_state);
    }
    m.fidelity = fidelity(reloaded.values, truth.values);
    out.quantum.push_back(std::move(reloaded));

    rep.max_wall_leakage = std::max(rep.max_wall_leakage, m.wall_leakage);
    rep.max_mass_error = std::max(rep.max_mass_error, m.mass_error);
    rep.max_deviation = std::max(rep.max_deviation, m.max_deviation);
    rep.per_step.push_back(m);
    if (on_step) on_step(m);
  }
  rep.final_fidelity = rep.per_step.empty() ? 1.0 : rep.per_step.back().fidelity;
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Outputs

namespace detail {

/// Shortest decimal that round-trips to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(p, mode);
  if (!f) throw ResourceError(p.string() + ": cannot open for writing");
  return f;
}

inline void check_written(std::ofstream& f, const std::filesystem::path& p) {
  f.flush();
  if (!f) throw ResourceError(p.string() + ": write failed");
}

inline std::string step_tag(int t) {
  std::string s = std::to_string(t);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace detail

inline nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json j;
  j["model"] = r.model;
  j["L"] = r.L;
  j["steps"] = r.steps;
  j["readout"] = r.readout;
  j["route"] = r.route;
  j["seed"] = r.seed;
  j["shots"] = r.shots;
  j["settings"] = r.settings;
  j["chi"] = r.chi;
  j["bandwidth"] = r.bandwidth;
  j["noise_p"] = r.noise_p;
  j["cumulative_p"] = r.cumulative_p;
  j["final_fidelity"] = r.final_fidelity;
  j["max_wall_leakage"] = r.max_wall_leakage;
  j["max_mass_error"] = r.max_mass_error;
  j["max_deviation"] = r.max_deviation;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& m : r.per_step) {
    steps.push_back({{"t", m.t},
                     {"fidelity", m.fidelity},
                     {"exact_fidelity", m.exact_fidelity},
                     {"p_success", m.p_success},
                     {"readout", m.readout},
                     {"accepted", m.accepted},
                     {"rejected", m.rejected},
                     {"wall_leakage", m.wall_leakage},
                     {"mass_error", m.mass_error},
                     {"max_deviation", m.max_deviation}});
  }
  j["per_step"] = steps;
  return j;
}

inline void write_field_csv(const ScalarField& f, const std::filesystem::path& p) {
  auto out = detail::open_out(p);
  out << "x,y,z,value\n";
  for (std::size_t r = 0; r < f.size(); ++r) {
    const Coord c = f.grid.coords(r);
    out << c[0] << ',' << c[1] << ',' << c[2] << ',' << detail::fmt_double(f[r]) << '\n';
  }
  detail::check_written(out, p);
}

inline ScalarField read_field_csv(const std::filesystem::path& p, const GridSpec& g) {
  std::ifstream in(p);
  if (!in) throw ResourceError(p.string() + ": cannot open");
  ScalarField f(g);
  std::string line;
  std::getline(in, line);
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int xyz[3];
    const char* s = line.data();
    const char* e = s + line.size();
    for (int& v : xyz) {
      auto r = std::from_chars(s, e, v);
      if (r.ec != std::errc{}) throw ResourceError(p.string() + ": malformed row");
      s = r.ptr + 1;
    }
    double v = 0.0;
    auto r = std::from_chars(s, e, v);
    if (r.ec != std::errc{}) throw ResourceError(p.string() + ": malformed value");
    f[g.index({xyz[0], xyz[1], xyz[2]})] = v;
    ++n;
  }
  if (n != g.sites()) throw ResourceError(p.string() + ": expected " + std::to_string(g.sites()) + " rows");
  return f;
}

/// Raw little-endian float64 values, x fastest, plus a JSON shape sidecar.
inline void write_field_blob(const ScalarField& f, const std::filesystem::path& p) {
  static_assert(std::endian::native == std::endian::little, "blob writer assumes a little-endian host");
  {
    auto out = detail::open_out(p, std::ios::out | std::ios::binary);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    detail::check_written(out, p);
  }
  nlohmann::json shape;
  std::vector<std::size_t> dims(static_cast<std::size_t>(f.grid.dim), f.grid.side());
  shape["shape"] = dims;
  shape["dtype"] = "float64";
  shape["byte_order"] = "little";
  shape["order"] = "x-fastest";
  const auto sp = std::filesystem::path(p).replace_extension(".json");
  auto out = detail::open_out(sp);
  out << shape.dump(2) << '\n';
  detail::check_written(out, sp);
}

inline void write_cross_section(const ScalarField& q, const ScalarField& c, const CrossSection& cs,
                                const std::filesystem::path& p) {
  auto out = detail::open_out(p);
  const GridSpec& g = q.grid;
  int a1 = cs.axis == 0 ? 1 : 0;
  int a2 = cs.axis == 2 ? 1 : 2;
  const char* names = "xyz";
  if (g.dim == 2) a2 = -1;
  out << names[a1];
  if (a2 >= 0) out << ',' << names[a2];
  out << ",quantum,classical\n";
  for (std::size_t r = 0; r < g.sites(); ++r) {
    const Coord co = g.coords(r);
    if (co[cs.axis] != cs.position) continue;
    out << co[a1];
    if (a2 >= 0) out << ',' << co[a2];
    out << ',' << detail::fmt_double(q[r]) << ',' << detail::fmt_double(c[r]) << '\n';
  }
  detail::check_written(out, p);
}

/// Writes metrics.json into `dir`. A non-empty run adds fidelity.csv, timing.json and (when
/// requested) per-step fields and cross sections.
inline void emit_outputs(const PipelineResult& res, const Scenario& sc, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError(dir.string() + ": " + ec.message());
  {
    const auto p = dir / "metrics.json";
    auto out = detail::open_out(p);
    out << metrics_json(res.report).dump(2) << '\n';
    detail::check_written(out, p);
  }
  if (res.report.per_step.empty()) return;
  {
    const auto p = dir / "timing.json";
    auto out = detail::open_out(p);
    nlohmann::json j;
    j["elapsed_seconds"] = res.report.elapsed_seconds;
    out << j.dump(2) << '\n';
    detail::check_written(out, p);
  }
  {
    const auto p = dir / "fidelity.csv";
    auto out = detail::open_out(p);
    out << "t,fidelity,exact_fidelity,p_success,accepted,rejected,wall_leakage,mass_error\n";
    for (const auto& m : res.report.per_step)
      out << m.t << ',' << detail::fmt_double(m.fidelity) << ',' << detail::fmt_double(m.exact_fidelity) << ','
          << detail::fmt_double(m.p_success) << ',' << m.accepted << ',' << m.rejected << ','
          << detail::fmt_double(m.wall_leakage) << ',' << detail::fmt_double(m.mass_error) << '\n';
    detail::check_written(out, p);
  }
  for (std::size_t t = 0; t < res.quantum.size(); ++t) {
    const std::string tag = detail::step_tag(static_cast<int>(t));
    if (sc.write_fields) {
      write_field_csv(res.quantum[t], dir / ("quantum_t" + tag + ".csv"));
      write_field_blob(res.quantum[t], dir / ("quantum_t" + tag + ".f64"));
      write_field_csv(res.classical[t], dir / ("classical_t" + tag + ".csv"));
      write_field_blob(res.classical[t], dir / ("classical_t" + tag + ".f64"));
    }
    // Cross sections compare on a common scale: classical density rescaled to unit norm.
    for (const auto& cs : sc.cross_sections) {
      ScalarField c = res.classical[t];
      const double n = c.norm();
      if (n > 0.0)
        for (double& x : c.values) x /= n;
      const std::string name = std::string("section_") + "xyz"[cs.axis] + std::to_string(cs.position) + "_t" + tag + ".csv";
      write_cross_section(res.quantum[t], c, cs, dir / name);
    }
  }
}

}  // namespace qlbm
