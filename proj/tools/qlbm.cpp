// qlbm command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qlbm/qlbm.hpp"

namespace fs = std::filesystem;
using namespace qlbm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOther = 1;

std::ofstream open_table(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ResourceError(dir.string() + ": " + ec.message());
  const fs::path p = dir / name;
  std::ofstream out(p);
  if (!out) throw ResourceError(p.string() + ": cannot open for writing");
  return out;
}

std::string fmt(double v) { return detail::fmt_double(v); }

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
            bool quiet) {
  Scenario sc = parse_scenario(path);
  if (seed) {
    sc.seed = *seed;
    sc.fit.seed = *seed;
  }
  if (out_dir) sc.output = *out_dir;
  fs::path dir(sc.output);
  if (dir.is_relative() && !out_dir) dir = fs::current_path() / dir;
  auto progress = [&](const StepMetrics& m) {
    if (quiet) return;
    std::printf("t=%3d  fidelity=%.6f  p_success=%.6f", m.t, m.fidelity, m.p_success);
    if (m.readout) std::printf("  accepted=%llu", static_cast<unsigned long long>(m.accepted));
    std::printf("\n");
    std::fflush(stdout);
  };
  const auto res = run_pipeline(sc, progress);
  emit_outputs(res, sc, dir);
  std::printf("final fidelity %.6f, cumulative p_success %.6g, outputs in %s\n", res.report.final_fidelity,
              res.report.cumulative_p, dir.string().c_str());
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  const Scenario sc = parse_scenario(path);
  const auto walls = scenario_walls(sc);
  const auto u = scenario_velocity(sc, walls);
  check_speed_bound(u);
  const double div = max_abs_divergence(u);
  if (div > 1e-12) throw DomainError("velocity divergence " + fmt(div) + " exceeds 1e-12");
  if (walls) validate_wall_velocity(*walls, u, build_model(sc.model));
  (void)scenario_initial(sc, walls);
  std::printf("%s: ok (%s, L=%zu, steps=%d, readout=%s)\n", path.c_str(), sc.model.c_str(), sc.L, sc.steps,
              readout_method_name(sc.readout));
  return kExitOk;
}

int cmd_sweep_mps(const MpsSweepConfig& cfg, const fs::path& dir) {
  const auto res = sweep_mps(cfg, worker_count());
  {
    auto out = open_table(dir, "mps_infidelity.csv");
    out << "grid,chi,t,infidelity\n";
    for (const auto& r : res.rows) out << r.grid << ',' << r.chi << ',' << r.t << ',' << fmt(r.infidelity) << '\n';
  }
  auto out = open_table(dir, "mps_peak.csv");
  out << "grid,chi,t_peak,peak_infidelity\n";
  for (const auto& p : res.peaks) {
    out << p.grid << ',' << p.chi << ',' << p.t_peak << ',' << fmt(p.peak) << '\n';
    std::printf("grid=%zu chi=%d peak infidelity %.3e at t=%d\n", p.grid, p.chi, p.peak, p.t_peak);
  }
  return kExitOk;
}

int cmd_sweep_fwht(const std::vector<std::size_t>& Ls, const std::vector<std::size_t>& Ks, const fs::path& dir) {
  const auto rows = sweep_fwht(Ls, Ks, worker_count());
  auto out = open_table(dir, "fwht_error.csv");
  out << "L,K,relative_error,butterflies,cost_model,nonzeros\n";
  for (const auto& r : rows) {
    out << r.L << ',' << r.K << ',' << fmt(r.relative_error) << ',' << r.butterflies << ',' << fmt(r.cost_model) << ','
        << r.nonzeros << '\n';
    std::printf("L=%zu K=%zu relative error %.3e, %llu butterflies\n", r.L, r.K, r.relative_error,
                static_cast<unsigned long long>(r.butterflies));
  }
  return kExitOk;
}

int cmd_sweep_shadow(ShadowSweepConfig cfg, const std::optional<std::string>& scenario_path, const fs::path& dir) {
  if (scenario_path) cfg.base = parse_scenario(*scenario_path);
  const auto rows = sweep_shadow(cfg, worker_count());
  auto out = open_table(dir, "shadow_fidelity.csv");
  out << "method,shots,seed,t,fidelity\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.shots << ',' << r.seed << ',' << r.t << ',' << fmt(r.fidelity) << '\n';
    if (r.t == cfg.base.steps)
      std::printf("%-6s shots=%llu seed=%llu final fidelity %.4f\n", r.method.c_str(),
                  static_cast<unsigned long long>(r.shots), static_cast<unsigned long long>(r.seed), r.fidelity);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum lattice Boltzmann simulator for advection-diffusion"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string run_path;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  bool quiet = false;
  run->add_option("scenario", run_path, "Scenario JSON file")->required();
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--out", run_out, "Override the output directory");
  run->add_flag("-q,--quiet", quiet, "Suppress per-step progress");

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  std::string validate_path;
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  auto* smps = app.add_subcommand("sweep-mps", "MPS infidelity along the swirl trajectory");
  MpsSweepConfig mps_cfg;
  std::string mps_out = "sweep_mps";
  smps->add_option("--grid", mps_cfg.grids, "Grid sides")->delimiter(',');
  smps->add_option("--chi", mps_cfg.chis, "Bond dimensions")->delimiter(',');
  smps->add_option("--steps-per-side", mps_cfg.steps_per_side, "Trajectory length in units of L");
  smps->add_option("--out", mps_out, "Output directory");

  auto* sfwht = app.add_subcommand("sweep-fwht", "Interpolated FWHT error and butterfly counts");
  std::vector<std::size_t> fwht_L{16, 32}, fwht_K{2, 4, 8, 16};
  std::string fwht_out = "sweep_fwht";
  sfwht->add_option("--L", fwht_L, "Grid sides")->delimiter(',');
  sfwht->add_option("--K", fwht_K, "Samples per axis")->delimiter(',');
  sfwht->add_option("--out", fwht_out, "Output directory");

  auto* sshadow = app.add_subcommand("sweep-shadow", "Shadow-MPS vs direct readout over shot budgets");
  ShadowSweepConfig shadow_cfg;
  std::optional<std::string> shadow_scenario;
  std::string shadow_out = "sweep_shadow";
  std::vector<std::string> shadow_methods{"shadow", "mps"};
  sshadow->add_option("--shots", shadow_cfg.shots, "Total shots per step")->delimiter(',');
  sshadow->add_option("--settings", shadow_cfg.settings, "Measurement settings M");
  sshadow->add_option("--seeds", shadow_cfg.seeds, "Seeds")->delimiter(',');
  sshadow->add_option("--methods", shadow_methods, "Readout methods")->delimiter(',');
  sshadow->add_option("--scenario", shadow_scenario, "Base scenario (defaults to the 16^3 swirl)");
  sshadow->add_option("--out", shadow_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) return cmd_run(run_path, run_seed, run_out, quiet);
    if (*validate) return cmd_validate(validate_path);
    if (*smps) return cmd_sweep_mps(mps_cfg, mps_out);
    if (*sfwht) return cmd_sweep_fwht(fwht_L, fwht_K, fwht_out);
    if (*sshadow) {
      shadow_cfg.methods.clear();
      for (const auto& m : shadow_methods) shadow_cfg.methods.push_back(parse_readout_method(m));
      return cmd_sweep_shadow(shadow_cfg, shadow_scenario, shadow_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const PreconditionError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
