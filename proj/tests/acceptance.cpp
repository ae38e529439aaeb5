// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
// Thresholds and runtime budgets are fixed here and not adjusted to results.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "qlbm/qlbm.hpp"

using namespace qlbm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScalarField random_positive_field(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  ScalarField f(g);
  for (double& x : f.values) x = d(rng);
  return f;
}

// 1. One qlbm_step against classical_step on random instances.
Outcome oracle_equivalence() {
  double worst_amp = 0.0, worst_p = 0.0;
  int instances = 0;
  for (const char* name : {"D2Q5", "D3Q7"}) {
    const auto model = build_model(name);
    const GridSpec g = make_grid(model.dim, 4);
    std::mt19937_64 rng(name[1] == '2' ? 11 : 13);
    for (std::uint64_t k = 0; k < 50; ++k, ++instances) {
      const auto u = random_divergence_free(g, 0.3, 1000 + k);
      const auto phi = random_positive_field(g, rng);
      const QlbmOperator op(model, u);
      const auto expect = classical_step(phi, op.kernels(), model);
      const auto step = qlbm_step(encode_density(phi, op.layout()), op);
      const auto got = grid_density(step.grid_state, g);
      const double n1 = expect.norm();
      for (std::size_t r = 0; r < g.sites(); ++r) worst_amp = std::max(worst_amp, std::abs(got[r] - expect[r] / n1));
      const double ratio = n1 * n1 / (phi.norm() * phi.norm());
      worst_p = std::max(worst_p, std::abs(step.p_success - ratio));
    }
  }
  return {worst_amp <= 1e-10 && worst_p <= 1e-10,
          fmt("%d instances, max amplitude deviation %.2e, max p_success deviation %.2e", instances, worst_amp,
              worst_p)};
}

// 2. Gate-sequence PREP/UNPREP against the isometry definitions on 8^3.
Outcome route_equivalence() {
  const auto model = build_model("D3Q7");
  const GridSpec g = make_grid(3, 8);
  double worst_prep = 0.0, worst_unprep = 0.0, worst_step = 0.0;
  std::mt19937_64 rng(5);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const QlbmOperator op(model, random_divergence_free(g, 0.3, 2000 + k));
    const auto& lay = op.layout();
    const auto phi = random_positive_field(g, rng);

    StateVector a = encode_density(phi, lay), b = a;
    op.prep(a, Route::Isometry);
    op.prep(b, Route::Gates);
    for (std::size_t i = 0; i < a.amp.size(); ++i) worst_prep = std::max(worst_prep, std::abs(a.amp[i] - b.amp[i]));

    // Unprep on a random state spread over the one-hot sector; only <r,0| is defined by the isometry.
    std::normal_distribution<double> nd;
    StateVector x(lay);
    for (std::size_t r = 0; r < g.sites(); ++r)
      for (int i = 0; i < model.q; ++i) x.amp[lay.index(r, RegisterLayout::one_hot(i))] = nd(rng);
    x.normalize();
    StateVector y = x;
    op.unprep(x, Route::Isometry);
    op.unprep(y, Route::Gates);
    for (std::size_t r = 0; r < g.sites(); ++r) worst_unprep = std::max(worst_unprep, std::abs(x.amp[r] - y.amp[r]));

    const auto s1 = qlbm_step(encode_density(phi, lay), op, Route::Isometry);
    const auto s2 = qlbm_step(encode_density(phi, lay), op, Route::Gates);
    for (std::size_t r = 0; r < g.sites(); ++r)
      worst_step = std::max(worst_step, std::abs(s1.grid_state.amp[r] - s2.grid_state.amp[r]));
  }
  const double worst = std::max({worst_prep, worst_unprep, worst_step});
  return {worst <= 1e-10, fmt("3 fields on 8^3, max deviation prep %.2e, unprep %.2e, full step %.2e", worst_prep,
                              worst_unprep, worst_step)};
}

// 3. Mass, wall leakage and quantum/classical agreement over 60 steps.
Outcome conservation() {
  auto walls = parse_scenario(std::string(QLBM_SOURCE_DIR) + "/scenarios/shear_walls2d.json");
  walls.route = Route::Gates;
  walls.write_fields = false;
  auto periodic = walls;
  periodic.walls = {};
  auto periodic3d = parse_scenario_text(R"({"model": "D3Q7", "L": 16, "steps": 60, "velocity": {"preset": "swirl"}})");

  bool ok = true;
  std::ostringstream d;
  for (const auto* sc : {&periodic, &periodic3d, &walls}) {
    const auto res = run_pipeline(*sc);
    const auto& rep = res.report;
    double classical_mass = 0.0, classical_leak = 0.0;
    const auto mask = scenario_walls(*sc);
    for (const auto& f : res.classical) {
      classical_mass = std::max(classical_mass, std::abs(f.sum() - res.classical[0].sum()) / res.classical[0].sum());
      if (mask)
        for (std::size_t r = 0; r < f.size(); ++r)
          if ((*mask)[r]) classical_leak = std::max(classical_leak, std::abs(f[r]));
    }
    const bool pass = rep.steps == 60 && rep.max_mass_error <= 1e-12 && classical_mass <= 1e-12 &&
                      rep.max_wall_leakage <= 1e-14 && classical_leak <= 1e-14 && rep.max_deviation <= 1e-8;
    ok = ok && pass;
    d << sc->model << " L=" << sc->L << (mask ? " walls" : " periodic") << ": mass " << fmt("%.1e", rep.max_mass_error)
      << "/" << fmt("%.1e", classical_mass) << ", leakage " << fmt("%.1e", std::max(rep.max_wall_leakage, classical_leak))
      << ", deviation " << fmt("%.1e", rep.max_deviation) << "; ";
  }
  return {ok, d.str()};
}

// 4. Fixed-chi MPS infidelity along the swirl trajectory.
Outcome mps_representability() {
  MpsSweepConfig cfg;
  cfg.chis = {4, 8, 16};
  const auto res = sweep_mps(cfg, worker_count());
  bool unimodal = true, decreasing = true, collapse = true;
  std::ostringstream d;
  std::map<std::pair<std::size_t, int>, double> peak;
  for (const auto& p : res.peaks) peak[{p.grid, p.chi}] = p.peak;
  for (int chi : cfg.chis) {
    std::vector<double> curve;
    for (const auto& r : res.rows)
      if (r.grid == 32 && r.chi == chi) curve.push_back(r.infidelity);
    const bool u = is_unimodal(curve, 1e-15);
    unimodal = unimodal && u;
    const double ratio = peak[{32, chi}] / peak[{16, chi}];
    collapse = collapse && ratio <= 3.0 && ratio >= 1.0 / 3.0;
    d << fmt("chi=%d: 32^3 %s peak %.2e, 16^3 peak %.2e, ratio %.2f; ", chi, u ? "unimodal" : "NOT unimodal",
             peak[{32, chi}], peak[{16, chi}], ratio);
  }
  for (std::size_t c = 1; c < cfg.chis.size(); ++c)
    decreasing = decreasing && peak[{32, cfg.chis[c]}] < peak[{32, cfg.chis[c - 1]}];
  d << "unimodal " << (unimodal ? "yes" : "no") << ", peaks decrease " << (decreasing ? "yes" : "no")
    << ", collapse within 3x " << (collapse ? "yes" : "no");
  return {unimodal && decreasing && collapse, d.str()};
}

// 5. Shadow-MPS against direct histogram + MPS readout, readout-reload every step.
Outcome shadow_vs_direct() {
  ShadowSweepConfig cfg;
  cfg.shots = {1000, 20000};
  cfg.seeds = {0, 1, 2};
  cfg.methods = {ReadoutMethod::Shadow, ReadoutMethod::Mps};
  const auto rows = sweep_shadow(cfg, worker_count());
  auto final_mean = [&](ReadoutMethod m, std::uint64_t shots) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.method == readout_method_name(m) && r.shots == shots && r.t == cfg.base.steps) {
        s += r.fidelity;
        ++n;
      }
    return s / n;
  };
  const double sh20 = final_mean(ReadoutMethod::Shadow, 20000), di20 = final_mean(ReadoutMethod::Mps, 20000);
  const double sh1 = final_mean(ReadoutMethod::Shadow, 1000), di1 = final_mean(ReadoutMethod::Mps, 1000);
  const bool a = sh20 >= 0.85, b = di20 <= sh20 - 0.10, c = sh1 >= 0.65, e = di1 <= 0.35;
  return {a && b && c && e,
          fmt("20k shots: shadow %.4f (>= 0.85 %s), direct %.4f (<= shadow - 0.10 %s); "
              "1k shots: shadow %.4f (>= 0.65 %s), direct %.4f (<= 0.35 %s)",
              sh20, a ? "ok" : "FAILS", di20, b ? "ok" : "FAILS", sh1, c ? "ok" : "FAILS", di1, e ? "ok" : "FAILS")};
}

// 6. KDE + MPS smoothing against the raw histogram on the 8^3 swirl at T = 6.
Outcome smoothing_non_inferiority() {
  const auto sc = parse_scenario(std::string(QLBM_SOURCE_DIR) + "/scenarios/swirl8_kde_mps.json");
  const auto model = build_model(sc.model);
  const GridSpec g = scenario_grid(sc);
  const auto u = scenario_velocity(sc, std::nullopt);
  const auto phi0 = scenario_initial(sc, std::nullopt);
  const auto truth = simulate_classical(phi0, u, model, sc.steps).back();
  const QlbmOperator op(model, u);
  const auto chain = run_chain(encode_density(phi0, op.layout()), op, sc.steps);
  int wins = 0;
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Sampling the post-selected state is the same as keeping the first 7,500 accepted shots.
    const auto m = measure_histogram(chain.final_state, nullptr, 7500, 0.0, splitmix64(seed + 77));
    ReadoutInputs in;
    in.grid = g;
    in.histogram = &m.histogram;
    in.bandwidth = sc.bandwidth;
    in.chi = sc.chi;
    const double raw = fidelity(reconstruct(ReadoutMethod::Raw, in).values, truth.values);
    const double smooth = fidelity(reconstruct(ReadoutMethod::KdeMps, in).values, truth.values);
    wins += smooth >= raw;
    mean += (smooth - raw) / 10.0;
  }
  return {wins >= 9 && mean >= 0.01,
          fmt("kde+mps >= raw in %d/10 seeds, mean improvement %.4f (bandwidth %.2f, chi %d, sigma L/8)", wins, mean,
              sc.bandwidth, sc.chi)};
}

// 7. FWHT against the dense transform; interpolated variant exactness, convergence and cost.
Outcome transform_correctness() {
  double worst_dense = 0.0;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int n = 1; n <= 15; ++n) {
    const std::size_t N = std::size_t{1} << n;
    std::vector<double> a(N);
    for (auto& x : a) x = nd(rng);
    const auto fast = fwht(a);
    for (std::size_t w = 0; w < N; ++w) {
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i) s += std::popcount(w & i) % 2 ? -a[i] : a[i];
      worst_dense = std::max(worst_dense, std::abs(fast[w] - s / static_cast<double>(N)));
    }
  }

  double worst_trilinear = 0.0;
  for (std::size_t L : {8u, 16u, 32u}) {
    const GridSpec g = make_grid(3, L);
    ScalarField f(g);
    for (std::size_t r = 0; r < g.sites(); ++r) {
      const Coord c = g.coords(r);
      f[r] = 0.4 + 0.13 * c[0] - 0.06 * c[1] + 0.02 * c[2];
    }
    const auto exact = fwht(f.values);
    for (std::size_t K = 2; K <= L; K *= 2) {
      const auto approx = interpolated_fwht_3d(f, K).to_dense();
      for (std::size_t i = 0; i < exact.size(); ++i)
        worst_trilinear = std::max(worst_trilinear, std::abs(approx[i] - exact[i]));
    }
  }

  const auto rows = sweep_fwht({16, 32}, {2, 4, 8, 16, 32}, worker_count());
  bool decreasing = true, exact_at_L = true, cost = true;
  double lo = 1e300, hi = 0.0;
  for (std::size_t L : {16u, 32u}) {
    double prev = 1e300;
    for (const auto& r : rows) {
      if (r.L != L) continue;
      decreasing = decreasing && r.relative_error < prev;
      prev = r.relative_error;
      if (r.K == L) exact_at_L = exact_at_L && r.relative_error <= 1e-12;
      if (r.K <= 8) {
        const double ratio = static_cast<double>(r.butterflies) / r.cost_model;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        cost = cost && ratio >= 0.5 && ratio <= 2.0;
      }
    }
  }
  const bool ok = worst_dense <= 1e-12 && worst_trilinear <= 1e-12 && decreasing && exact_at_L && cost;
  return {ok, fmt("dense n<=15 max dev %.2e; trilinear max dev %.2e; sinusoid error decreasing %s, exact at K=L %s; "
                  "butterflies/model in [%.2f, %.2f]",
                  worst_dense, worst_trilinear, decreasing ? "yes" : "no", exact_at_L ? "yes" : "no", lo, hi)};
}

// 8. Direction-register bit flips never leave a corrupted shot in the accepted sector.
Outcome sector_filtering() {
  const GridSpec g = make_grid(3, 8);
  const QlbmOperator op(build_model("D3Q7"), swirl_velocity(g, 0.2));
  const auto pre = qlbm_step(encode_density(gaussian_field(g, 1.0), op.layout()), op).pre_selection;
  std::vector<double> fraction;
  std::uint64_t corrupted = 0, kept = 0;
  for (double p : {0.0, 0.001, 0.01}) {
    const auto m = measure_histogram(pre, nullptr, 100000, p, 99);
    corrupted += m.corrupted_accepted;
    kept += m.corrupted_kept;
    fraction.push_back(static_cast<double>(m.accepted) / 1e5);
  }
  const bool monotone = fraction[1] < fraction[0] && fraction[2] < fraction[1];
  return {kept == 0 && corrupted > 0 && monotone,
          fmt("%llu corrupted accepted-sector shots, %llu kept; accepted fraction %.5f, %.5f, %.5f at p = 0, 1e-3, 1e-2",
              static_cast<unsigned long long>(corrupted), static_cast<unsigned long long>(kept), fraction[0],
              fraction[1], fraction[2])};
}

// 9. Hellinger-loss gradient against central differences.
Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    std::mt19937_64 rng(500 + inst);
    const int n = 4, M = 5;
    ShadowDataset ds;
    ds.grid_qubits = n;
    ds.settings = generate_settings(M, n, 900 + inst);
    for (int m = 0; m < M; ++m) {
      Histogram h;
      for (std::uint64_t b = 0; b < (1u << n); ++b)
        if (rng() % 3) h.add(b, 1 + rng() % 20);
      ds.histograms.push_back(h);
    }
    const MPS mps = detail::near_product_mps(n, 2, 0.5, 700 + inst);
    MpsGradient grad;
    hellinger_loss_and_gradient(ds, mps, grad);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t k = 0; k < mps.sites.size(); ++k)
      for (int s = 0; s < 2; ++s)
        for (Eigen::Index i = 0; i < mps.sites[k][s].size(); ++i)
          for (int part = 0; part < 2; ++part) {
            const double h = 1e-6;
            const std::complex<double> dlt = part ? std::complex<double>(0, h) : std::complex<double>(h, 0);
            MPS a = mps, b = mps;
            a.sites[k][s](i) += dlt;
            b.sites[k][s](i) -= dlt;
            const double fd = (hellinger_loss(ds, a) - hellinger_loss(ds, b)) / (2 * h);
            const double an = part ? grad[k][s](i).imag() : grad[k][s](i).real();
            diff2 += (fd - an) * (fd - an);
            norm2 += an * an;
          }
    worst = std::max(worst, std::sqrt(diff2 / norm2));
  }
  return {worst <= 1e-6, fmt("10 instances (n=4, chi=2, M=5), max relative error %.2e", worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"oracle equivalence", 10, oracle_equivalence},
      {"route equivalence", 30, route_equivalence},
      {"conservation", 120, conservation},
      {"MPS representability", 600, mps_representability},
      {"shadow vs direct", 1800, shadow_vs_direct},
      {"smoothing non-inferiority", 300, smoothing_non_inferiority},
      {"transform correctness", 120, transform_correctness},
      {"sector filtering", 60, sector_filtering},
      {"gradient check", 60, gradient_check},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %d. %s: %s (%.1f s of %.0f s budget%s)\n", pass ? "PASS" : "FAIL", index, c.name,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
