#pragma once

// Density reconstruction from finite measurement data.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/mps.hpp"
#include "qlbm/sampling.hpp"
#include "qlbm/statevector.hpp"

namespace qlbm {

namespace detail {

inline void normalize_nonnegative(std::vector<double>& v) {
  double s = 0.0;
  for (double& x : v) {
    x = std::abs(x);
    s += x * x;
  }
  if (!(s > 0.0)) throw DomainError("reconstruction produced a zero field");
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
}

inline void check_histogram(const Histogram& h, const GridSpec& g) {
  if (h.total == 0) throw DomainError("histogram is empty");
  for (const auto& [b, c] : h.counts)
    if (b >= g.sites()) throw ShapeError("histogram key " + std::to_string(b) + " outside the grid");
}

}  // namespace detail

inline ScalarField histogram_to_amplitudes(const Histogram& h, const GridSpec& g) {
  detail::check_histogram(h, g);
  ScalarField f(g);
  for (const auto& [b, c] : h.counts) f[b] = std::sqrt(static_cast<double>(c) / static_cast<double>(h.total));
  detail::normalize_nonnegative(f.values);
  return f;
}

/// Periodic Gaussian smoothing of a probability field, with minimum-image distance per axis.
/// The d-dimensional kernel exp(-|r|^2 / 2h^2) factorizes, so it is applied axis by axis.
inline std::vector<double> kde_probabilities(std::span<const double> prob, const GridSpec& g, double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("KDE bandwidth must be positive");
  if (prob.size() != g.sites()) throw ShapeError("probability field size does not match grid");
  const std::size_t L = g.side();
  std::vector<double> kernel(L);
  for (std::size_t d = 0; d < L; ++d) {
    const double m = static_cast<double>(std::min(d, L - d));
    kernel[d] = std::exp(-m * m / (2.0 * bandwidth * bandwidth));
  }
  std::vector<double> cur(prob.begin(), prob.end()), next(cur.size());
  std::size_t stride = 1;
  for (int a = 0; a < g.dim; ++a, stride *= L) {
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const std::size_t pos = (i / stride) % L;
      const std::size_t base = i - pos * stride;
      double acc = 0.0;
      for (std::size_t q = 0; q < L; ++q) {
        const std::size_t d = pos >= q ? pos - q : q - pos;
        acc += kernel[d] * cur[base + q * stride];
      }
      next[i] = acc;
    }
    std::swap(cur, next);
  }
  return cur;
}

inline ScalarField kde_smooth(const Histogram& h, double bandwidth, const GridSpec& g) {
  if (!(bandwidth > 0.0)) throw DomainError("KDE bandwidth must be positive");
  detail::check_histogram(h, g);
  std::vector<double> p(g.sites(), 0.0);
  for (const auto& [b, c] : h.counts) p[b] = static_cast<double>(c) / static_cast<double>(h.total);
  auto s = kde_probabilities(p, g, bandwidth);
  for (double& x : s) x = std::sqrt(std::max(x, 0.0));
  ScalarField f(g, std::move(s));
  detail::normalize_nonnegative(f.values);
  return f;
}

/// KDE applied to the probabilities |phi|^2 of an amplitude field.
inline ScalarField kde_smooth(const ScalarField& phi, double bandwidth) {
  std::vector<double> p(phi.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = phi[i] * phi[i];
  auto s = kde_probabilities(p, phi.grid, bandwidth);
  for (double& x : s) x = std::sqrt(std::max(x, 0.0));
  ScalarField f(phi.grid, std::move(s));
  detail::normalize_nonnegative(f.values);
  return f;
}

inline ScalarField mps_to_density(const MPS& m, const GridSpec& g) {
  const auto amps = contract(m);
  if (amps.size() != g.sites()) throw ShapeError("MPS size does not match grid");
  ScalarField f(g);
  for (std::size_t i = 0; i < amps.size(); ++i) f[i] = std::abs(amps[i]);
  detail::normalize_nonnegative(f.values);
  return f;
}

inline ScalarField mps_smooth(const ScalarField& phi, int chi) {
  if (chi < 1) throw DomainError("bond dimension must be at least 1");
  return mps_to_density(compress(std::span<const double>(phi.values), chi), phi.grid);
}

// ---------------------------------------------------------------------------
// Randomized measurement settings

/// Haar-random SU(2): a uniformly random unit quaternion (a, b, c, d) gives
/// [[a + ib, -(c - id)], [c + id, a - ib]].
inline Mat2 haar_su2(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  double q[4];
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : q) {
      x = n01(rng);
      s += x * x;
    }
  } while (s < 1e-300);
  const double inv = 1.0 / std::sqrt(s);
  const cplx alpha(q[0] * inv, q[1] * inv), beta(q[2] * inv, q[3] * inv);
  return Mat2{alpha, -std::conj(beta), beta, std::conj(alpha)};
}

inline std::vector<MeasurementSetting> generate_settings(int M, int n_grid, std::uint64_t seed) {
  if (M < 1) throw DomainError("at least one measurement setting is required");
  if (n_grid < 1) throw DomainError("grid register must have at least one qubit");
  std::mt19937_64 rng(seed);
  std::vector<MeasurementSetting> out(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    out[m].seed = seed;
    out[m].rotations.resize(static_cast<std::size_t>(n_grid));
    for (auto& u : out[m].rotations) u = haar_su2(rng);
  }
  return out;
}

struct ShadowDataset {
  int grid_qubits = 0;
  std::vector<MeasurementSetting> settings;
  std::vector<Histogram> histograms;  // accepted shots per setting, keyed by grid bitstring
  std::uint64_t raw_shots = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};

/// Split `total_shots` across M settings (floor(total/M) each, remainder to the first ones) and
/// measure the pre-selection state under each setting.
inline ShadowDataset collect_shadow_dataset(const StateVector& state, std::vector<MeasurementSetting> settings,
                                            std::uint64_t total_shots, double noise_p, std::uint64_t seed) {
  if (settings.empty()) throw DomainError("at least one measurement setting is required");
  const std::uint64_t M = settings.size();
  if (total_shots < M) throw DomainError("fewer shots than measurement settings");
  ShadowDataset ds;
  ds.grid_qubits = state.layout.grid_qubits;
  ds.settings = std::move(settings);
  ds.histograms.resize(M);
  const std::uint64_t base = total_shots / M, extra = total_shots % M;
  for (std::uint64_t m = 0; m < M; ++m) {
    const std::uint64_t k = base + (m < extra ? 1 : 0);
    auto res = measure_histogram(state, &ds.settings[m], k, noise_p, splitmix64(seed + 0x5eed * (m + 1)));
    ds.histograms[m] = std::move(res.histogram);
    ds.raw_shots += k;
    ds.accepted += res.accepted;
    ds.rejected += res.rejected;
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Hellinger loss
//
// For setting m with rotations U_k, the model probability is p_m(b) = |a_m(b)|^2 / Z with
// a_m(b) = prod_k B_k[b_k], B_k[t] = sum_s U_k[t][s] A_k[s] and Z = <psi|psi>. Summing
// (sqrt(phat) - sqrt(p))^2 over all b, with unobserved strings contributing their p, gives
// L_m = 2 (1 - sum_{b observed} sqrt(phat(b) p(b))).

using MpsGradient = std::vector<std::array<MatC, 2>>;

namespace detail {

inline void check_dataset(const ShadowDataset& ds, const MPS& m) {
  if (ds.settings.size() != ds.histograms.size()) throw ShapeError("dataset settings and histograms differ in count");
  if (ds.settings.empty()) throw DomainError("shadow dataset is empty");
  if (ds.grid_qubits != m.qubits()) throw ShapeError("dataset and MPS differ in qubit count");
  for (const auto& s : ds.settings)
    if (static_cast<int>(s.rotations.size()) != m.qubits()) throw ShapeError("setting rotation count differs from MPS");
}

inline std::vector<std::array<MatC, 2>> rotated_sites(const MPS& m, const MeasurementSetting& s) {
  std::vector<std::array<MatC, 2>> b(m.sites.size());
  for (std::size_t k = 0; k < m.sites.size(); ++k) {
    const Mat2& u = s.rotations[k];
    b[k][0] = u[0] * m.sites[k][0] + u[1] * m.sites[k][1];
    b[k][1] = u[2] * m.sites[k][0] + u[3] * m.sites[k][1];
  }
  return b;
}

/// Environments for Z: left[k] covers sites < k, right[k] covers sites >= k.
struct NormEnvironments {
  std::vector<MatC> left, right;
  double z = 0.0;
};

inline NormEnvironments norm_environments(const MPS& m) {
  const std::size_t n = m.sites.size();
  NormEnvironments e;
  e.left.resize(n + 1);
  e.right.resize(n + 1);
  e.left[0] = MatC::Ones(1, 1);
  for (std::size_t k = 0; k < n; ++k)
    e.left[k + 1] = m.sites[k][0].adjoint() * e.left[k] * m.sites[k][0] +
                    m.sites[k][1].adjoint() * e.left[k] * m.sites[k][1];
  e.right[n] = MatC::Ones(1, 1);
  for (std::size_t k = n; k-- > 0;)
    e.right[k] = m.sites[k][0] * e.right[k + 1] * m.sites[k][0].adjoint() +
                 m.sites[k][1] * e.right[k + 1] * m.sites[k][1].adjoint();
  e.z = e.left[n](0, 0).real();
  return e;
}

inline std::complex<double> amplitude(const std::vector<std::array<MatC, 2>>& b, std::uint64_t bits) {
  Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
  for (std::size_t k = 0; k < b.size(); ++k) v = v * b[k][(bits >> k) & 1u];
  return v(0);
}

}  // namespace detail

inline double hellinger_loss(const ShadowDataset& ds, const MPS& m) {
  detail::check_dataset(ds, m);
  const double z = norm_squared(m);
  if (!(z > 0.0)) throw DomainError("MPS has zero norm");
  double loss = 0.0;
  for (std::size_t s = 0; s < ds.settings.size(); ++s) {
    const Histogram& h = ds.histograms[s];
    if (h.total == 0) continue;
    const auto b = detail::rotated_sites(m, ds.settings[s]);
    double overlap = 0.0;
    for (const auto& [bits, count] : h.counts) {
      const double phat = static_cast<double>(count) / static_cast<double>(h.total);
      overlap += std::sqrt(phat) * std::abs(detail::amplitude(b, bits)) / std::sqrt(z);
    }
    loss += 2.0 * (1.0 - overlap);
  }
  return loss;
}

/// Loss together with the gradient with respect to the real and imaginary parts of every
/// site-tensor entry, packed as G = dL/dRe + i dL/dIm (= 2 dL/dA*).
inline double hellinger_loss_and_gradient(const ShadowDataset& ds, const MPS& m, MpsGradient& grad) {
  detail::check_dataset(ds, m);
  const std::size_t n = m.sites.size();
  const auto env = detail::norm_environments(m);
  const double z = env.z;
  if (!(z > 0.0)) throw DomainError("MPS has zero norm");
  const double rz = 1.0 / std::sqrt(z);

  grad.assign(n, {});
  for (std::size_t k = 0; k < n; ++k)
    for (int s = 0; s < 2; ++s) grad[k][s] = MatC::Zero(m.sites[k][s].rows(), m.sites[k][s].cols());

  // Coefficient of dZ/dA* accumulated over all observed strings.
  double zcoef = 0.0;
  double loss = 0.0;
  std::vector<Eigen::RowVectorXcd> lv(n + 1);
  std::vector<Eigen::VectorXcd> rv(n + 1);
  for (std::size_t si = 0; si < ds.settings.size(); ++si) {
    const Histogram& h = ds.histograms[si];
    if (h.total == 0) continue;
    const auto& rot = ds.settings[si].rotations;
    const auto b = detail::rotated_sites(m, ds.settings[si]);
    std::vector<std::array<MatC, 2>> gb(n);
    for (std::size_t k = 0; k < n; ++k)
      for (int t = 0; t < 2; ++t) gb[k][t] = MatC::Zero(b[k][t].rows(), b[k][t].cols());
    double overlap = 0.0;
    for (const auto& [bits, count] : h.counts) {
      const double c = std::sqrt(static_cast<double>(count) / static_cast<double>(h.total));
      lv[0] = Eigen::RowVectorXcd::Ones(1);
      for (std::size_t k = 0; k < n; ++k) lv[k + 1] = lv[k] * b[k][(bits >> k) & 1u];
      rv[n] = Eigen::VectorXcd::Ones(1);
      for (std::size_t k = n; k-- > 0;) rv[k] = b[k][(bits >> k) & 1u] * rv[k + 1];
      const std::complex<double> a = lv[n](0);
      const double mod = std::abs(a);
      overlap += c * mod * rz;
      zcoef += c * mod;
      if (mod == 0.0) continue;  // |a| is not differentiable at 0; take the zero subgradient
      const std::complex<double> w = c * rz * a / (2.0 * mod);
      for (std::size_t k = 0; k < n; ++k)
        gb[k][(bits >> k) & 1u].noalias() += w * (lv[k].adjoint() * rv[k + 1].adjoint());
    }
    loss += 2.0 * (1.0 - overlap);
    // dL/dA*_k[s] from dL/dB*_k[t]: B_k[t] = sum_s U[t][s] A_k[s].
    for (std::size_t k = 0; k < n; ++k) {
      const Mat2& u = rot[k];
      grad[k][0] += -2.0 * (std::conj(u[0]) * gb[k][0] + std::conj(u[2]) * gb[k][1]);
      grad[k][1] += -2.0 * (std::conj(u[1]) * gb[k][0] + std::conj(u[3]) * gb[k][1]);
    }
  }
  // d(|a| Z^{-1/2})/dA* contains -|a|/2 Z^{-3/2} dZ/dA*, dZ/dA*_k[s] = Lenv_k A_k[s] Renv_{k+1}.
  const double zfac = -2.0 * (-0.5 * zcoef * rz / z);
  for (std::size_t k = 0; k < n; ++k)
    for (int s = 0; s < 2; ++s)
      grad[k][s] += zfac * (env.left[k] * m.sites[k][s] * env.right[k + 1]);
  for (auto& site : grad)
    for (auto& g : site) g *= 2.0;
  return loss;
}

// ---------------------------------------------------------------------------
// Shadow fit

struct FitConfig {
  double learning_rate = 0.05;
  double decay = 0.98;
  int epochs = 500;
  int divergence_patience = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_noise = 1e-2;  // perturbation of the random near-product start
  bool real_parameters = false;  // restrict site tensors to real entries
  std::uint64_t seed = 0;
};

class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& msg, MPS best) : NumericalError(msg), best_(std::move(best)) {}
  const MPS& best() const { return best_; }

 private:
  MPS best_;
};

struct FitResult {
  MPS mps;
  double loss = 0.0;
  int epochs = 0;
  std::vector<double> history;
};

namespace detail {

inline void rescale_to_unit_norm(MPS& m) {
  const double z = norm_squared(m);
  if (!(z > 0.0)) throw NumericalError("MPS norm collapsed to zero during fit");
  const double f = std::pow(z, -0.5 / static_cast<double>(m.sites.size()));
  for (auto& s : m.sites)
    for (auto& a : s) a *= f;
}

/// Product state |+>^n embedded at bond dimension chi with a small random perturbation.
inline MPS near_product_mps(int n, int chi, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  MPS m;
  m.chi = chi;
  m.sites.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int dl = k == 0 ? 1 : chi;
    const int dr = k == n - 1 ? 1 : chi;
    for (int s = 0; s < 2; ++s) {
      MatC a = MatC::Zero(dl, dr);
      a(0, 0) = 1.0 / std::sqrt(2.0);
      for (int i = 0; i < dl; ++i)
        for (int j = 0; j < dr; ++j) a(i, j) += noise * cplx(n01(rng), n01(rng));
      m.sites[k][s] = a;
    }
  }
  rescale_to_unit_norm(m);
  return m;
}

/// Zero-pad every internal bond up to chi so the fit can use the full bond dimension.
inline MPS pad_bonds(const MPS& in, int chi) {
  MPS m = in;
  m.chi = chi;
  const std::size_t n = m.sites.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Index dl = k == 0 ? 1 : chi;
    const Eigen::Index dr = k + 1 == n ? 1 : chi;
    for (auto& a : m.sites[k]) {
      if (a.rows() > dl || a.cols() > dr) throw ShapeError("warm start exceeds the fit bond dimension");
      MatC p = MatC::Zero(dl, dr);
      p.topLeftCorner(a.rows(), a.cols()) = a;
      a = std::move(p);
    }
  }
  return m;
}

}  // namespace detail

/// Full-batch Adam on the Hellinger loss. Returns the lowest-loss iterate, normalized.
inline FitResult shadow_fit(const ShadowDataset& ds, int chi, const FitConfig& cfg,
                            const MPS* warm_start = nullptr) {
  if (chi < 1) throw DomainError("bond dimension must be at least 1");
  if (ds.settings.empty()) throw DomainError("shadow dataset is empty");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) throw ConfigError("invalid fit configuration");
  const int n = ds.grid_qubits;

  MPS m;
  if (warm_start) {
    if (warm_start->qubits() != n) throw ShapeError("warm start and dataset differ in qubit count");
    m = detail::pad_bonds(*warm_start, chi);
    // Break the exact zeros of the padding so the extra bond directions receive gradient.
    std::mt19937_64 rng(cfg.seed ^ 0x77a2u);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (auto& site : m.sites)
      for (auto& a : site)
        for (Eigen::Index i = 0; i < a.size(); ++i)
          if (a(i) == cplx{}) a(i) = 1e-3 * cfg.init_noise * cplx(n01(rng), cfg.real_parameters ? 0.0 : n01(rng));
    detail::rescale_to_unit_norm(m);
  } else {
    m = detail::near_product_mps(n, chi, cfg.init_noise, cfg.seed);
  }
  if (cfg.real_parameters)
    for (auto& site : m.sites)
      for (auto& a : site) a = a.real().cast<cplx>();

  MpsGradient grad, mom, vel;
  mom.resize(m.sites.size());
  vel.resize(m.sites.size());
  for (std::size_t k = 0; k < m.sites.size(); ++k)
    for (int s = 0; s < 2; ++s) {
      mom[k][s] = MatC::Zero(m.sites[k][s].rows(), m.sites[k][s].cols());
      vel[k][s] = MatC::Zero(m.sites[k][s].rows(), m.sites[k][s].cols());
    }

  FitResult res;
  res.mps = m;
  res.loss = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  int rising = 0;
  double lr = cfg.learning_rate;
  double b1t = 1.0, b2t = 1.0;
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const double loss = hellinger_loss_and_gradient(ds, m, grad);
    if (cfg.real_parameters)
      for (auto& site : grad)
        for (auto& g : site) g = g.real().cast<cplx>();
    if (!std::isfinite(loss)) throw FitFailure("Hellinger loss became non-finite", res.mps);
    res.history.push_back(loss);
    if (loss < res.loss) {
      res.loss = loss;
      res.mps = m;
    }
    rising = loss > prev ? rising + 1 : 0;
    prev = loss;
    if (rising >= cfg.divergence_patience)
      throw FitFailure("Hellinger loss increased for " + std::to_string(rising) + " consecutive epochs", res.mps);
    res.epochs = epoch;
    if (epoch == cfg.epochs) break;

    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    for (std::size_t k = 0; k < m.sites.size(); ++k)
      for (int s = 0; s < 2; ++s) {
        MatC& g = grad[k][s];
        MatC& mo = mom[k][s];
        MatC& ve = vel[k][s];
        for (Eigen::Index i = 0; i < g.size(); ++i) {
          const double gr = g(i).real(), gi = g(i).imag();
          mo(i) = cfg.beta1 * mo(i) + (1.0 - cfg.beta1) * g(i);
          ve(i) = cplx(cfg.beta2 * ve(i).real() + (1.0 - cfg.beta2) * gr * gr,
                       cfg.beta2 * ve(i).imag() + (1.0 - cfg.beta2) * gi * gi);
          const cplx mh = mo(i) / (1.0 - b1t);
          const double vr = ve(i).real() / (1.0 - b2t), vi = ve(i).imag() / (1.0 - b2t);
          m.sites[k][s](i) -= lr * cplx(mh.real() / (std::sqrt(vr) + cfg.epsilon),
                                        mh.imag() / (std::sqrt(vi) + cfg.epsilon));
        }
      }
    detail::rescale_to_unit_norm(m);
    lr *= cfg.decay;
  }
  detail::rescale_to_unit_norm(res.mps);
  res.mps.normalized = true;
  return res;
}

// ---------------------------------------------------------------------------

enum class ReadoutMethod { None, Raw, Kde, Mps, KdeMps, Shadow, ShadowKde };

inline ReadoutMethod parse_readout_method(std::string_view s) {
  if (s == "none") return ReadoutMethod::None;
  if (s == "raw") return ReadoutMethod::Raw;
  if (s == "kde") return ReadoutMethod::Kde;
  if (s == "mps") return ReadoutMethod::Mps;
  if (s == "kde+mps") return ReadoutMethod::KdeMps;
  if (s == "shadow") return ReadoutMethod::Shadow;
  if (s == "shadow+kde") return ReadoutMethod::ShadowKde;
  throw ConfigError("unknown readout method '" + std::string(s) + "'");
}

inline const char* readout_method_name(ReadoutMethod m) {
  switch (m) {
    case ReadoutMethod::None: return "none";
    case ReadoutMethod::Raw: return "raw";
    case ReadoutMethod::Kde: return "kde";
    case ReadoutMethod::Mps: return "mps";
    case ReadoutMethod::KdeMps: return "kde+mps";
    case ReadoutMethod::Shadow: return "shadow";
    case ReadoutMethod::ShadowKde: return "shadow+kde";
  }
  return "?";
}

inline bool is_shadow_method(ReadoutMethod m) { return m == ReadoutMethod::Shadow || m == ReadoutMethod::ShadowKde; }

struct ReadoutInputs {
  GridSpec grid;
  const Histogram* histogram = nullptr;
  const ShadowDataset* shadow = nullptr;
  double bandwidth = 0.5;
  int chi = 8;
  FitConfig fit;
  const MPS* warm_start = nullptr;
};

inline ScalarField reconstruct(ReadoutMethod method, const ReadoutInputs& in) {
  auto need_hist = [&]() -> const Histogram& {
    if (!in.histogram) throw ConfigError(std::string("readout '") + readout_method_name(method) + "' needs a histogram");
    return *in.histogram;
  };
  switch (method) {
    case ReadoutMethod::None:
      throw ConfigError("readout 'none' does not reconstruct");
    case ReadoutMethod::Raw:
      return histogram_to_amplitudes(need_hist(), in.grid);
    case ReadoutMethod::Kde:
      return kde_smooth(need_hist(), in.bandwidth, in.grid);
    case ReadoutMethod::Mps:
      return mps_smooth(histogram_to_amplitudes(need_hist(), in.grid), in.chi);
    case ReadoutMethod::KdeMps:
      return mps_smooth(kde_smooth(need_hist(), in.bandwidth, in.grid), in.chi);
    case ReadoutMethod::Shadow:
    case ReadoutMethod::ShadowKde: {
      if (!in.shadow) throw ConfigError(std::string("readout '") + readout_method_name(method) + "' needs a shadow dataset");
      ScalarField f = mps_to_density(shadow_fit(*in.shadow, in.chi, in.fit, in.warm_start).mps, in.grid);
      return method == ReadoutMethod::ShadowKde ? kde_smooth(f, in.bandwidth) : f;
    }
  }
  throw InternalError("unhandled readout method");
}

}  // namespace qlbm
