#ifndef SWIPT_MODEL_HPP
#define SWIPT_MODEL_HPP

#include "swipt/matkernel.hpp"

#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace swipt {

class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A full problem instance in physical units (Watts, linear amplitude gains).
struct Scenario {
  Eigen::Index n_tx = 0;
  std::vector<CVector> id_channels;
  std::vector<CVector> eh_channels;
  double noise_power = 1e-8;
  double sum_power = 5.0;
  std::vector<double> harvest_targets;
  std::vector<double> weights;
  double harvest_efficiency = 1.0;

  std::size_t num_id() const { return id_channels.size(); }
  std::size_t num_eh() const { return eh_channels.size(); }
};

inline void validate(const Scenario& s) {
  auto fail = [](const std::string& what) { throw ContractError("invalid scenario: " + what); };
  if (s.n_tx < 1) fail("n_tx must be >= 1");
  if (s.id_channels.empty()) fail("need at least one ID receiver");
  if (s.eh_channels.empty()) fail("need at least one EH receiver");
  for (const auto& h : s.id_channels) {
    if (h.size() != s.n_tx) fail("ID channel dimension mismatch");
    if (!h.allFinite()) fail("non-finite ID channel entry");
  }
  for (const auto& g : s.eh_channels) {
    if (g.size() != s.n_tx) fail("EH channel dimension mismatch");
    if (!g.allFinite()) fail("non-finite EH channel entry");
  }
  if (!(s.sum_power > 0)) fail("sum_power must be positive");
  if (!(s.noise_power > 0)) fail("noise_power must be positive");
  if (s.harvest_targets.size() != s.num_eh()) fail("one harvest target per EH receiver required");
  for (double e : s.harvest_targets) {
    if (!(e > 0) || !std::isfinite(e)) fail("harvest targets must be positive");
  }
  if (s.weights.size() != s.num_id()) fail("one weight per ID receiver required");
  for (double a : s.weights) {
    if (!(a >= 0) || !std::isfinite(a)) fail("weights must be nonnegative");
  }
  if (std::all_of(s.weights.begin(), s.weights.end(), [](double a) { return a == 0.0; })) {
    fail("at least one weight must be positive");
  }
  if (!(s.harvest_efficiency > 0 && s.harvest_efficiency <= 1)) fail("harvest_efficiency must lie in (0, 1]");
}

/// Transmit covariances and the rates they achieve.
struct CovarianceSolution {
  std::vector<CMatrix> info_covariances;
  CMatrix energy_covariance;
  std::vector<std::size_t> encoding_order;  // encoding_order[0] is encoded first
  std::vector<double> rates;
  double wsr = 0.0;
};

inline CMatrix sum_of(const std::vector<CMatrix>& ms, Eigen::Index n) {
  CMatrix acc = CMatrix::Zero(n, n);
  for (const auto& m : ms) acc += m;
  return acc;
}

inline bool is_permutation_of(const std::vector<std::size_t>& order, std::size_t k) {
  if (order.size() != k) return false;
  std::vector<bool> seen(k, false);
  for (auto i : order) {
    if (i >= k || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

/// DPC rates for a given encoding order. User order[i] sees interference from order[i+1..].
inline std::vector<double> dpc_rates(const Scenario& s, const std::vector<CMatrix>& covariances,
                                     const std::vector<std::size_t>& order) {
  const std::size_t k = s.num_id();
  if (covariances.size() != k) throw ContractError("dpc_rates: one covariance per ID receiver required");
  if (!is_permutation_of(order, k)) throw ContractError("dpc_rates: order is not a permutation");
  for (const auto& c : covariances) {
    if (c.rows() != s.n_tx || c.cols() != s.n_tx) throw ContractError("dpc_rates: covariance dimension mismatch");
  }
  std::vector<double> rates(k, 0.0);
  CMatrix tail = CMatrix::Zero(s.n_tx, s.n_tx);  // sum of covariances encoded after position i
  for (std::size_t pos = k; pos-- > 0;) {
    const std::size_t u = order[pos];
    const CVector& h = s.id_channels[u];
    const double below = s.noise_power + quad_form(tail, h);
    tail += covariances[u];
    const double above = s.noise_power + quad_form(tail, h);
    rates[u] = std::max(0.0, std::log2(above / below));
  }
  return rates;
}

inline double weighted_sum(const std::vector<double>& weights, const std::vector<double>& rates) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) acc += weights[i] * rates[i];
  return acc;
}

/// Q_j = zeta * Tr[(sum_i S_i + S_E) g_j g_j^H].
inline std::vector<double> harvested_powers(const Scenario& s, const std::vector<CMatrix>& covariances,
                                            const CMatrix& energy) {
  if (energy.rows() != s.n_tx || energy.cols() != s.n_tx) throw ContractError("harvested_powers: dimension mismatch");
  CMatrix total = energy;
  for (const auto& c : covariances) {
    if (c.rows() != s.n_tx || c.cols() != s.n_tx) throw ContractError("harvested_powers: dimension mismatch");
    total += c;
  }
  std::vector<double> q;
  q.reserve(s.num_eh());
  for (const auto& g : s.eh_channels) q.push_back(s.harvest_efficiency * std::max(0.0, quad_form(total, g)));
  return q;
}

inline double channel_correlation(const CVector& h, const CVector& g) {
  const double nh = h.norm();
  const double ng = g.norm();
  if (!(nh > 0) || !(ng > 0)) throw ContractError("channel_correlation: zero-norm channel");
  if (h.size() != g.size()) throw ContractError("channel_correlation: dimension mismatch");
  return std::min(1.0, std::abs(h.dot(g)) / (nh * ng));
}

inline RMatrix correlation_matrix(const Scenario& s) {
  RMatrix rho(s.num_id(), s.num_eh());
  for (std::size_t i = 0; i < s.num_id(); ++i)
    for (std::size_t j = 0; j < s.num_eh(); ++j) rho(i, j) = channel_correlation(s.id_channels[i], s.eh_channels[j]);
  return rho;
}

// ---------------------------------------------------------------------------
// Channel generation

enum class Fading { Rayleigh, Rician };

struct GeneratorConfig {
  std::uint64_t seed = 1;
  double pathloss_id_db = 70.0;
  double pathloss_eh_db = 30.0;
  double rician_k_db = 5.0;  // +inf gives a pure line-of-sight channel
  Fading id_fading = Fading::Rayleigh;
  Fading eh_fading = Fading::Rician;
};

struct ScenarioShape {
  Eigen::Index n_tx = 5;
  std::size_t num_id = 2;
  std::size_t num_eh = 3;
};

/// Everything in a Scenario except the channels. A single target or weight is broadcast.
struct PowerSettings {
  double sum_power = 5.0;
  double noise_power = 1e-8;  // -50 dBm
  std::vector<double> harvest_targets{1e-4};
  std::vector<double> weights{1.0};
  double harvest_efficiency = 1.0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v.front());
  throw ContractError(std::string("expected 1 or ") + std::to_string(n) + " entries for " + what);
}

inline Scenario assemble(Eigen::Index n_tx, std::vector<CVector> id, std::vector<CVector> eh, const PowerSettings& p) {
  Scenario s;
  s.n_tx = n_tx;
  s.weights = broadcast(p.weights, id.size(), "weights");
  s.harvest_targets = broadcast(p.harvest_targets, eh.size(), "harvest targets");
  s.id_channels = std::move(id);
  s.eh_channels = std::move(eh);
  s.sum_power = p.sum_power;
  s.noise_power = p.noise_power;
  s.harvest_efficiency = p.harvest_efficiency;
  validate(s);
  return s;
}

namespace detail {

inline CVector complex_gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = nd(rng);
    const double im = nd(rng);
    v(k) = cplx(re, im);
  }
  return v;
}

/// Half-wavelength uniform linear array response.
inline CVector steering_vector(double angle, Eigen::Index n) {
  CVector a(n);
  const double pi = std::acos(-1.0);
  for (Eigen::Index k = 0; k < n; ++k) a(k) = std::polar(1.0, pi * static_cast<double>(k) * std::sin(angle));
  return a;
}

inline CVector draw_channel(std::mt19937_64& rng, Eigen::Index n, Fading fading, double pathloss_db, double k_db) {
  const double amplitude = std::pow(10.0, -pathloss_db / 20.0);
  if (fading == Fading::Rayleigh) return amplitude * complex_gaussian(rng, n);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  const double angle = std::acos(-1.0) * ud(rng);
  const CVector los = steering_vector(angle, n);
  const CVector nlos = complex_gaussian(rng, n);
  if (std::isinf(k_db) && k_db > 0) return amplitude * los;
  const double k = db_to_linear(k_db);
  return amplitude * (std::sqrt(k / (k + 1.0)) * los + std::sqrt(1.0 / (k + 1.0)) * nlos);
}

}  // namespace detail

/// Seeded Rayleigh ID channels and Rician EH channels with the configured path losses.
inline Scenario generate_scenario(const GeneratorConfig& cfg, const ScenarioShape& shape, const PowerSettings& powers) {
  if (shape.n_tx < 1 || shape.num_id < 1 || shape.num_eh < 1) throw ContractError("generate_scenario: invalid counts");
  if (cfg.pathloss_id_db < 0 || cfg.pathloss_eh_db < 0) throw ContractError("generate_scenario: negative path loss");
  std::mt19937_64 rng(cfg.seed);
  std::vector<CVector> id, eh;
  for (std::size_t i = 0; i < shape.num_id; ++i)
    id.push_back(detail::draw_channel(rng, shape.n_tx, cfg.id_fading, cfg.pathloss_id_db, cfg.rician_k_db));
  for (std::size_t j = 0; j < shape.num_eh; ++j)
    eh.push_back(detail::draw_channel(rng, shape.n_tx, cfg.eh_fading, cfg.pathloss_eh_db, cfg.rician_k_db));
  return assemble(shape.n_tx, std::move(id), std::move(eh), powers);
}

// ---------------------------------------------------------------------------
// Correlation-targeted construction

namespace detail {

/// Correlation residuals and Jacobian for unit-direction vectors packed as
/// [Re v_0, Im v_0, Re v_1, ...] with vectors 0..ki-1 for ID and ki.. for EH.
struct CorrelationFit {
  Eigen::Index n;
  std::size_t ki, ke;
  RMatrix target_sq;

  std::vector<CVector> unpack(const RVector& x) const {
    std::vector<CVector> out(ki + ke, CVector(n));
    for (std::size_t v = 0; v < ki + ke; ++v)
      for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index base = static_cast<Eigen::Index>(v) * 2 * n;
        out[v](k) = cplx(x(base + k), x(base + n + k));
      }
    return out;
  }

  // zero-target pairs use Re/Im of h^H g directly: a squared residual would have a singular
  // Jacobian at the solution and converge slowly
  Eigen::Index residual_count() const {
    Eigen::Index rows = static_cast<Eigen::Index>(ki + ke);
    for (std::size_t i = 0; i < ki; ++i)
      for (std::size_t j = 0; j < ke; ++j) rows += target_sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0 ? 2 : 1;
    return rows;
  }

  void evaluate(const RVector& x, RVector& r, RMatrix& jac) const {
    const auto vs = unpack(x);
    r.setZero(residual_count());
    jac.setZero(residual_count(), x.size());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < ki; ++i) {
      for (std::size_t j = 0; j < ke; ++j) {
        const CVector& h = vs[i];
        const CVector& g = vs[ki + j];
        const cplx c = h.dot(g);  // h^H g
        const Eigen::Index hb = static_cast<Eigen::Index>(i) * 2 * n;
        const Eigen::Index gb = static_cast<Eigen::Index>(ki + j) * 2 * n;
        if (target_sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0) {
          r(row) = c.real();
          r(row + 1) = c.imag();
          for (Eigen::Index k = 0; k < n; ++k) {
            const cplx dhr = g(k), dhi = cplx(0, -1) * g(k);
            const cplx dgr = std::conj(h(k)), dgi = cplx(0, 1) * std::conj(h(k));
            jac(row, hb + k) = dhr.real(), jac(row + 1, hb + k) = dhr.imag();
            jac(row, hb + n + k) = dhi.real(), jac(row + 1, hb + n + k) = dhi.imag();
            jac(row, gb + k) = dgr.real(), jac(row + 1, gb + k) = dgr.imag();
            jac(row, gb + n + k) = dgi.real(), jac(row + 1, gb + n + k) = dgi.imag();
          }
          row += 2;
          continue;
        }
        const double a = h.squaredNorm();
        const double b = g.squaredNorm();
        const double c2 = std::norm(c);
        r(row) = c2 / (a * b) - target_sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        for (Eigen::Index k = 0; k < n; ++k) {
          // d|c|^2 along Re h_k, Im h_k, Re g_k, Im g_k
          const double dch_re = 2.0 * (std::conj(c) * g(k)).real();
          const double dch_im = 2.0 * (std::conj(c) * cplx(0, -1) * g(k)).real();
          const double dcg_re = 2.0 * (std::conj(c) * std::conj(h(k))).real();
          const double dcg_im = 2.0 * (std::conj(c) * cplx(0, 1) * std::conj(h(k))).real();
          jac(row, hb + k) = dch_re / (a * b) - c2 * 2.0 * h(k).real() / (a * a * b);
          jac(row, hb + n + k) = dch_im / (a * b) - c2 * 2.0 * h(k).imag() / (a * a * b);
          jac(row, gb + k) = dcg_re / (a * b) - c2 * 2.0 * g(k).real() / (a * b * b);
          jac(row, gb + n + k) = dcg_im / (a * b) - c2 * 2.0 * g(k).imag() / (a * b * b);
        }
        ++row;
      }
    }
    // keep every vector near unit norm so the fit stays well scaled
    for (std::size_t v = 0; v < ki + ke; ++v, ++row) {
      const Eigen::Index base = static_cast<Eigen::Index>(v) * 2 * n;
      r(row) = 0.1 * (vs[v].squaredNorm() - 1.0);
      for (Eigen::Index k = 0; k < 2 * n; ++k) jac(row, base + k) = 0.2 * x(base + k);
    }
  }
};

}  // namespace detail

struct CorrelationTarget {
  RMatrix rho;                     // K_I x K_E, entries in [0, 1]
  std::vector<double> id_norms;    // ||h_i||, one entry is broadcast
  std::vector<double> eh_norms;    // ||g_j||
  Eigen::Index n_tx = 5;
  std::uint64_t seed = 1;
};

/// Channels whose pairwise ID/EH correlations match a target matrix.
///
/// Directions are fitted jointly by damped minimum-norm Gauss-Newton from a seeded random start,
/// zero-target pairs are then made exactly orthogonal, and the vectors are rescaled to the
/// requested norms. Several restarts are attempted before giving up.
inline Scenario build_correlated_scenario(const CorrelationTarget& target, const PowerSettings& powers) {
  const std::size_t ki = static_cast<std::size_t>(target.rho.rows());
  const std::size_t ke = static_cast<std::size_t>(target.rho.cols());
  const Eigen::Index n = target.n_tx;
  if (ki == 0 || ke == 0 || n < 1) throw ContractError("build_correlated_scenario: empty target");
  if ((target.rho.array() < 0).any() || (target.rho.array() > 1).any() || !target.rho.allFinite())
    throw ContractError("build_correlated_scenario: correlations must lie in [0, 1]");
  const auto id_norms = broadcast(target.id_norms, ki, "id_norms");
  const auto eh_norms = broadcast(target.eh_norms, ke, "eh_norms");

  detail::CorrelationFit fit{n, ki, ke, target.rho.array().square().matrix()};
  std::mt19937_64 rng(target.seed);
  constexpr int kRestarts = 25;
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    RVector x(static_cast<Eigen::Index>(2 * n * (ki + ke)));
    {
      std::normal_distribution<double> nd(0.0, 1.0);
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = nd(rng);
    }
    RVector r;
    RMatrix jac;
    double damping = 1e-3;
    fit.evaluate(x, r, jac);
    double cost = r.squaredNorm();
    for (int it = 0; it < 500 && cost > 1e-30; ++it) {
      const RMatrix jjt = jac * jac.transpose();
      const RMatrix sys = jjt + damping * RMatrix::Identity(jjt.rows(), jjt.cols());
      const RVector step = -jac.transpose() * sys.ldlt().solve(r);
      RVector xr;
      RMatrix jr;
      const RVector trial = x + step;
      fit.evaluate(trial, xr, jr);
      const double trial_cost = xr.squaredNorm();
      if (trial_cost < cost) {
        x = trial;
        r = xr;
        jac = jr;
        cost = trial_cost;
        damping = std::max(damping * 0.2, 1e-15);
      } else {
        damping *= 10.0;
        if (damping > 1e8) break;
      }
    }
    auto vs = fit.unpack(x);
    for (auto& v : vs) v.normalize();
    // exact orthogonality where the target is zero
    for (std::size_t i = 0; i < ki; ++i) {
      CMatrix zero_dirs(n, 0);
      for (std::size_t j = 0; j < ke; ++j) {
        if (target.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0.0) {
          zero_dirs.conservativeResize(n, zero_dirs.cols() + 1);
          zero_dirs.col(zero_dirs.cols() - 1) = vs[ki + j];
        }
      }
      if (zero_dirs.cols() > 0) {
        const CMatrix q = orthonormal_columns(zero_dirs);
        vs[i] -= q * (q.adjoint() * vs[i]);
        if (vs[i].norm() < 1e-6) continue;
        vs[i].normalize();
      }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < ki; ++i)
      for (std::size_t j = 0; j < ke; ++j) {
        const double got = vs[i].norm() > 0 ? channel_correlation(vs[i], vs[ki + j]) : 1.0;
        worst = std::max(worst, std::abs(got - target.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
    if (worst <= 1e-9) {
      std::vector<CVector> id, eh;
      for (std::size_t i = 0; i < ki; ++i) id.push_back(id_norms[i] * vs[i]);
      for (std::size_t j = 0; j < ke; ++j) eh.push_back(eh_norms[j] * vs[ki + j]);
      return assemble(n, std::move(id), std::move(eh), powers);
    }
  }
  throw ConstructionError("build_correlated_scenario: could not realise the target correlations with n_tx = " +
                          std::to_string(n));
}

// ---------------------------------------------------------------------------
// Verification

struct VerificationReport {
  double max_psd_violation = 0.0;      // max(0, -min eigenvalue) over all covariances
  double power_slack = 0.0;            // P_sum - Tr(sum S_i + S_E)
  std::vector<double> harvest_slack;   // Q_j - E_j
  double max_rate_mismatch = 0.0;      // |recomputed - stored|
  double wsr_mismatch = 0.0;
  std::vector<std::string> violations;
  std::optional<double> duality_gap;

  bool ok() const { return violations.empty(); }
};

/// Checks sum-power, harvest and PSD constraints, and that stored rates match the covariances.
/// Tolerances are relative: PSD and power to P_sum, harvest to E_j, rates to 1 + |r|.
inline VerificationReport verify_solution(const Scenario& s, const CovarianceSolution& sol, double tol = 1e-6) {
  VerificationReport rep;
  auto note = [&](const std::string& msg) { rep.violations.push_back(msg); };
  const std::size_t k = s.num_id();
  if (sol.info_covariances.size() != k || sol.energy_covariance.rows() != s.n_tx) {
    note("shape: covariance count or dimension mismatch");
    return rep;
  }
  double worst_eig = 0.0;
  for (const auto& c : sol.info_covariances) worst_eig = std::min(worst_eig, min_eigenvalue(c));
  worst_eig = std::min(worst_eig, min_eigenvalue(sol.energy_covariance));
  rep.max_psd_violation = -worst_eig;
  if (rep.max_psd_violation > tol * s.sum_power) note("psd: covariance has a negative eigenvalue");

  const double used = trace_real(sum_of(sol.info_covariances, s.n_tx) + sol.energy_covariance);
  rep.power_slack = s.sum_power - used;
  if (rep.power_slack < -tol * s.sum_power) note("power: sum-power budget exceeded");

  const auto q = harvested_powers(s, sol.info_covariances, sol.energy_covariance);
  for (std::size_t j = 0; j < s.num_eh(); ++j) {
    rep.harvest_slack.push_back(q[j] - s.harvest_targets[j]);
    if (q[j] < s.harvest_targets[j] * (1.0 - tol)) note("harvest: EH receiver " + std::to_string(j) + " below target");
  }

  if (!is_permutation_of(sol.encoding_order, k)) {
    note("order: encoding order is not a permutation");
    return rep;
  }
  const auto rates = dpc_rates(s, sol.info_covariances, sol.encoding_order);
  if (sol.rates.size() != k) {
    note("rates: wrong number of stored rates");
    return rep;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double diff = std::abs(rates[i] - sol.rates[i]);
    rep.max_rate_mismatch = std::max(rep.max_rate_mismatch, diff);
    if (diff > tol * (1.0 + std::abs(rates[i]))) note("rates: stored rate of ID receiver " + std::to_string(i) + " does not match");
  }
  rep.wsr_mismatch = std::abs(weighted_sum(s.weights, sol.rates) - sol.wsr);
  if (rep.wsr_mismatch > tol * (1.0 + std::abs(sol.wsr))) note("wsr: stored weighted sum-rate does not match rates");
  return rep;
}

// ---------------------------------------------------------------------------
// Unit-noise, unit-power normal form used by the solvers.

/// Channels scaled by sqrt(P_sum)/sigma, EH directions normalised and targets expressed per unit
/// sum-power and unit channel gain with the harvesting efficiency folded in. Covariances in this
/// form are S / P_sum.
struct NormalForm {
  Eigen::Index n = 0;
  std::vector<CVector> id;          // h_i * sqrt(P_sum) / sigma
  std::vector<CVector> eh_dirs;     // g_j / ||g_j||
  std::vector<double> eh_gain;      // ||g_j||^2
  std::vector<double> targets;      // E_j / (zeta ||g_j||^2 P_sum)
  std::vector<double> weights;
  double sum_power = 1.0;           // the physical P_sum the form was built from

  CMatrix eh_gram(std::size_t j) const { return outer(eh_dirs[j]); }
};

inline NormalForm normal_form(const Scenario& s) {
  validate(s);
  NormalForm f;
  f.n = s.n_tx;
  const double scale = std::sqrt(s.sum_power / s.noise_power);
  for (const auto& h : s.id_channels) f.id.push_back(scale * h);
  for (std::size_t j = 0; j < s.num_eh(); ++j) {
    const double gain = s.eh_channels[j].squaredNorm();
    if (!(gain > 0)) throw ContractError("normal_form: zero EH channel");
    f.eh_dirs.push_back(s.eh_channels[j] / std::sqrt(gain));
    f.eh_gain.push_back(gain);
    f.targets.push_back(s.harvest_targets[j] / (s.harvest_efficiency * gain * s.sum_power));
  }
  f.weights = s.weights;
  f.sum_power = s.sum_power;
  return f;
}

/// Stable descending sort of the weights; ties keep index order.
inline std::vector<std::size_t> descending_weight_order(const std::vector<double>& weights) {
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return idx;
}

inline CovarianceSolution make_solution(const Scenario& s, std::vector<CMatrix> info, CMatrix energy,
                                        std::vector<std::size_t> order) {
  CovarianceSolution sol;
  sol.rates = dpc_rates(s, info, order);
  sol.wsr = weighted_sum(s.weights, sol.rates);
  sol.info_covariances = std::move(info);
  sol.energy_covariance = std::move(energy);
  sol.encoding_order = std::move(order);
  return sol;
}

}  // namespace swipt

#endif  // SWIPT_MODEL_HPP
