#ifndef SWIPT_ALGORITHMS_HPP
#define SWIPT_ALGORITHMS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "swipt/dualmac.hpp"
#include "swipt/ellipsoid.hpp"
#include "swipt/sdp.hpp"

namespace swipt {

enum class Algorithm { Optimal, Idsied, Ehsied, Baseline };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Optimal: return "optimal";
    case Algorithm::Idsied: return "idsied";
    case Algorithm::Ehsied: return "ehsied";
    case Algorithm::Baseline: return "baseline";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::Optimal, Algorithm::Idsied, Algorithm::Ehsied, Algorithm::Baseline})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

enum class SolutionCase { InfoZero, EnergyZero, BothActive };

inline const char* to_string(SolutionCase c) {
  switch (c) {
    case SolutionCase::InfoZero: return "info-zero";
    case SolutionCase::EnergyZero: return "energy-zero";
    case SolutionCase::BothActive: return "both-active";
  }
  return "?";
}

struct Classification {
  SolutionCase label = SolutionCase::BothActive;
  double orthogonality = 0.0;  // max_i h_i^H S_E h_i / (||h_i||^2 Tr S_E), 0 unless both active
};

inline Classification classify_solution(const Scenario& s, const CovarianceSolution& sol, double tol = 1e-8) {
  Classification c;
  const double pi = trace_real(sum_of(sol.info_covariances, s.n_tx));
  const double pe = trace_real(sol.energy_covariance);
  if (pi <= tol * s.sum_power) {
    c.label = SolutionCase::InfoZero;
  } else if (pe <= tol * s.sum_power) {
    c.label = SolutionCase::EnergyZero;
  } else {
    c.label = SolutionCase::BothActive;
    for (const auto& h : s.id_channels) {
      const double hn = h.squaredNorm();
      if (hn > 0) c.orthogonality = std::max(c.orthogonality, quad_form(sol.energy_covariance, h) / (hn * pe));
    }
  }
  return c;
}

inline DualOptions recovery_dual_options() {
  // Run the ellipsoid down to a tiny width instead of stopping on the dual gap: primal recovery needs the
  // multipliers themselves, whose error is much larger than the error in g.
  DualOptions d;
  d.tol = 0.0;
  d.stall_rel = -1.0;
  d.width_tol = 1e-11;
  d.keep_trace = false;
  d.rank_tol = 1e-12;
  return d;
}

struct SolveOptions {
  DualOptions dual = recovery_dual_options();
  SdpOptions sdp;
  double bisection_rel = 1e-6;    // IDSIED stops when P_max - P_min < bisection_rel * P_sum
  double classify_tol = 1e-8;
  double accept_rel = 1e-7;       // representative solution accepted if within this of every constraint
  double expansion_rel = 2e-9;    // stop searching expansions once within this of every constraint
};

/// How the optimal solver obtained its primal point.
struct Recovery {
  std::string path;  // "representative", "p4", "p4-scaled", "central-path", "representative-approx"
  double split_tol = 0.0;
  Eigen::Index rank_a = 0;
  std::vector<double> representative_harvest;  // Watts, before any expansion
  std::vector<double> representative_rates;
  std::vector<CMatrix> representative_info;    // Watts, U1 B_i U1^H
  double pin_scale = 1.0;                      // blocks pinned at pin_scale * B_i ("p4-scaled" only)
  std::vector<double> pinned_rates;            // rates of the pinned blocks, kept by the expansion
  CMatrix u1, u2;                            // range/null bases of A* used for the expansion
  std::optional<SdpSolution> p4;
};

struct BisectionStep {
  double p_info = 0.0;  // Watts
  bool feasible = false;
};

struct SolveReport {
  CovarianceSolution solution;
  Algorithm algorithm = Algorithm::Optimal;
  std::optional<DualPoint> lambda;
  std::optional<double> g_star;
  std::optional<double> duality_gap;       // g* - wsr
  std::optional<double> p_info;            // IDSIED, Watts
  std::optional<double> energy_power;      // EHSIED Tr(S_E'), Watts
  std::optional<Recovery> recovery;        // optimal only
  std::vector<BisectionStep> bisection;    // IDSIED only
  int iterations = 0;
  double wall_seconds = 0.0;
  Classification classification;
  std::vector<double> harvested;           // Watts
  bool converged = true;
  std::string note;
};

namespace detail {

inline std::vector<CMatrix> scaled(const std::vector<CMatrix>& ms, double c) {
  std::vector<CMatrix> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(c * m);
  return out;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void require_feasible(const Scenario& s, const SdpOptions& opt) {
  auto fr = check_feasibility(s, opt);
  if (!fr.feasible) throw InfeasibleError("scenario is infeasible: harvest targets exceed what the power budget allows", std::move(fr));
}

inline void finish(const Scenario& s, SolveReport& r, double classify_tol) {
  r.classification = classify_solution(s, r.solution, classify_tol);
  r.harvested = harvested_powers(s, r.solution.info_covariances, r.solution.energy_covariance);
}

/// Normal-form harvest of a set of covariances (in units of the normalised targets).
inline std::vector<double> normal_harvest(const NormalForm& f, const CMatrix& total) {
  std::vector<double> q;
  for (const auto& d : f.eh_dirs) q.push_back(quad_form(total, d));
  return q;
}

/// Null basis of A* with any residual ID-channel component removed exactly.
inline CMatrix clean_null_basis(const NormalForm& f, const CMatrix& null_basis) {
  if (null_basis.cols() == 0) return null_basis;
  CMatrix h(f.n, 0);
  for (std::size_t i = 0; i < f.id.size(); ++i) {
    if (!(f.weights[i] > 0)) continue;
    h.conservativeResize(f.n, h.cols() + 1);
    h.col(h.cols() - 1) = f.id[i];
  }
  const CMatrix q = orthonormal_columns(h);
  const CMatrix projected = null_basis - q * (q.adjoint() * null_basis);
  return orthonormal_columns(projected, 1e-6);
}

/// Representative inner solution at normal-form multipliers mu (mu0 = 1), or nullopt outside the domain.
struct InnerAt {
  ReducedBcSolution inner;
  RVector residual;  // q_j - target_j
  double budget = 0.0;
};

inline std::optional<InnerAt> inner_at(const NormalForm& f, const RVector& mu, double rank_tol = kDefaultRankTol) {
  CMatrix a = CMatrix::Identity(f.n, f.n);
  double budget = 1.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    if (mu(j) < 0) return std::nullopt;
    a -= mu(j) * f.eh_gram(static_cast<std::size_t>(j));
    budget -= mu(j) * f.targets[static_cast<std::size_t>(j)];
  }
  if (budget < 0) return std::nullopt;
  try {
    const RangeNullSplit split = range_null_split(hermitian_part(a), rank_tol);
    if (split.rank < f.n) return std::nullopt;
    InnerAt out;
    out.inner = solve_reduced_bc(split, hermitian_part(a), f.id, f.weights, budget, 1e-13);
    out.budget = budget;
    const auto q = normal_harvest(f, sum_of(out.inner.covariances, f.n));
    out.residual.resize(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j)
      out.residual(j) = q[static_cast<std::size_t>(j)] - f.targets[static_cast<std::size_t>(j)];
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Newton refinement of the multipliers when A* is nonsingular: there the dual function is smooth and its
/// gradient is the harvest residual, so the ellipsoid's approximate minimiser can be sharpened until the
/// representative solution meets the active constraints to working precision.
inline std::optional<RVector> polish_multipliers(const NormalForm& f, RVector mu, int max_newton = 12) {
  const Eigen::Index k = mu.size();
  auto cur = inner_at(f, mu);
  if (!cur) return std::nullopt;
  auto merit = [&](const RVector& m, const RVector& r) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      // complementary slackness: r_j = 0 where mu_j > 0, r_j >= 0 where mu_j = 0
      worst = std::max(worst, m(j) > 0 ? std::abs(r(j)) : std::max(0.0, -r(j)));
    }
    return worst;
  };
  double err = merit(mu, cur->residual);
  for (int it = 0; it < max_newton && err > 1e-13; ++it) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < k; ++j)
      if (mu(j) > 0 || cur->residual(j) < 0) act.push_back(j);
    if (act.empty()) break;
    const auto na = static_cast<Eigen::Index>(act.size());
    RMatrix jac(na, na);
    RVector r(na);
    for (Eigen::Index c = 0; c < na; ++c) r(c) = cur->residual(act[static_cast<std::size_t>(c)]);
    for (Eigen::Index c = 0; c < na; ++c) {
      RVector m2 = mu;
      const double h = 1e-7 * std::max(1.0, mu(act[static_cast<std::size_t>(c)]));
      m2(act[static_cast<std::size_t>(c)]) += h;
      auto probe = inner_at(f, m2);
      if (!probe) return std::nullopt;
      for (Eigen::Index rr = 0; rr < na; ++rr)
        jac(rr, c) = (probe->residual(act[static_cast<std::size_t>(rr)]) - r(rr)) / h;
    }
    const RVector step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) return std::nullopt;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      RVector trial = mu;
      for (Eigen::Index c = 0; c < na; ++c)
        trial(act[static_cast<std::size_t>(c)]) = std::max(0.0, mu(act[static_cast<std::size_t>(c)]) + t * step(c));
      auto nxt = inner_at(f, trial);
      if (!nxt) continue;
      const double e2 = merit(trial, nxt->residual);
      if (e2 < err) {
        mu = trial;
        cur = std::move(nxt);
        err = e2;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return mu;
}

inline constexpr double kPathRankTol = 1e-14;

/// A point on the central path of the LMI A(mu) >= 0.
struct PathPoint {
  RVector mu;
  double s = 0.0;   // path parameter
  InnerAt at;
  CMatrix a;
  CMatrix energy;   // s A^{-1}, normal units
};

inline CMatrix a_of(const NormalForm& f, const RVector& mu) {
  CMatrix a = CMatrix::Identity(f.n, f.n);
  for (Eigen::Index j = 0; j < mu.size(); ++j) a -= mu(j) * f.eh_gram(static_cast<std::size_t>(j));
  return hermitian_part(a);
}

/// When A* is singular the dual minimiser sits on the boundary of the domain and the ellipsoid pins it
/// down too loosely for the expansion to be solvable. Follow the path
///   q_j(mu) + s g_j^H A(mu)^{-1} g_j = target_j   (j active),
/// from the interior towards s -> 0. Every point on it is primal: the representative covariances plus
/// S_E = s A^{-1} meet the active targets exactly with total power 1 + n s.
inline std::optional<PathPoint> follow_central_path(const NormalForm& f, const RVector& start,
                                                    double s_final = 1e-11) {
  const Eigen::Index k = start.size();
  if (k == 0) return std::nullopt;
  const double top = std::max(1.0, start.maxCoeff());
  std::vector<Eigen::Index> act;
  for (Eigen::Index j = 0; j < k; ++j)
    if (start(j) > 1e-8 * top) act.push_back(j);

  for (int round = 0; round < 4; ++round) {
    if (act.empty()) return std::nullopt;
    const auto na = static_cast<Eigen::Index>(act.size());
    RVector mu = RVector::Zero(k);
    for (auto j : act) mu(j) = (1.0 - 1e-4) * start(j);

    struct Eval {
      InnerAt at;
      CMatrix a, ainv;
      RVector phi;
      double lmin = 0.0;
    };
    auto eval = [&](const RVector& m, double s) -> std::optional<Eval> {
      Eval e;
      e.a = a_of(f, m);
      const Eigen::SelfAdjointEigenSolver<CMatrix> es(e.a);
      e.lmin = es.eigenvalues()(0);
      if (!(e.lmin > 0)) return std::nullopt;
      auto at = inner_at(f, m, kPathRankTol);
      if (!at) return std::nullopt;
      e.at = std::move(*at);
      e.ainv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
      e.phi.resize(na);
      for (Eigen::Index c = 0; c < na; ++c) {
        const auto j = static_cast<std::size_t>(act[static_cast<std::size_t>(c)]);
        e.phi(c) = e.at.residual(act[static_cast<std::size_t>(c)]) + s * quad_form(e.ainv, f.eh_dirs[j]);
      }
      return e;
    };

    std::optional<Eval> cur;
    double s = 1e-5;
    bool ok = true;
    while (ok) {
      cur = eval(mu, s);
      if (!cur) return std::nullopt;
      const bool last = s <= s_final;
      const double want = last ? 1e-14 : 1e-3 * s;
      for (int it = 0; it < 40; ++it) {
        const double err = cur->phi.cwiseAbs().maxCoeff();
        if (err <= want) break;
        RMatrix jac(na, na);
        const double h = std::min(1e-7, 1e-3 * cur->lmin);
        for (Eigen::Index c = 0; c < na; ++c) {
          const Eigen::Index jc = act[static_cast<std::size_t>(c)];
          RVector m2 = mu;
          m2(jc) += h;
          auto probe = inner_at(f, m2, kPathRankTol);
          if (!probe) {
            m2(jc) = mu(jc) - h;
            probe = inner_at(f, m2, kPathRankTol);
            if (!probe) return std::nullopt;
            for (Eigen::Index r = 0; r < na; ++r)
              jac(r, c) = (cur->at.residual(act[static_cast<std::size_t>(r)]) - probe->residual(act[static_cast<std::size_t>(r)])) / h;
          } else {
            for (Eigen::Index r = 0; r < na; ++r)
              jac(r, c) = (probe->residual(act[static_cast<std::size_t>(r)]) - cur->at.residual(act[static_cast<std::size_t>(r)])) / h;
          }
          for (Eigen::Index r = 0; r < na; ++r) {
            const cplx v = f.eh_dirs[static_cast<std::size_t>(act[static_cast<std::size_t>(r)])].dot(
                cur->ainv * f.eh_dirs[static_cast<std::size_t>(jc)]);
            jac(r, c) += s * std::norm(v);
          }
        }
        const RVector step = jac.colPivHouseholderQr().solve(-cur->phi);
        if (!step.allFinite()) return std::nullopt;
        double alpha = 1.0;
        for (Eigen::Index c = 0; c < na; ++c) {
          const Eigen::Index j = act[static_cast<std::size_t>(c)];
          if (step(c) < 0) alpha = std::min(alpha, 0.99 * mu(j) / -step(c));
        }
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
          RVector trial = mu;
          for (Eigen::Index c = 0; c < na; ++c) trial(act[static_cast<std::size_t>(c)]) += alpha * step(c);
          auto nxt = eval(trial, s);
          if (!nxt) continue;
          if (nxt->phi.norm() < (1.0 - 1e-4 * alpha) * cur->phi.norm() ||
              (nxt->phi.cwiseAbs().maxCoeff() <= want)) {
            mu = trial;
            cur = std::move(nxt);
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
      if (last) break;
      s = std::max(s_final, 0.1 * s);
    }

    // an inactive constraint may have become violated; bring it in and start over
    bool grew = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::find(act.begin(), act.end(), j) != act.end()) continue;
      const double q = cur->at.residual(j) + s * quad_form(cur->ainv, f.eh_dirs[static_cast<std::size_t>(j)]);
      if (q < -1e-12 * (1.0 + f.targets[static_cast<std::size_t>(j)])) {
        act.push_back(j);
        grew = true;
      }
    }
    if (grew) continue;
    PathPoint out;
    out.mu = mu;
    out.s = s;
    out.a = cur->a;
    out.energy = s * cur->ainv;
    out.at = std::move(cur->at);
    return out;
  }
  return std::nullopt;
}

}  // namespace detail

/// Algorithm 1: dual minimisation by the ellipsoid method followed by primal recovery.
inline SolveReport solve_optimal(const Scenario& s, const SolveOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::require_feasible(s, opt.sdp);
  const auto f = normal_form(s);
  const double p = s.sum_power;
  const auto k = static_cast<Eigen::Index>(f.eh_dirs.size());

  SolveReport rep;
  rep.algorithm = Algorithm::Optimal;
  const DualResult dual = minimize_g(s, opt.dual);
  rep.lambda = dual.lambda;
  rep.g_star = dual.g;
  rep.iterations = dual.iterations;
  rep.converged = dual.converged;
  if (!dual.converged) rep.note = "dual search stopped: " + dual.stop_reason;

  auto full = [&](const RVector& mu) {
    RVector v(k + 1);
    v << 1.0, mu;
    return v;
  };
  auto feasible_normal = [&](const CMatrix& total, double tol) {
    if (trace_real(total) > 1.0 + tol) return false;
    const auto q = detail::normal_harvest(f, total);
    for (std::size_t j = 0; j < q.size(); ++j)
      if (q[j] < f.targets[j] * (1.0 - tol)) return false;
    return true;
  };

  // worst relative constraint violation of a normal-form total covariance
  auto violation = [&](const CMatrix& total) {
    double v = std::max(0.0, trace_real(total) - 1.0);
    const auto q = detail::normal_harvest(f, total);
    for (std::size_t j = 0; j < q.size(); ++j)
      if (f.targets[j] > 0) v = std::max(v, (f.targets[j] - q[j]) / f.targets[j]);
    return v;
  };

  std::optional<Recovery> first;
  std::optional<CovarianceSolution> fallback;

  // Recovery from one multiplier estimate. True once rep.solution holds a feasible point.
  auto attempt = [&](RVector mu) {
    if ((mu.array() < 0).any()) return false;
    // When A* is nonsingular the dual function is smooth there and the representative solution is the
    // primal optimum, but only as accurate as the multipliers; sharpen them first.
    if (auto at = detail::inner_at(f, mu); at && min_eigenvalue([&] {
          CMatrix a = CMatrix::Identity(f.n, f.n);
          for (Eigen::Index j = 0; j < k; ++j) a -= mu(j) * f.eh_gram(static_cast<std::size_t>(j));
          return CMatrix(hermitian_part(a));
        }()) > 1e-6) {
      if (auto polished = detail::polish_multipliers(f, mu)) {
        auto pat = detail::inner_at(f, *polished);
        if (pat && feasible_normal(sum_of(pat->inner.covariances, f.n), opt.accept_rel)) {
          Recovery rec;
          rec.path = "representative";
          rec.rank_a = f.n;
          rec.u1 = CMatrix::Identity(f.n, f.n);
          rec.u2 = CMatrix(f.n, 0);
          rec.representative_info = detail::scaled(pat->inner.covariances, p);
          rec.representative_rates = dpc_rates(s, rec.representative_info, pat->inner.encoding_order);
          rec.pinned_rates = rec.representative_rates;
          rec.representative_harvest =
              harvested_powers(s, rec.representative_info, CMatrix::Zero(f.n, f.n));
          rep.solution = make_solution(s, rec.representative_info, CMatrix::Zero(f.n, f.n), pat->inner.encoding_order);
          rep.g_star = std::min(*rep.g_star, pat->inner.objective);
          rep.lambda = from_normal(f, full(*polished));
          rep.recovery = std::move(rec);
          return true;
        }
      }
    }

    // A* singular: walk the central path to a point whose U1 blocks admit the expansion. The expansion
    // problem is nearly degenerate, so several path stages are tried and the least violating point kept.
    struct Candidate {
      double violation = INFINITY;
      CovarianceSolution solution;
      Recovery rec;
      RVector mu;
    };
    std::optional<Candidate> best;
    auto offer = [&](std::vector<CMatrix> info, CMatrix energy, const Recovery& rec, const RVector& m,
                     const std::vector<std::size_t>& order) {
      const double v = violation((sum_of(info, f.n) + energy) / p);
      if (best && v >= best->violation) return;
      best = Candidate{v, make_solution(s, std::move(info), std::move(energy), order), rec, m};
    };
    for (double s_final : {3e-11, 1e-10, 1e-9}) {
      if (best && best->violation <= opt.expansion_rel) break;
      const auto pp = detail::follow_central_path(f, mu, s_final);
      if (!pp) continue;
      const std::vector<std::size_t>& order = pp->at.inner.encoding_order;
      RangeNullSplit split;
      try {
        split = range_null_split(pp->a, 1e-6);
      } catch (const NotPsdError&) {
        continue;
      }
      const CMatrix u2 = detail::clean_null_basis(f, split.null_basis);
      const CMatrix u1 = orthogonal_complement(u2, f.n);
      Recovery rec;
      rec.split_tol = 1e-6;
      rec.rank_a = u1.cols();
      rec.u1 = u1;
      rec.u2 = u2;
      for (const auto& c : pp->at.inner.covariances)
        rec.representative_info.push_back(p * hermitian_part(u1 * (u1.adjoint() * c * u1) * u1.adjoint()));
      rec.representative_harvest = harvested_powers(s, rec.representative_info, CMatrix::Zero(f.n, f.n));
      rec.representative_rates = dpc_rates(s, rec.representative_info, order);
      rec.pinned_rates = rec.representative_rates;
      if (!first) first = rec;
      if (!fallback) fallback = make_solution(s, rec.representative_info, CMatrix::Zero(f.n, f.n), order);

      if (u2.cols() == 0) {
        rec.path = "representative";
        offer(rec.representative_info, CMatrix::Zero(f.n, f.n), rec, pp->mu, order);
        continue;
      }
      // covariance expansion on the null space of A*
      auto expand = [&](double c, const char* path) {
        const P4Problem p4 = build_p4(s, u2, rec.representative_info, P4Mode::Exact, c);
        SdpSolution sol = solve_sdp(p4.sdp, opt.sdp);
        if (sol.status == SdpStatus::Infeasible || sol.status == SdpStatus::Unbounded || sol.accuracy > 1e-7) return;
        auto [info, energy] = extract_p4(p4.layout, sol);
        Recovery r2 = rec;
        r2.path = path;
        r2.pin_scale = c;
        if (c != 1.0) r2.pinned_rates = dpc_rates(s, detail::scaled(rec.representative_info, c), order);
        r2.p4 = std::move(sol);
        offer(std::move(info), std::move(energy), r2, pp->mu, order);
      };
      expand(1.0, "p4");
      if (best && best->violation <= opt.expansion_rel) break;
      // The pins carry the residual error of the multipliers. Shrink them by the least amount that
      // makes the expansion feasible, then expand at that scale.
      const P4Problem ms = build_p4(s, u2, rec.representative_info, P4Mode::MaxScale);
      const SdpSolution msol = solve_sdp(ms.sdp, opt.sdp);
      if (msol.status != SdpStatus::Infeasible && msol.accuracy <= 1e-7) {
        const double c = std::min(1.0, msol.blocks[*ms.layout.scale_block](0, 0).real()) * (1.0 - 1e-9);
        if (c > 0 && c < 1.0) expand(c, "p4-scaled");
      }
      // the path point itself: representative plus S_E = s A^{-1}, power 1 + n s
      const double shrink = 1.0 / (1.0 + static_cast<double>(f.n) * pp->s);
      Recovery r3 = rec;
      r3.path = "central-path";
      offer(detail::scaled(pp->at.inner.covariances, p * shrink), p * shrink * pp->energy, r3, pp->mu, order);
    }
    if (best && best->violation <= opt.accept_rel) {
      rep.solution = std::move(best->solution);
      rep.lambda = from_normal(f, full(best->mu));
      rep.recovery = std::move(best->rec);
      return true;
    }
    return false;
  };

  // the final centre brackets the minimiser; the incumbent has the smallest g seen
  bool done = false;
  if (dual.center.size() == k) done = attempt(dual.center);
  if (!done) done = attempt(dual.mu);
  if (!done) {
    if (!fallback) throw SolverError("solve_optimal: primal recovery failed");
    rep.solution = *fallback;
    first->path = "representative-approx";
    rep.recovery = std::move(first);
    rep.converged = false;
    rep.note += (rep.note.empty() ? "" : "; ") + std::string("primal recovery did not reach a feasible point");
  }
  rep.duality_gap = *rep.g_star - rep.solution.wsr;
  detail::finish(s, rep, opt.classify_tol);
  rep.wall_seconds = detail::seconds_since(t0);
  return rep;
}

/// Algorithm 2: bisection on the information power, energy signal fills the residual demand.
inline SolveReport solve_idsied(const Scenario& s, const SolveOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::require_feasible(s, opt.sdp);
  const auto f = normal_form(s);
  const double p = s.sum_power;
  const CMatrix eye = CMatrix::Identity(f.n, f.n);
  const double top_target = *std::max_element(f.targets.begin(), f.targets.end());

  struct Point {
    bool feasible = false;
    std::vector<CMatrix> info;
    CMatrix energy;
    std::vector<std::size_t> order;
  };
  auto evaluate = [&](double pi) {
    Point pt;
    pt.energy = CMatrix::Zero(f.n, f.n);
    if (pi > 0) {
      auto inner = solve_reduced_bc(eye, f.id, f.weights, pi, 1e-12);
      pt.info = std::move(inner.covariances);
      pt.order = std::move(inner.encoding_order);
    } else {
      pt.info.assign(f.id.size(), CMatrix::Zero(f.n, f.n));
      pt.order = descending_weight_order(f.weights);
    }
    const auto q = detail::normal_harvest(f, sum_of(pt.info, f.n));
    std::vector<double> residual(q.size());
    double worst = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      residual[j] = std::max(0.0, f.targets[j] - q[j]);
      worst = std::max(worst, residual[j]);
    }
    // residuals below the solver's resolution count as met
    if (worst <= 1e-12 * top_target) {
      pt.feasible = true;
      return pt;
    }
    const double left = 1.0 - pi;
    if (left <= 0) return pt;
    const SdpSolution sol = solve_sdp(build_max_ratio(f.n, f.eh_dirs, residual, left), opt.sdp);
    if (sol.status != SdpStatus::Optimal && sol.accuracy > 1e-6) return pt;
    const double ratio = sol.blocks[1](0, 0).real() / worst;
    if (ratio >= 1.0) {
      pt.feasible = true;
      pt.energy = hermitian_part(sol.blocks[0]);
    }
    return pt;
  };

  SolveReport rep;
  rep.algorithm = Algorithm::Idsied;
  Point best = evaluate(1.0);
  double lo = 1.0, hi = 1.0;
  rep.bisection.push_back({p, best.feasible});
  int iters = 1;
  if (!best.feasible) {
    lo = 0.0;
    best = evaluate(0.0);
    rep.bisection.push_back({0.0, best.feasible});
    ++iters;
    if (!best.feasible) throw SolverError("solve_idsied: zero information power is infeasible");
    while (hi - lo >= opt.bisection_rel) {
      const double mid = 0.5 * (lo + hi);
      Point pt = evaluate(mid);
      rep.bisection.push_back({mid * p, pt.feasible});
      ++iters;
      if (pt.feasible) {
        lo = mid;
        best = std::move(pt);
      } else {
        hi = mid;
      }
    }
  }
  rep.p_info = lo * p;
  rep.iterations = iters;
  rep.solution = make_solution(s, detail::scaled(best.info, p), p * best.energy, best.order);
  detail::finish(s, rep, opt.classify_tol);
  rep.wall_seconds = detail::seconds_since(t0);
  return rep;
}

/// Energy signal at minimum power first, the remaining power goes to information.
inline SolveReport solve_ehsied(const Scenario& s, const SolveOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::require_feasible(s, opt.sdp);
  const auto f = normal_form(s);
  const double p = s.sum_power;
  SolveReport rep;
  rep.algorithm = Algorithm::Ehsied;
  const SdpSolution sol = solve_sdp(build_min_power(f.n, f.eh_dirs, f.targets), opt.sdp);
  if (sol.status != SdpStatus::Optimal && sol.accuracy > 1e-6)
    throw SolverError(std::string("minimum-power SDP failed: ") + to_string(sol.status));
  const CMatrix energy = hermitian_part(sol.blocks[0]);
  const double pe = trace_real(energy);
  rep.energy_power = pe * p;
  rep.iterations = sol.iterations;
  const double left = std::max(0.0, 1.0 - pe);
  std::vector<CMatrix> info(f.id.size(), CMatrix::Zero(f.n, f.n));
  std::vector<std::size_t> order = descending_weight_order(f.weights);
  if (left > 0) {
    auto inner = solve_reduced_bc(CMatrix::Identity(f.n, f.n), f.id, f.weights, left, 1e-12);
    info = std::move(inner.covariances);
    order = std::move(inner.encoding_order);
  }
  rep.solution = make_solution(s, detail::scaled(info, p), p * energy, order);
  detail::finish(s, rep, opt.classify_tol);
  rep.wall_seconds = detail::seconds_since(t0);
  return rep;
}

/// WSR with the harvest constraints dropped (the E -> 0 baseline).
inline SolveReport solve_unconstrained(const Scenario& s, const SolveOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = normal_form(s);
  SolveReport rep;
  rep.algorithm = Algorithm::Baseline;
  auto inner = solve_reduced_bc(CMatrix::Identity(f.n, f.n), f.id, f.weights, 1.0, 1e-12);
  rep.iterations = inner.mac.iterations;
  rep.converged = inner.converged;
  rep.solution = make_solution(s, detail::scaled(inner.covariances, s.sum_power), CMatrix::Zero(f.n, f.n),
                               inner.encoding_order);
  detail::finish(s, rep, opt.classify_tol);
  rep.wall_seconds = detail::seconds_since(t0);
  return rep;
}

inline SolveReport solve(const Scenario& s, Algorithm a, const SolveOptions& opt = {}) {
  switch (a) {
    case Algorithm::Optimal: return solve_optimal(s, opt);
    case Algorithm::Idsied: return solve_idsied(s, opt);
    case Algorithm::Ehsied: return solve_ehsied(s, opt);
    case Algorithm::Baseline: return solve_unconstrained(s, opt);
  }
  throw ContractError("solve: unknown algorithm");
}

// ---------------------------------------------------------------------------
// Parallel fan-out

/// SWIPT_THREADS if set and positive, otherwise the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SWIPT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n); results must be written by index so completion order is irrelevant.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0) {
  if (threads == 0) threads = worker_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Capacity region

struct RegionPoint {
  double t = 0.0;
  std::vector<double> weights;
  std::vector<double> rates;
  double wsr = 0.0;
  Algorithm algorithm = Algorithm::Optimal;
  std::string case_label;
  bool ok = true;
  std::string error;
};

inline std::vector<double> even_grid(std::size_t n) {
  if (n == 0) throw ContractError("even_grid: need at least one point");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

/// Weighted sum-rate sweep over alpha = (t, 1 - t) for two ID receivers. Failures are recorded per point.
inline std::vector<RegionPoint> capacity_region(const Scenario& s, const std::vector<double>& grid,
                                                const std::vector<Algorithm>& algorithms,
                                                const SolveOptions& opt = {}, unsigned threads = 0) {
  if (s.num_id() != 2) throw ContractError("capacity_region: the (t, 1-t) sweep needs exactly two ID receivers");
  std::vector<double> ts = grid;
  std::sort(ts.begin(), ts.end());
  for (double t : ts)
    if (!(t >= 0 && t <= 1)) throw ContractError("capacity_region: grid values must lie in [0, 1]");
  std::vector<RegionPoint> out(ts.size() * algorithms.size());
  parallel_for(
      out.size(),
      [&](std::size_t idx) {
        const std::size_t ti = idx / algorithms.size(), ai = idx % algorithms.size();
        RegionPoint& pt = out[idx];
        pt.t = ts[ti];
        pt.algorithm = algorithms[ai];
        pt.weights = {ts[ti], 1.0 - ts[ti]};
        pt.rates.assign(2, 0.0);
        Scenario sc = s;
        sc.weights = pt.weights;
        try {
          const auto rep = solve(sc, pt.algorithm, opt);
          pt.rates = rep.solution.rates;
          pt.wsr = rep.solution.wsr;
          pt.case_label = to_string(rep.classification.label);
          if (!rep.converged) {
            pt.ok = false;
            pt.error = rep.note;
          }
        } catch (const std::exception& e) {
          pt.ok = false;
          pt.error = e.what();
        }
      },
      threads);
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle for two antennas and a single ID receiver

struct BruteForceResult {
  bool feasible = false;
  double wsr = -INFINITY;
  CVector info_beam;
  CVector energy_beam;
  double p_info = 0.0;
  double p_energy = 0.0;
};

/// Largest p_I in [0, P] such that p_I a_j + p_E b_j >= d_j with p_E = P - p_I, or nullopt.
inline std::optional<double> largest_info_power(double total, const double* a, const double* b, const double* d,
                                                std::size_t k) {
  // The energy beam takes whatever is left, so each constraint is linear in p_I:
  // p_I (a_j - b_j) >= d_j - P b_j.
  double lo = 0.0, hi = total;
  for (std::size_t j = 0; j < k; ++j) {
    const double slope = a[j] - b[j];
    const double rhs = d[j] - total * b[j];
    if (slope > 0) {
      lo = std::max(lo, rhs / slope);
    } else if (slope < 0) {
      hi = std::min(hi, rhs / slope);
    } else if (rhs > 0) {
      return std::nullopt;
    }
  }
  if (lo > hi) return std::nullopt;
  return hi;
}

/// Exhaustive beam grid: w(t, phi) = (cos t, sin t e^{i phi}) for both the information and the energy beam.
/// The result is a feasible point, hence a lower bound on the optimum.
inline BruteForceResult brute_force_oracle(const Scenario& s, int resolution = 40) {
  validate(s);
  if (s.n_tx != 2 || s.num_id() != 1 || s.num_eh() > 2)
    throw ContractError("brute_force_oracle: only N = 2, one ID receiver and at most two EH receivers");
  if (resolution < 2) throw ContractError("brute_force_oracle: resolution must be at least 2");
  const std::size_t ke = s.num_eh();
  std::vector<CVector> beams;
  for (int a = 0; a < resolution; ++a) {
    const double t = (M_PI / 2) * a / (resolution - 1);
    for (int b = 0; b < resolution; ++b) {
      const double phi = 2 * M_PI * b / resolution;
      CVector w(2);
      w << std::cos(t), std::sin(t) * std::polar(1.0, phi);
      beams.push_back(w);
      if (a == 0) break;  // phi is irrelevant at t = 0
    }
  }
  const std::size_t nb = beams.size();
  std::vector<double> gain_h(nb), gain_g(nb * ke);
  for (std::size_t i = 0; i < nb; ++i) {
    gain_h[i] = std::norm(s.id_channels[0].dot(beams[i]));
    for (std::size_t j = 0; j < ke; ++j) gain_g[i * ke + j] = std::norm(s.eh_channels[j].dot(beams[i]));
  }
  std::vector<double> demand(ke);
  for (std::size_t j = 0; j < ke; ++j) demand[j] = s.harvest_targets[j] / s.harvest_efficiency;

  BruteForceResult best;
  double best_snr = -1.0;
  for (std::size_t wi = 0; wi < nb; ++wi) {
    for (std::size_t ui = 0; ui < nb; ++ui) {
      const auto pi = largest_info_power(s.sum_power, &gain_g[wi * ke], &gain_g[ui * ke], demand.data(), ke);
      if (!pi) continue;
      const double snr = *pi * gain_h[wi];
      if (snr > best_snr) {
        best_snr = snr;
        best.feasible = true;
        best.info_beam = beams[wi];
        best.energy_beam = beams[ui];
        best.p_info = *pi;
        best.p_energy = s.sum_power - *pi;
      }
    }
  }
  if (best.feasible) best.wsr = s.weights[0] * std::log2(1.0 + best_snr / s.noise_power);
  return best;
}

}  // namespace swipt

#endif  // SWIPT_ALGORITHMS_HPP
