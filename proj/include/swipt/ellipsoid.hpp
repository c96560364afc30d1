#ifndef SWIPT_ELLIPSOID_HPP
#define SWIPT_ELLIPSOID_HPP

// Dual minimisation over the harvest multipliers.
//
// g(lambda) is homogeneous of degree zero, so the sum-power multiplier is fixed to one and the
// search runs over the K_E harvest multipliers in normal-form units, where every point of the
// domain lies in the unit box. K_E = 1 degenerates to bisection.

#include "swipt/dualmac.hpp"
#include "swipt/model.hpp"

#include <optional>

namespace swipt {

enum class CutKind { Nonnegativity, Nullspace, Psd, Budget, Objective };

inline const char* to_string(CutKind k) {
  switch (k) {
    case CutKind::Nonnegativity: return "nonnegativity";
    case CutKind::Nullspace: return "nullspace";
    case CutKind::Psd: return "psd";
    case CutKind::Budget: return "budget";
    case CutKind::Objective: return "objective";
  }
  return "?";
}

/// Multipliers in physical units: lam0 for the sum-power constraint, lam[j] for harvest j.
struct DualPoint {
  double lam0 = 0.0;
  RVector lam;

  /// A = lam0 I - sum_j lam_j g_j g_j^H.
  CMatrix constraint_matrix(const Scenario& s) const {
    CMatrix a = lam0 * CMatrix::Identity(s.n_tx, s.n_tx);
    for (std::size_t j = 0; j < s.num_eh(); ++j) a -= lam(static_cast<Eigen::Index>(j)) * outer(s.eh_channels[j]);
    return a;
  }
  /// P_A = lam0 P_sum - sum_j lam_j E_j / zeta.
  double budget(const Scenario& s) const {
    double p = lam0 * s.sum_power;
    for (std::size_t j = 0; j < s.num_eh(); ++j)
      p -= lam(static_cast<Eigen::Index>(j)) * s.harvest_targets[j] / s.harvest_efficiency;
    return p;
  }
};

/// Physical multipliers relate to normal-form ones by mu = D lambda, D = diag(P, P ||g_j||^2).
inline RVector dual_scaling(const NormalForm& f) {
  RVector d(static_cast<Eigen::Index>(f.eh_gain.size()) + 1);
  d(0) = f.sum_power;
  for (std::size_t j = 0; j < f.eh_gain.size(); ++j) d(static_cast<Eigen::Index>(j) + 1) = f.sum_power * f.eh_gain[j];
  return d;
}

inline RVector to_normal(const NormalForm& f, const DualPoint& p) {
  RVector full(p.lam.size() + 1);
  full << p.lam0, p.lam;
  return dual_scaling(f).cwiseProduct(full);
}

inline DualPoint from_normal(const NormalForm& f, const RVector& mu_full) {
  const RVector full = mu_full.cwiseQuotient(dual_scaling(f));
  return {full(0), full.tail(full.size() - 1)};
}

struct Cut {
  CutKind kind = CutKind::Objective;
  RVector direction;           // keep the half-space direction . (x - x_query) <= 0
  std::optional<CVector> context;
};

struct DualContext {
  RMatrix h_proj;      // t x K_E, |v_l^H g_j|^2 for the range basis v_l of H
  CMatrix h_range;     // N x t
  double eps_strict = 1e-9;
  double rank_tol = kDefaultRankTol;
};

inline DualContext make_context(const NormalForm& f) {
  DualContext ctx;
  CMatrix h = CMatrix::Zero(f.n, f.n);
  // zero-weight receivers put no restriction on the dual domain
  for (std::size_t i = 0; i < f.id.size(); ++i)
    if (f.weights[i] > 0) h += outer(f.id[i]);
  const auto split = range_null_split(h, kDefaultRankTol);
  ctx.h_range = split.range_basis;
  ctx.h_proj.resize(split.rank, static_cast<Eigen::Index>(f.eh_dirs.size()));
  for (Eigen::Index l = 0; l < split.rank; ++l)
    for (std::size_t j = 0; j < f.eh_dirs.size(); ++j)
      ctx.h_proj(l, static_cast<Eigen::Index>(j)) = std::norm(ctx.h_range.col(l).dot(f.eh_dirs[j]));
  return ctx;
}

struct OracleResult {
  Cut cut;                                 // normal-form coordinates (mu0, mu_1..mu_K)
  std::optional<double> g;
  std::optional<ReducedBcSolution> inner;  // normal-form covariances
  RangeNullSplit split;
};

namespace detail {

inline RVector projection_cut(const NormalForm& f, const CVector& x) {
  RVector a(static_cast<Eigen::Index>(f.eh_dirs.size()) + 1);
  a(0) = -x.squaredNorm();
  for (std::size_t j = 0; j < f.eh_dirs.size(); ++j) a(static_cast<Eigen::Index>(j) + 1) = std::norm(x.dot(f.eh_dirs[j]));
  return a;
}

}  // namespace detail

/// Separating cut or objective cut at mu = (mu0, mu_1..mu_K) in normal form.
inline OracleResult oracle_cut_normal(const NormalForm& f, const DualContext& ctx, const RVector& mu_full) {
  const auto k = static_cast<Eigen::Index>(f.eh_dirs.size());
  OracleResult out;
  out.cut.direction = RVector::Zero(k + 1);
  const double mu0 = mu_full(0);
  const RVector mu = mu_full.tail(k);
  // (a) nonnegativity
  for (Eigen::Index j = -1; j < k; ++j) {
    if (mu_full(j + 1) < 0) {
      out.cut.kind = CutKind::Nonnegativity;
      out.cut.direction(j + 1) = -1.0;
      return out;
    }
  }
  const double eps = ctx.eps_strict * std::max(mu0, 1e-300);
  // (b) null space of A must avoid the ID channels
  for (Eigen::Index l = 0; l < ctx.h_proj.rows(); ++l) {
    const double fl = -mu0 + ctx.h_proj.row(l).dot(mu);
    if (fl >= -eps) {
      out.cut.kind = CutKind::Nullspace;
      out.cut.direction(0) = -1.0;
      out.cut.direction.tail(k) = ctx.h_proj.row(l).transpose();
      out.cut.context = ctx.h_range.col(l);
      return out;
    }
  }
  CMatrix a = mu0 * CMatrix::Identity(f.n, f.n);
  for (Eigen::Index j = 0; j < k; ++j) a -= mu(j) * f.eh_gram(static_cast<std::size_t>(j));
  a = hermitian_part(a);
  // (c) positive semidefiniteness, via the top eigenvector of F = -A
  const EigenPairs ep = hermitian_eig(-a);
  if (ep.values(0) > 1e-14 * std::max(mu0, 1.0)) {
    const CVector z = ep.vectors.col(0);
    out.cut.kind = CutKind::Psd;
    out.cut.direction = detail::projection_cut(f, z);
    out.cut.context = z;
    return out;
  }
  // (b') any remaining ID-channel energy in the numerical null space of A
  out.split = range_null_split(a, ctx.rank_tol);
  if (out.split.null_basis.cols() > 0) {
    for (std::size_t i = 0; i < f.id.size(); ++i) {
      if (!(f.weights[i] > 0)) continue;
      const CVector& h = f.id[i];
      const CVector part = out.split.null_basis * (out.split.null_basis.adjoint() * h);
      if (part.squaredNorm() > 1e-8 * h.squaredNorm()) {
        out.cut.kind = CutKind::Nullspace;
        out.cut.direction = detail::projection_cut(f, part.normalized());
        out.cut.context = part.normalized();
        return out;
      }
    }
  }
  // (d) budget
  double budget = mu0;
  for (Eigen::Index j = 0; j < k; ++j) budget -= mu(j) * f.targets[static_cast<std::size_t>(j)];
  if (budget < 0) {
    out.cut.kind = CutKind::Budget;
    out.cut.direction(0) = -1.0;
    for (Eigen::Index j = 0; j < k; ++j) out.cut.direction(j + 1) = f.targets[static_cast<std::size_t>(j)];
    return out;
  }
  // (e) objective cut from the representative inner solution
  ReducedBcSolution inner = solve_reduced_bc(out.split, a, f.id, f.weights, budget, 1e-12);
  const CMatrix si = sum_of(inner.covariances, f.n);
  out.cut.kind = CutKind::Objective;
  out.cut.direction(0) = 1.0 - trace_real(si);
  for (Eigen::Index j = 0; j < k; ++j)
    out.cut.direction(j + 1) = quad_form(si, f.eh_dirs[static_cast<std::size_t>(j)]) - f.targets[static_cast<std::size_t>(j)];
  out.g = inner.objective;
  out.inner = std::move(inner);
  return out;
}

/// Physical-unit oracle; the returned direction is expressed in lambda coordinates.
inline OracleResult oracle_cut(const Scenario& s, const DualPoint& lam) {
  const auto f = normal_form(s);
  const auto ctx = make_context(f);
  OracleResult r = oracle_cut_normal(f, ctx, to_normal(f, lam));
  r.cut.direction = r.cut.direction.cwiseProduct(dual_scaling(f));
  return r;
}

/// g(lambda), or nullopt outside the domain where the inner problem is unbounded.
inline std::optional<double> evaluate_g(const Scenario& s, const DualPoint& lam) {
  const auto r = oracle_cut(s, lam);
  if (r.cut.kind == CutKind::Objective) return r.g;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

/// E = {center + L u : |u| <= 1} with shape P = L L^T. The factor is what gets updated; keeping
/// it avoids the cancellation that destroys a^T P a once P becomes badly conditioned.
struct EllipsoidState {
  RVector center;
  RMatrix shape;
  RMatrix factor;  // may be left empty; derived from shape on first use
  int iteration = 0;
  std::optional<RVector> incumbent;
  double incumbent_g = INFINITY;
};

class DegenerateEllipsoidError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Central-cut step keeping {x : a . (x - center) <= 0}.
inline EllipsoidState ellipsoid_update(const EllipsoidState& st, const RVector& a) {
  const auto n = static_cast<double>(st.center.size());
  if (st.center.size() < 2) throw ContractError("ellipsoid_update: dimension must be >= 2, use bisection");
  if (a.size() != st.center.size()) throw ContractError("ellipsoid_update: cut dimension mismatch");
  RMatrix l = st.factor;
  if (l.size() == 0) {
    Eigen::LLT<RMatrix> llt(st.shape);
    if (llt.info() != Eigen::Success) throw DegenerateEllipsoidError("ellipsoid_update: shape is not positive definite");
    l = llt.matrixL();
  }
  const RVector lta = l.transpose() * a;
  const double norm = lta.norm();
  if (!(norm > 0) || !std::isfinite(norm)) throw DegenerateEllipsoidError("ellipsoid_update: a^T P a <= 0");
  const RVector u = lta / norm;
  const RVector lu = l * u;
  EllipsoidState out = st;
  out.center = st.center - lu / (n + 1.0);
  // P+ = n^2/(n^2-1) (P - 2/(n+1) P a a^T P / a^T P a), as L+ = c L (I - gamma u u^T)
  const double gamma = 1.0 - std::sqrt((n - 1.0) / (n + 1.0));
  const double c = n / std::sqrt(n * n - 1.0);
  out.factor = c * (l - gamma * lu * u.transpose());
  out.shape = out.factor * out.factor.transpose();
  out.iteration = st.iteration + 1;
  return out;
}

struct DualOptions {
  double tol = 1e-10;
  int max_iter = 0;          // 0 selects 500 (K_E + 1)^2
  double stall_rel = 1e-12;   // negative disables the stall rule
  double width_tol = 1e-11;
  bool keep_trace = true;
  double rank_tol = kDefaultRankTol;  // split of A inside the oracle
};

struct TraceEntry {
  int iteration = 0;
  DualPoint lambda;
  CutKind kind = CutKind::Objective;
  std::optional<double> g;
};

struct DualResult {
  DualPoint lambda;          // physical units, lam0 = 1 / P_sum
  RVector mu;                // normal-form harvest multipliers (mu0 = 1)
  double g = INFINITY;
  std::optional<ReducedBcSolution> inner;  // normal form
  RangeNullSplit split;      // split of A at the incumbent
  RVector center;            // final ellipsoid centre (interval midpoint for one EH receiver)
  double width = INFINITY;   // ||L|| of the final ellipsoid (interval length)
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  std::vector<TraceEntry> trace;
};

/// Ellipsoid (or bisection) search for the minimiser of g with mu0 fixed to one.
inline DualResult minimize_g(const Scenario& s, const DualOptions& opt = {}) {
  const auto f = normal_form(s);
  auto ctx = make_context(f);
  ctx.rank_tol = opt.rank_tol;
  const auto k = static_cast<Eigen::Index>(f.eh_dirs.size());
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 500 * static_cast<int>((k + 1) * (k + 1));
  DualResult res;

  auto full = [&](const RVector& mu) {
    RVector v(k + 1);
    v << 1.0, mu;
    return v;
  };
  std::optional<OracleResult> best;
  RVector best_mu;
  auto consider = [&](const RVector& mu, OracleResult&& r) {
    if (r.g && *r.g < res.g) {
      res.g = *r.g;
      best_mu = mu;
      best = std::move(r);
      return true;
    }
    return false;
  };
  auto log = [&](int it, const RVector& mu, const OracleResult& r) {
    if (opt.keep_trace) res.trace.push_back({it, from_normal(f, full(mu)), r.cut.kind, r.g});
  };

  int it = 0;
  int since_improve = 0;
  double last_improve_g = INFINITY;
  const int window = std::max(50, 10 * static_cast<int>(k * (k + 1)));
  if (k == 1) {
    double lo = 0.0, hi = 1.0;
    for (; it < max_iter; ++it) {
      RVector mu(1);
      mu(0) = 0.5 * (lo + hi);
      OracleResult r = oracle_cut_normal(f, ctx, full(mu));
      log(it, mu, r);
      const double a = r.cut.direction(1);
      const bool is_obj = r.cut.kind == CutKind::Objective;
      consider(mu, std::move(r));
      if (is_obj && a == 0.0) {
        res.converged = true;
        res.stop_reason = "zero subgradient";
        break;
      }
      if (a > 0) hi = mu(0);
      else lo = mu(0);
      if (hi - lo <= opt.width_tol * 1e-2) {
        res.converged = true;
        res.stop_reason = "interval width";
        break;
      }
    }
    res.center = RVector::Constant(1, 0.5 * (lo + hi));
    res.width = hi - lo;
    // the interval endpoints may be better than any midpoint visited
    if (best) {
      for (double end : {lo, hi}) {
        RVector mu(1);
        mu(0) = end;
        consider(mu, oracle_cut_normal(f, ctx, full(mu)));
      }
    }
  } else {
    EllipsoidState st;
    st.center = RVector::Constant(k, 0.5);
    const double radius = std::sqrt(static_cast<double>(k)) / 2.0 * 1.01;
    st.shape = radius * radius * RMatrix::Identity(k, k);
    st.factor = radius * RMatrix::Identity(k, k);
    for (; it < max_iter; ++it) {
      OracleResult r = oracle_cut_normal(f, ctx, full(st.center));
      log(it, st.center, r);
      const RVector a = r.cut.direction.tail(k);
      const bool is_obj = r.cut.kind == CutKind::Objective;
      const RVector center = st.center;
      if (consider(center, std::move(r))) {
        if (res.g < last_improve_g - opt.stall_rel * (1.0 + std::abs(res.g))) {
          last_improve_g = res.g;
          since_improve = 0;
        }
      }
      if (a.norm() == 0.0) {
        if (is_obj) {
          res.converged = true;
          res.stop_reason = "zero subgradient";
          break;
        }
        // a pure mu0 cut cannot bind with mu0 fixed; the point is outside the domain for good
        throw DegenerateEllipsoidError("minimize_g: empty domain");
      }
      const double spread = (st.factor.transpose() * a).norm();
      if (is_obj && spread <= opt.tol * (1.0 + std::abs(res.g))) {
        res.converged = true;
        res.stop_reason = "subgradient spread";
        break;
      }
      if (opt.stall_rel >= 0 && std::isfinite(res.g) && ++since_improve > window) {
        res.converged = true;
        res.stop_reason = "stalled";
        break;
      }
      if (st.factor.norm() < opt.width_tol) {
        res.converged = true;
        res.stop_reason = "ellipsoid width";
        break;
      }
      try {
        st = ellipsoid_update(st, a);
      } catch (const DegenerateEllipsoidError&) {
        res.converged = std::isfinite(res.g);
        res.stop_reason = "degenerate ellipsoid";
        break;
      }
    }
    res.center = st.center;
    res.width = st.factor.norm();
  }
  res.iterations = it;
  if (!res.converged) res.stop_reason = "max_iter";
  if (!best) throw std::runtime_error("minimize_g: no point of the dual domain was found");
  res.mu = best_mu;
  res.lambda = from_normal(f, full(best_mu));
  res.inner = std::move(best->inner);
  res.split = std::move(best->split);
  return res;
}

}  // namespace swipt

#endif  // SWIPT_ELLIPSOID_HPP
