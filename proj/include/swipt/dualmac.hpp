#ifndef SWIPT_DUALMAC_HPP
#define SWIPT_DUALMAC_HPP

// Weighted sum-rate over a BC with a general linear transmit constraint Tr(A sum_i B_i) <= P_A,
// solved through the dual MAC whose noise covariance is A. Everything here assumes unit noise.

#include "swipt/matkernel.hpp"
#include "swipt/model.hpp"

#include <limits>
#include <numeric>

namespace swipt {

inline constexpr double kMaxReducedCondition = 1e13;

struct ReducedProblem {
  CMatrix a_hat;                      // m x m, positive definite
  std::vector<CVector> h_hat;         // sorted by descending weight, zero-weight users removed
  std::vector<double> weights;        // descending, all > 0
  std::vector<std::size_t> order;     // order[k] = caller index of sorted user k
  std::vector<std::size_t> dropped;   // caller indices with zero weight
  double budget = 0.0;
  CMatrix u1;                         // N x m range basis used for the reduction

  std::size_t users() const { return h_hat.size(); }
  Eigen::Index dim() const { return a_hat.rows(); }
};

/// h_hat = U1^H h, A_hat = U1^H A U1, users sorted by descending weight (stable on ties).
inline ReducedProblem reduce(const RangeNullSplit& split, const CMatrix& a, const std::vector<CVector>& channels,
                             const std::vector<double>& weights, double budget) {
  if (channels.size() != weights.size()) throw ContractError("reduce: one weight per channel required");
  if (a.rows() != a.cols() || split.range_basis.rows() != a.rows()) throw ContractError("reduce: dimension mismatch");
  if (!(budget >= -1e-12) || !std::isfinite(budget)) throw ContractError("reduce: budget must be nonnegative");
  ReducedProblem rp;
  rp.u1 = split.range_basis;
  rp.budget = std::max(budget, 0.0);
  rp.a_hat = hermitian_part(rp.u1.adjoint() * a * rp.u1);
  if (rp.dim() > 0) {
    const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(rp.a_hat, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > 0) || ev(ev.size() - 1) > kMaxReducedCondition * ev(0)) {
      throw RankToleranceError("reduce: reduced constraint matrix is numerically singular");
    }
  }
  for (std::size_t idx : descending_weight_order(weights)) {
    if (weights[idx] < 0) throw ContractError("reduce: negative weight");
    if (weights[idx] == 0.0) {
      rp.dropped.push_back(idx);
      continue;
    }
    if (channels[idx].size() != a.rows()) throw ContractError("reduce: channel dimension mismatch");
    rp.h_hat.push_back(rp.u1.adjoint() * channels[idx]);
    rp.weights.push_back(weights[idx]);
    rp.order.push_back(idx);
  }
  return rp;
}

namespace detail {

/// Cholesky factors of M_i = A_hat + sum_{k<=i} p_k h_k h_k^H for i = 0..K.
struct MacFactors {
  std::vector<Eigen::LLT<CMatrix>> llt;
  std::vector<double> logdet;  // natural log
};

inline MacFactors mac_factors(const ReducedProblem& rp, const RVector& p) {
  MacFactors f;
  CMatrix m = rp.a_hat;
  for (std::size_t i = 0; i <= rp.users(); ++i) {
    if (i > 0) m += p(static_cast<Eigen::Index>(i - 1)) * outer(rp.h_hat[i - 1]);
    f.llt.emplace_back(m);
    const CMatrix& l = f.llt.back().matrixLLT();
    double ld = 0.0;
    for (Eigen::Index k = 0; k < l.rows(); ++k) ld += 2.0 * std::log(l(k, k).real());
    f.logdet.push_back(ld);
  }
  return f;
}

inline double weight_step(const ReducedProblem& rp, std::size_t i) {
  const double next = i + 1 < rp.users() ? rp.weights[i + 1] : 0.0;
  return rp.weights[i] - next;
}

}  // namespace detail

/// f(p) = sum_i (alpha_i - alpha_{i+1}) log2(|M_i| / |A_hat|).
inline double mac_objective(const ReducedProblem& rp, const RVector& p) {
  const auto f = detail::mac_factors(rp, p);
  double acc = 0.0;
  for (std::size_t i = 0; i < rp.users(); ++i) acc += detail::weight_step(rp, i) * (f.logdet[i + 1] - f.logdet[0]);
  return acc / std::log(2.0);
}

/// Uplink rates log2(1 + p_i h_i^H M_{i-1}^{-1} h_i); user i is interfered by users k < i.
inline RVector mac_rates(const ReducedProblem& rp, const RVector& p) {
  const auto f = detail::mac_factors(rp, p);
  RVector r(static_cast<Eigen::Index>(rp.users()));
  for (std::size_t i = 0; i < rp.users(); ++i) {
    const double sinr = p(static_cast<Eigen::Index>(i)) * rp.h_hat[i].dot(f.llt[i].solve(rp.h_hat[i])).real();
    r(static_cast<Eigen::Index>(i)) = std::log1p(std::max(sinr, 0.0)) / std::log(2.0);
  }
  return r;
}

inline RVector mac_gradient(const ReducedProblem& rp, const RVector& p) {
  const auto f = detail::mac_factors(rp, p);
  const auto k = static_cast<Eigen::Index>(rp.users());
  RVector g = RVector::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = detail::weight_step(rp, static_cast<std::size_t>(i));
    if (c == 0.0) continue;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& h = rp.h_hat[static_cast<std::size_t>(j)];
      g(j) += c * h.dot(f.llt[static_cast<std::size_t>(i) + 1].solve(h)).real();
    }
  }
  return g / std::log(2.0);
}

inline RMatrix mac_hessian(const ReducedProblem& rp, const RVector& p) {
  const auto f = detail::mac_factors(rp, p);
  const auto k = static_cast<Eigen::Index>(rp.users());
  RMatrix hess = RMatrix::Zero(k, k);
  CMatrix hmat(rp.dim(), k);
  for (Eigen::Index j = 0; j < k; ++j) hmat.col(j) = rp.h_hat[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = detail::weight_step(rp, static_cast<std::size_t>(i));
    if (c == 0.0) continue;
    const CMatrix hi = hmat.leftCols(i + 1);
    const CMatrix gram = hi.adjoint() * f.llt[static_cast<std::size_t>(i) + 1].solve(hi);
    hess.topLeftCorner(i + 1, i + 1) -= c * gram.cwiseAbs2();
  }
  return hess / std::log(2.0);
}

/// Euclidean projection onto {x >= 0, sum x <= budget}.
inline RVector project_capped_simplex(const RVector& v, double budget) {
  RVector clipped = v.cwiseMax(0.0);
  if (clipped.sum() <= budget) return clipped;
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - budget) / static_cast<double>(k + 1);
    if (u[k] - t > 0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

struct MacPowers {
  RVector p;
  RVector rates;
  double objective = 0.0;
  double stationarity = 0.0;  // ||x - proj(x + grad)|| on the unit-budget scale
  int iterations = 0;
  bool converged = false;
};

/// Maximises the concave telescoped MAC objective over {p >= 0, sum p <= P_A}.
///
/// Alternates a projected-gradient step, which settles the active set, with a Newton step on the
/// current support restricted to the budget face. Stops once the projected-gradient residual on the
/// unit-budget scale is below tol.
inline MacPowers solve_mac_wsr(const ReducedProblem& rp, double tol = 1e-10, int max_iter = 500) {
  for (std::size_t i = 1; i < rp.weights.size(); ++i) {
    if (rp.weights[i] > rp.weights[i - 1]) throw ContractError("solve_mac_wsr: weights must be descending");
  }
  const auto k = static_cast<Eigen::Index>(rp.users());
  MacPowers out;
  out.p = RVector::Zero(k);
  if (k == 0 || rp.budget <= 0.0) {
    out.rates = RVector::Zero(k);
    out.converged = true;
    return out;
  }
  // unit-budget problem: x = p / P_A, channels scaled by sqrt(P_A)
  ReducedProblem unit = rp;
  for (auto& h : unit.h_hat) h *= std::sqrt(rp.budget);
  unit.budget = 1.0;

  RVector x = RVector::Constant(k, 1.0 / static_cast<double>(k));
  double fx = mac_objective(unit, x);
  double step = 1.0;
  auto residual = [&](const RVector& pt, const RVector& g) { return (pt - project_capped_simplex(pt + g, 1.0)).norm(); };

  int it = 0;
  for (; it < max_iter; ++it) {
    RVector g = mac_gradient(unit, x);
    out.stationarity = residual(x, g);
    if (out.stationarity <= tol) {
      out.converged = true;
      break;
    }
    // projected gradient with backtracking
    for (int bt = 0; bt < 60; ++bt) {
      const RVector cand = project_capped_simplex(x + step * g, 1.0);
      const RVector dx = cand - x;
      const double fc = mac_objective(unit, cand);
      if (fc >= fx + g.dot(dx) - dx.squaredNorm() / (2.0 * step) - 1e-15 * std::abs(fx)) {
        x = cand;
        fx = fc;
        step = std::min(step * 2.0, 1e6);
        break;
      }
      step *= 0.5;
    }
    // Newton on the support, constrained to the budget face
    std::vector<Eigen::Index> sup;
    for (Eigen::Index j = 0; j < k; ++j)
      if (x(j) > 0.0) sup.push_back(j);
    const auto s = static_cast<Eigen::Index>(sup.size());
    if (s == 0) continue;
    g = mac_gradient(unit, x);
    const RMatrix hess = mac_hessian(unit, x);
    const bool on_face = std::abs(x.sum() - 1.0) <= 1e-12;
    const Eigen::Index dim = s + (on_face ? 1 : 0);
    RMatrix kkt = RMatrix::Zero(dim, dim);
    RVector rhs = RVector::Zero(dim);
    for (Eigen::Index a = 0; a < s; ++a) {
      rhs(a) = g(sup[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = -hess(sup[static_cast<std::size_t>(a)], sup[static_cast<std::size_t>(b)]);
      kkt(a, a) += 1e-14 * (1.0 + kkt(a, a));
      if (on_face) kkt(a, s) = kkt(s, a) = 1.0;
    }
    const RVector sol = kkt.fullPivLu().solve(rhs);
    RVector dir = RVector::Zero(k);
    for (Eigen::Index a = 0; a < s; ++a) dir(sup[static_cast<std::size_t>(a)]) = sol(a);
    if (!dir.allFinite() || g.dot(dir) <= 0) continue;
    double tmax = 1.0;
    for (Eigen::Index j = 0; j < k; ++j)
      if (dir(j) < 0) tmax = std::min(tmax, -x(j) / dir(j));
    if (!on_face && dir.sum() > 0) tmax = std::min(tmax, (1.0 - x.sum()) / dir.sum());
    double t = tmax;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      RVector cand = (x + t * dir).cwiseMax(0.0);
      if (t == tmax) {
        for (Eigen::Index j = 0; j < k; ++j)
          if (dir(j) < 0 && std::abs(x(j) + t * dir(j)) <= 1e-15) cand(j) = 0.0;
      }
      if (cand.sum() > 1.0) cand /= cand.sum();
      const double fc = mac_objective(unit, cand);
      if (fc >= fx + 1e-4 * t * g.dot(dir) || fc > fx) {
        x = cand;
        fx = fc;
        break;
      }
    }
  }
  out.iterations = it;
  if (!out.converged) {
    out.stationarity = residual(x, mac_gradient(unit, x));
    out.converged = out.stationarity <= tol * 10.0;
  }
  out.p = rp.budget * x;
  out.rates = mac_rates(rp, out.p);
  out.objective = mac_objective(rp, out.p);
  return out;
}

/// v_i = normalize((A_hat + sum_{k<i} p_k h_k h_k^H)^{-1} h_i).
inline std::vector<CVector> mmse_receivers(const ReducedProblem& rp, const RVector& p) {
  if ((p.array() < 0).any()) throw ContractError("mmse_receivers: negative power");
  const auto f = detail::mac_factors(rp, p);
  std::vector<CVector> v;
  for (std::size_t i = 0; i < rp.users(); ++i) {
    CVector d = f.llt[i].solve(rp.h_hat[i]);
    const double nrm = d.norm();
    if (nrm > 0) {
      v.push_back(d / nrm);
    } else {
      CVector e = CVector::Zero(rp.dim());
      if (rp.dim() > 0) e(0) = 1.0;
      v.push_back(e);
    }
  }
  return v;
}

struct BcBeams {
  RVector q;
  std::vector<CVector> w;       // sqrt(q_i) v_i
  std::vector<CMatrix> b_bar;   // w_i w_i^H
};

/// Downlink powers by back-substitution so each BC user gets its MAC rate; the BC encodes users
/// in sorted order, user i interfered by users k > i.
inline BcBeams mac_to_bc(const ReducedProblem& rp, const RVector& mac_rates, const std::vector<CVector>& v) {
  const std::size_t k = rp.users();
  if (static_cast<std::size_t>(mac_rates.size()) != k || v.size() != k) throw ContractError("mac_to_bc: size mismatch");
  BcBeams out;
  out.q = RVector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = k; i-- > 0;) {
    const double r = mac_rates(static_cast<Eigen::Index>(i));
    if (r <= 0) continue;
    const double gain = std::norm(rp.h_hat[i].dot(v[i]));
    if (!(gain > 0)) throw std::logic_error("mac_to_bc: receiver orthogonal to its channel with positive rate");
    double interference = 1.0;
    for (std::size_t m = i + 1; m < k; ++m)
      interference += out.q(static_cast<Eigen::Index>(m)) * std::norm(rp.h_hat[i].dot(v[m]));
    out.q(static_cast<Eigen::Index>(i)) = std::expm1(r * std::log(2.0)) / gain * interference;
  }
  for (std::size_t i = 0; i < k; ++i) {
    out.w.push_back(std::sqrt(out.q(static_cast<Eigen::Index>(i))) * v[i]);
    out.b_bar.push_back(outer(out.w.back()));
  }
  return out;
}

/// Representative optimum of max sum alpha_i r_i s.t. Tr(A sum S_i) <= P_A, lifted back to N x N.
struct ReducedBcSolution {
  std::vector<CMatrix> covariances;       // caller order
  std::vector<double> rates;              // caller order, unit noise
  std::vector<std::size_t> encoding_order;
  double objective = 0.0;
  MacPowers mac;
  bool converged = true;
};

inline ReducedBcSolution solve_reduced_bc(const RangeNullSplit& split, const CMatrix& a,
                                          const std::vector<CVector>& channels, const std::vector<double>& weights,
                                          double budget, double tol = 1e-10) {
  const ReducedProblem rp = reduce(split, a, channels, weights, budget);
  const Eigen::Index n = a.rows();
  ReducedBcSolution out;
  out.covariances.assign(channels.size(), CMatrix::Zero(n, n));
  out.rates.assign(channels.size(), 0.0);
  out.mac = solve_mac_wsr(rp, tol);
  out.converged = out.mac.converged;
  const auto v = mmse_receivers(rp, out.mac.p);
  const BcBeams beams = mac_to_bc(rp, out.mac.rates, v);
  for (std::size_t i = 0; i < rp.users(); ++i) {
    out.covariances[rp.order[i]] = hermitian_part(rp.u1 * beams.b_bar[i] * rp.u1.adjoint());
    out.rates[rp.order[i]] = out.mac.rates(static_cast<Eigen::Index>(i));
  }
  out.encoding_order = rp.order;
  out.encoding_order.insert(out.encoding_order.end(), rp.dropped.begin(), rp.dropped.end());
  out.objective = out.mac.objective;
  return out;
}

inline ReducedBcSolution solve_reduced_bc(const CMatrix& a, const std::vector<CVector>& channels,
                                          const std::vector<double>& weights, double budget, double tol = 1e-10,
                                          double rank_tol = kDefaultRankTol) {
  return solve_reduced_bc(range_null_split(a, rank_tol), a, channels, weights, budget, tol);
}

}  // namespace swipt

#endif  // SWIPT_DUALMAC_HPP
