#ifndef SWIPT_SDP_HPP
#define SWIPT_SDP_HPP

// Small dense SDP solver over complex Hermitian blocks.
//
// Hermitian blocks of size > 1 are mapped to real symmetric blocks of twice the size, 1x1 blocks
// and inequality slacks become nonnegative scalars. The resulting real conic program is solved with
// a homogeneous self-dual primal-dual interior-point method (HKM direction, Mehrotra
// predictor-corrector), which gives either an optimal pair or an infeasibility certificate.

#include "swipt/matkernel.hpp"
#include "swipt/model.hpp"

#include <optional>
#include <utility>

namespace swipt {

enum class Relation { LessEqual, GreaterEqual, Equal };
enum class Sense { Minimize, Maximize };
enum class SdpStatus { Optimal, Infeasible, Unbounded, MaxIter };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unbounded: return "unbounded";
    case SdpStatus::MaxIter: return "max-iter";
  }
  return "?";
}

/// sum over terms of Re Tr(C X_block).
struct LinearFunctional {
  std::vector<std::pair<std::size_t, CMatrix>> terms;

  LinearFunctional& add(std::size_t block, CMatrix c) {
    terms.emplace_back(block, std::move(c));
    return *this;
  }
  double evaluate(const std::vector<CMatrix>& x) const {
    double acc = 0.0;
    for (const auto& [b, c] : terms) acc += trace_product(c, x[b]);
    return acc;
  }
};

struct SdpConstraint {
  LinearFunctional lhs;
  Relation rel = Relation::Equal;
  double bound = 0.0;
};

struct SdpProblem {
  std::vector<Eigen::Index> blocks;  // Hermitian block dimensions
  Sense sense = Sense::Minimize;
  LinearFunctional objective;
  std::vector<SdpConstraint> constraints;

  std::size_t add_block(Eigen::Index dim) {
    blocks.push_back(dim);
    return blocks.size() - 1;
  }
  void add_constraint(LinearFunctional lhs, Relation rel, double bound) {
    constraints.push_back({std::move(lhs), rel, bound});
  }
};

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIter;
  std::vector<CMatrix> blocks;
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // max constraint violation, original units
  double min_eigenvalue = 0.0;   // smallest eigenvalue over all blocks
  double accuracy = 0.0;         // max of scaled primal/dual residual and relative gap
  std::vector<double> duals;     // one multiplier per constraint, sign convention of the real form
  int iterations = 0;
};

struct SdpOptions {
  double tol = 1e-9;
  int max_iter = 150;
};

namespace detail {

/// Element of the real cone: symmetric blocks plus a nonnegative orthant.
struct ConeVec {
  std::vector<RMatrix> mats;
  RVector lp;

  double dot(const ConeVec& o) const {
    double acc = lp.dot(o.lp);
    for (std::size_t k = 0; k < mats.size(); ++k) acc += (mats[k].array() * o.mats[k].array()).sum();
    return acc;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  ConeVec& axpy(double a, const ConeVec& o) {
    lp += a * o.lp;
    for (std::size_t k = 0; k < mats.size(); ++k) mats[k] += a * o.mats[k];
    return *this;
  }
  ConeVec scaled(double a) const {
    ConeVec out = *this;
    out.lp *= a;
    for (auto& m : out.mats) m *= a;
    return out;
  }
};

struct RealRow {
  std::vector<std::pair<std::size_t, RMatrix>> mats;
  RVector lp;
};

struct RealSdp {
  std::vector<Eigen::Index> dims;
  Eigen::Index n_lp = 0;
  std::vector<RealRow> rows;
  RVector b;
  ConeVec c;

  ConeVec zero() const {
    ConeVec z;
    for (auto d : dims) z.mats.push_back(RMatrix::Zero(d, d));
    z.lp = RVector::Zero(n_lp);
    return z;
  }
  ConeVec identity() const {
    ConeVec z;
    for (auto d : dims) z.mats.push_back(RMatrix::Identity(d, d));
    z.lp = RVector::Ones(n_lp);
    return z;
  }
  double degree() const {
    double nu = static_cast<double>(n_lp);
    for (auto d : dims) nu += static_cast<double>(d);
    return nu;
  }
  RVector apply(const ConeVec& x) const {
    RVector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double acc = rows[i].lp.dot(x.lp);
      for (const auto& [k, a] : rows[i].mats) acc += (a.array() * x.mats[k].array()).sum();
      out(static_cast<Eigen::Index>(i)) = acc;
    }
    return out;
  }
  ConeVec apply_t(const RVector& y) const {
    ConeVec out = zero();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double yi = y(static_cast<Eigen::Index>(i));
      out.lp += yi * rows[i].lp;
      for (const auto& [k, a] : rows[i].mats) out.mats[k] += yi * a;
    }
    return out;
  }
};

inline RMatrix sym(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest alpha <= cap with x + alpha dx in the cone.
inline double max_step(const ConeVec& x, const ConeVec& dx, double cap) {
  double alpha = cap;
  for (Eigen::Index k = 0; k < x.lp.size(); ++k)
    if (dx.lp(k) < 0) alpha = std::min(alpha, -x.lp(k) / dx.lp(k));
  for (std::size_t k = 0; k < x.mats.size(); ++k) {
    Eigen::LLT<RMatrix> llt(x.mats[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    const RMatrix linv_dx = llt.matrixL().solve(dx.mats[k]);
    const RMatrix w = llt.matrixL().solve(linv_dx.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<RMatrix>(sym(w), Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

struct HsdPoint {
  ConeVec x, s;
  RVector y;
  double tau = 1.0, kappa = 1.0;
};

struct HsdResult {
  HsdPoint pt;
  SdpStatus status = SdpStatus::MaxIter;
  int iterations = 0;
  double accuracy = INFINITY;
};

inline HsdResult solve_hsd(const RealSdp& p, const SdpOptions& opt) {
  const auto m = static_cast<Eigen::Index>(p.rows.size());
  const double nu = p.degree();
  HsdPoint z;
  z.x = p.identity();
  z.s = p.identity();
  z.y = RVector::Zero(m);
  HsdResult res;
  const double bnorm = p.b.norm(), cnorm = p.c.norm();
  HsdPoint best = z;
  double best_acc = INFINITY;
  int stall = 0;

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    // residuals
    const RVector ax = p.apply(z.x);
    const ConeVec aty = p.apply_t(z.y);
    const RVector rp = ax - z.tau * p.b;
    ConeVec rd = aty;
    rd.axpy(1.0, z.s).axpy(-z.tau, p.c);
    const double ctx = p.c.dot(z.x), bty = p.b.dot(z.y);
    const double rg = ctx - bty + z.kappa;
    const double mu = (z.x.dot(z.s) + z.tau * z.kappa) / (nu + 1.0);

    const double pres = rp.norm() / z.tau / (1.0 + bnorm);
    const double dres = rd.norm() / z.tau / (1.0 + cnorm);
    const double gap = std::abs(ctx - bty) / z.tau / (1.0 + std::abs(ctx / z.tau) + std::abs(bty / z.tau));
    const double acc = std::max({pres, dres, gap});
    if (acc < best_acc) {
      best_acc = acc;
      best = z;
    }
    if (acc <= opt.tol) {
      res.status = SdpStatus::Optimal;
      res.pt = z;
      res.accuracy = acc;
      return res;
    }
    // infeasibility certificates
    if (bty > 0) {
      ConeVec cert = aty;
      cert.axpy(1.0, z.s);
      if (cert.norm() <= opt.tol * bty * 10.0 && z.tau < 1e-3 * z.kappa) {
        res.status = SdpStatus::Infeasible;
        res.pt = z;
        res.accuracy = acc;
        return res;
      }
    }
    if (ctx < 0) {
      if (ax.norm() <= opt.tol * (-ctx) * 10.0 && z.tau < 1e-3 * z.kappa) {
        res.status = SdpStatus::Unbounded;
        res.pt = z;
        res.accuracy = acc;
        return res;
      }
    }

    // scaling data
    std::vector<RMatrix> sinv(p.dims.size());
    for (std::size_t k = 0; k < p.dims.size(); ++k) sinv[k] = sym(z.s.mats[k].llt().solve(RMatrix::Identity(p.dims[k], p.dims[k])));
    const RVector xs = z.x.lp.cwiseQuotient(z.s.lp);
    auto op_x = [&](const ConeVec& v) {  // sym(X V S^{-1})
      ConeVec out = v;
      for (std::size_t k = 0; k < p.dims.size(); ++k) out.mats[k] = sym(z.x.mats[k] * v.mats[k] * sinv[k]);
      out.lp = xs.cwiseProduct(v.lp);
      return out;
    };
    RMatrix schur = RMatrix::Zero(m, m);
    {
      // per-block contributions
      for (std::size_t k = 0; k < p.dims.size(); ++k) {
        std::vector<std::pair<Eigen::Index, const RMatrix*>> touch;
        for (std::size_t i = 0; i < p.rows.size(); ++i)
          for (const auto& [blk, a] : p.rows[i].mats)
            if (blk == k) touch.emplace_back(static_cast<Eigen::Index>(i), &a);
        for (std::size_t jj = 0; jj < touch.size(); ++jj) {
          const RMatrix g = z.x.mats[k] * (*touch[jj].second) * sinv[k];
          for (std::size_t ii = 0; ii <= jj; ++ii) {
            const double v = (touch[ii].second->array() * g.array()).sum();
            schur(touch[ii].first, touch[jj].first) += v;
            if (ii != jj) schur(touch[jj].first, touch[ii].first) += v;
          }
        }
      }
      if (p.n_lp > 0) {
        RMatrix alp(m, p.n_lp);
        for (Eigen::Index i = 0; i < m; ++i) alp.row(i) = p.rows[static_cast<std::size_t>(i)].lp.transpose();
        schur += alp * xs.asDiagonal() * alp.transpose();
      }
      schur = 0.5 * (schur + schur.transpose());
      const double reg = 1e-14 * std::max(1.0, m > 0 ? schur.diagonal().cwiseAbs().maxCoeff() : 0.0);
      schur.diagonal().array() += reg;
    }
    Eigen::LDLT<RMatrix> ldlt(schur);
    const ConeVec xc = op_x(p.c);
    const RVector u = p.apply(xc);
    const double w = p.c.dot(xc);
    const RVector q = ldlt.solve(u + p.b);
    const ConeVec xrd = op_x(rd);
    const RVector axrd = p.apply(xrd);
    const double cxrd = p.c.dot(xrd);

    auto direction = [&](double eta, const ConeVec& rc, double rtk) {
      HsdPoint d;
      const RVector rhs = -eta * rp - p.apply(rc) - eta * axrd;
      const RVector pv = ldlt.solve(rhs);
      const double num = -eta * rg - p.c.dot(rc) - eta * cxrd - (u - p.b).dot(pv) - rtk / z.tau;
      const double den = (u - p.b).dot(q) - w - z.kappa / z.tau;
      d.tau = num / den;
      d.y = pv + d.tau * q;
      d.s = rd.scaled(-eta);
      d.s.axpy(-1.0, p.apply_t(d.y)).axpy(d.tau, p.c);
      d.x = rc;
      d.x.axpy(-1.0, op_x(d.s));
      d.kappa = (rtk - z.kappa * d.tau) / z.tau;
      return d;
    };
    auto step_len = [&](const HsdPoint& d) {
      double a = max_step(z.x, d.x, 1e6);
      a = std::min(a, max_step(z.s, d.s, 1e6));
      if (d.tau < 0) a = std::min(a, -z.tau / d.tau);
      if (d.kappa < 0) a = std::min(a, -z.kappa / d.kappa);
      return a;
    };

    // predictor
    ConeVec rc_aff = z.x.scaled(-1.0);
    const HsdPoint daff = direction(1.0, rc_aff, -z.tau * z.kappa);
    const double a_aff = std::min(1.0, step_len(daff));
    ConeVec xa = z.x, sa = z.s;
    xa.axpy(a_aff, daff.x);
    sa.axpy(a_aff, daff.s);
    const double mu_aff = (xa.dot(sa) + (z.tau + a_aff * daff.tau) * (z.kappa + a_aff * daff.kappa)) / (nu + 1.0);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // corrector
    ConeVec rc = z.x.scaled(-1.0);
    for (std::size_t k = 0; k < p.dims.size(); ++k)
      rc.mats[k] += sigma * mu * sinv[k] - sym(daff.x.mats[k] * daff.s.mats[k] * sinv[k]);
    rc.lp += (sigma * mu * RVector::Ones(p.n_lp) - daff.x.lp.cwiseProduct(daff.s.lp)).cwiseQuotient(z.s.lp);
    const HsdPoint d = direction(1.0 - sigma, rc, sigma * mu - z.tau * z.kappa - daff.tau * daff.kappa);
    const double amax = step_len(d);
    const double alpha = std::min(1.0, 0.98 * amax);
    if (!(alpha > 1e-12) || !std::isfinite(d.tau)) {
      if (++stall > 3) break;
      continue;
    }
    z.x.axpy(alpha, d.x);
    z.s.axpy(alpha, d.s);
    z.y += alpha * d.y;
    z.tau += alpha * d.tau;
    z.kappa += alpha * d.kappa;
    for (auto& mk : z.x.mats) mk = sym(mk);
    for (auto& mk : z.s.mats) mk = sym(mk);
  }
  res.pt = best;
  res.accuracy = best_acc;
  res.status = SdpStatus::MaxIter;
  return res;
}

}  // namespace detail

inline void validate(const SdpProblem& prob) {
  auto check = [&](const LinearFunctional& f) {
    for (const auto& [b, c] : f.terms) {
      if (b >= prob.blocks.size()) throw ContractError("sdp: block index out of range");
      if (c.rows() != prob.blocks[b] || c.cols() != prob.blocks[b]) throw ContractError("sdp: coefficient dimension mismatch");
      if (!is_hermitian(c, 1e-10)) throw ContractError("sdp: coefficient matrix is not Hermitian");
      if (!c.allFinite()) throw ContractError("sdp: non-finite coefficient");
    }
  };
  for (auto d : prob.blocks)
    if (d < 1) throw ContractError("sdp: block dimension must be positive");
  check(prob.objective);
  for (const auto& c : prob.constraints) {
    check(c.lhs);
    if (!std::isfinite(c.bound)) throw ContractError("sdp: non-finite bound");
  }
}

inline SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opt = {}) {
  validate(prob);
  using detail::RealRow;
  detail::RealSdp rs;
  // block layout: blocks of dim 1 become LP scalars, others real symmetric of twice the size
  std::vector<std::optional<std::size_t>> mat_index(prob.blocks.size());
  std::vector<Eigen::Index> lp_index(prob.blocks.size(), -1);
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    if (prob.blocks[b] == 1) {
      lp_index[b] = rs.n_lp++;
    } else {
      mat_index[b] = rs.dims.size();
      rs.dims.push_back(2 * prob.blocks[b]);
    }
  }
  std::vector<Eigen::Index> slack_index(prob.constraints.size(), -1);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i)
    if (prob.constraints[i].rel != Relation::Equal) slack_index[i] = rs.n_lp++;

  auto to_real = [&](const LinearFunctional& f, RealRow& row) {
    row.lp = RVector::Zero(rs.n_lp);
    for (const auto& [b, c] : f.terms) {
      if (lp_index[b] >= 0) {
        row.lp(lp_index[b]) += c(0, 0).real();
        continue;
      }
      const RMatrix e = 0.5 * complex_to_real_embedding(hermitian_part(c));
      bool merged = false;
      for (auto& [k, a] : row.mats)
        if (k == *mat_index[b]) a += e, merged = true;
      if (!merged) row.mats.emplace_back(*mat_index[b], e);
    }
  };

  const double sign = prob.sense == Sense::Maximize ? -1.0 : 1.0;
  {
    RealRow obj;
    to_real(prob.objective, obj);
    rs.c = rs.zero();
    rs.c.lp = sign * obj.lp;
    for (auto& [k, a] : obj.mats) rs.c.mats[k] += sign * a;
  }
  const double cscale = std::max(1.0, rs.c.norm());
  rs.c = rs.c.scaled(1.0 / cscale);

  std::vector<double> row_scale(prob.constraints.size(), 1.0);
  rs.b.resize(static_cast<Eigen::Index>(prob.constraints.size()));
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    RealRow row;
    to_real(prob.constraints[i].lhs, row);
    if (slack_index[i] >= 0) row.lp(slack_index[i]) = prob.constraints[i].rel == Relation::LessEqual ? 1.0 : -1.0;
    double nrm2 = row.lp.squaredNorm();
    for (const auto& [k, a] : row.mats) nrm2 += a.squaredNorm();
    const double nrm = std::sqrt(nrm2);
    if (!(nrm > 0)) throw ContractError("sdp: constraint with an all-zero left-hand side");
    row_scale[i] = 1.0 / nrm;
    row.lp *= row_scale[i];
    for (auto& [k, a] : row.mats) a *= row_scale[i];
    rs.b(static_cast<Eigen::Index>(i)) = prob.constraints[i].bound * row_scale[i];
    rs.rows.push_back(std::move(row));
  }

  const auto hsd = detail::solve_hsd(rs, opt);
  SdpSolution out;
  out.status = hsd.status;
  out.iterations = hsd.iterations;
  out.accuracy = hsd.accuracy;
  const double tau = hsd.pt.tau;
  const double inv = out.status == SdpStatus::Optimal || out.status == SdpStatus::MaxIter ? 1.0 / tau : 1.0;
  for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
    if (lp_index[b] >= 0) {
      CMatrix x(1, 1);
      x(0, 0) = inv * std::max(hsd.pt.x.lp(lp_index[b]), 0.0);
      out.blocks.push_back(x);
    } else {
      out.blocks.push_back(inv * real_to_complex_projection(hsd.pt.x.mats[*mat_index[b]]));
    }
  }
  out.objective = prob.objective.evaluate(out.blocks);
  out.dual_objective = sign * cscale * rs.b.dot(hsd.pt.y) * inv;
  for (std::size_t i = 0; i < prob.constraints.size(); ++i)
    out.duals.push_back(hsd.pt.y(static_cast<Eigen::Index>(i)) * inv * row_scale[i] * cscale);
  double worst = 0.0;
  for (const auto& c : prob.constraints) {
    const double v = c.lhs.evaluate(out.blocks) - c.bound;
    const double viol = c.rel == Relation::Equal ? std::abs(v) : c.rel == Relation::LessEqual ? std::max(v, 0.0) : std::max(-v, 0.0);
    worst = std::max(worst, viol);
  }
  out.primal_residual = worst;
  double lmin = INFINITY;
  for (const auto& x : out.blocks) lmin = std::min(lmin, min_eigenvalue(x));
  out.min_eigenvalue = out.blocks.empty() ? 0.0 : lmin;
  return out;
}


// ---------------------------------------------------------------------------
// Problem builders. All work in the normal form: covariances are S / P_sum.

/// maximize t s.t. Tr(S d_j d_j^H) >= t * demand_j / max(demand), Tr(S) <= budget, S >= 0.
/// Block 0 is S, block 1 the scalar t; the achieved ratio is t* / max(demand).
inline SdpProblem build_max_ratio(Eigen::Index n, const std::vector<CVector>& dirs, const std::vector<double>& demand,
                                  double budget) {
  if (dirs.size() != demand.size() || dirs.empty()) throw ContractError("build_max_ratio: size mismatch");
  const double top = *std::max_element(demand.begin(), demand.end());
  if (!(top > 0)) throw ContractError("build_max_ratio: need a positive demand");
  SdpProblem p;
  const auto s = p.add_block(n);
  const auto t = p.add_block(1);
  p.sense = Sense::Maximize;
  p.objective.add(t, CMatrix::Identity(1, 1));
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    LinearFunctional f;
    f.add(s, outer(dirs[j])).add(t, CMatrix::Constant(1, 1, -demand[j] / top));
    p.add_constraint(std::move(f), Relation::GreaterEqual, 0.0);
  }
  p.add_constraint(LinearFunctional{}.add(s, CMatrix::Identity(n, n)), Relation::LessEqual, budget);
  return p;
}

/// Feasibility of the harvest constraints under the sum-power budget, as a max-min margin.
inline SdpProblem build_feasibility_p1(const Scenario& sc) {
  const auto f = normal_form(sc);
  return build_max_ratio(f.n, f.eh_dirs, f.targets, 1.0);
}

/// maximize e s.t. Tr(S G_j) gain_j / max gain >= e, Tr(S) <= 1; E_max = zeta P_sum max_gain e*.
inline SdpProblem build_emax(const Scenario& sc) {
  const auto f = normal_form(sc);
  const double top = *std::max_element(f.eh_gain.begin(), f.eh_gain.end());
  SdpProblem p;
  const auto s = p.add_block(f.n);
  const auto e = p.add_block(1);
  p.sense = Sense::Maximize;
  p.objective.add(e, CMatrix::Identity(1, 1));
  for (std::size_t j = 0; j < f.eh_dirs.size(); ++j) {
    LinearFunctional lf;
    lf.add(s, (f.eh_gain[j] / top) * outer(f.eh_dirs[j])).add(e, CMatrix::Constant(1, 1, -1.0));
    p.add_constraint(std::move(lf), Relation::GreaterEqual, 0.0);
  }
  p.add_constraint(LinearFunctional{}.add(s, CMatrix::Identity(f.n, f.n)), Relation::LessEqual, 1.0);
  return p;
}

/// minimize Tr(S) s.t. Tr(S G_j) >= demand_j (normal form).
inline SdpProblem build_min_power(Eigen::Index n, const std::vector<CVector>& dirs, const std::vector<double>& demand) {
  SdpProblem p;
  const auto s = p.add_block(n);
  p.sense = Sense::Minimize;
  p.objective.add(s, CMatrix::Identity(n, n));
  for (std::size_t j = 0; j < dirs.size(); ++j)
    p.add_constraint(LinearFunctional{}.add(s, outer(dirs[j])), Relation::GreaterEqual, demand[j]);
  return p;
}

struct FeasibilityResult {
  bool feasible = false;
  double margin = 0.0;   // t* - 1, where t* is the largest common scaling of all targets
  CMatrix witness;       // energy covariance in Watts reaching t* E_j
  SdpSolution sdp;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, FeasibilityResult cert)
      : std::runtime_error(what), certificate(std::move(cert)) {}
  FeasibilityResult certificate;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline FeasibilityResult check_feasibility(const Scenario& sc, const SdpOptions& opt = {}) {
  const auto f = normal_form(sc);
  FeasibilityResult r;
  r.sdp = solve_sdp(build_max_ratio(f.n, f.eh_dirs, f.targets, 1.0), opt);
  if (r.sdp.status != SdpStatus::Optimal && r.sdp.accuracy > 1e-6)
    throw SolverError(std::string("feasibility SDP failed: ") + to_string(r.sdp.status));
  const double top = *std::max_element(f.targets.begin(), f.targets.end());
  const double t = r.sdp.blocks[1](0, 0).real() / top;
  r.margin = t - 1.0;
  r.feasible = t >= 1.0 - 1e-9;
  r.witness = sc.sum_power * r.sdp.blocks[0];
  return r;
}

struct EmaxResult {
  double emax = 0.0;  // Watts, efficiency applied
  CMatrix covariance; // Watts
  SdpSolution sdp;
};

inline EmaxResult compute_emax(const Scenario& sc, const SdpOptions& opt = {}) {
  const auto f = normal_form(sc);
  const double top = *std::max_element(f.eh_gain.begin(), f.eh_gain.end());
  EmaxResult r;
  r.sdp = solve_sdp(build_emax(sc), opt);
  if (r.sdp.status != SdpStatus::Optimal && r.sdp.accuracy > 1e-6)
    throw SolverError(std::string("E_max SDP failed: ") + to_string(r.sdp.status));
  r.emax = sc.harvest_efficiency * sc.sum_power * top * r.sdp.blocks[1](0, 0).real();
  r.covariance = sc.sum_power * r.sdp.blocks[0];
  return r;
}

// ---------------------------------------------------------------------------
// Covariance expansion (primal recovery when the representative solution misses a harvest target)

enum class P4Mode {
  Exact,     // minimise sum Tr(S_i) with the pinned blocks fixed at pin_scale * B_i
  MaxScale,  // largest c such that pinning c * B_i still admits a feasible expansion
};

/// Each S_i is parametrised on span(W_i) + span(U2), where W_i spans the range of B_i:
/// S_i = V_i Y_i V_i^H with the leading block of Y_i pinned to W_i^H B_i W_i. Together with
/// S_E = U2 E U2^H this is the same feasible set as pinning U1^H S_i U1 = U1^H B_i U1 on full
/// matrices, but it has a strictly feasible interior.
struct P4Layout {
  Eigen::Index n = 0;
  std::vector<std::optional<std::size_t>> user_block;
  std::vector<CMatrix> bases;    // V_i
  std::vector<CMatrix> pinned;   // W_i^H B_i W_i (normal form, before pin_scale)
  std::optional<std::size_t> energy_block;
  std::optional<std::size_t> scale_block;  // MaxScale only
  CMatrix u2;
  double pin_scale = 1.0;
  double sum_power = 1.0;        // physical scale of the normal form
};

struct P4Problem {
  SdpProblem sdp;
  P4Layout layout;
};

/// info holds the representative covariances B_i (Watts, range inside span(U1)); u2 spans the null
/// space of A* and must be orthogonal to every ID channel with positive weight.
inline P4Problem build_p4(const Scenario& sc, const CMatrix& u2, const std::vector<CMatrix>& info,
                          P4Mode mode = P4Mode::Exact, double pin_scale = 1.0, double harvest_margin = 1e-9) {
  const auto f = normal_form(sc);
  if (info.size() != sc.num_id()) throw ContractError("build_p4: one covariance per ID receiver required");
  if (u2.rows() != f.n) throw ContractError("build_p4: null basis dimension mismatch");
  P4Problem out;
  auto& L = out.layout;
  L.n = f.n;
  L.u2 = u2;
  L.sum_power = sc.sum_power;
  L.pin_scale = mode == P4Mode::Exact ? pin_scale : 1.0;
  const Eigen::Index d = u2.cols();
  double scale = 0.0;
  for (const auto& b : info) scale = std::max(scale, trace_real(b) / sc.sum_power);
  for (const auto& b : info) {
    const CMatrix bn = hermitian_part(b / sc.sum_power);
    const EigenPairs ep = hermitian_eig(bn);
    Eigen::Index r = 0;
    while (r < ep.values.size() && ep.values(r) > 1e-12 * std::max(scale, 1e-300)) ++r;
    if (r == 0) {
      L.user_block.emplace_back(std::nullopt);
      L.bases.emplace_back(f.n, 0);
      L.pinned.emplace_back(0, 0);
      continue;
    }
    CMatrix v(f.n, r + d);
    v.leftCols(r) = ep.vectors.leftCols(r);
    if (d > 0) v.rightCols(d) = u2;
    L.user_block.emplace_back(out.sdp.add_block(r + d));
    L.bases.push_back(v);
    L.pinned.push_back(ep.values.head(r).cast<cplx>().asDiagonal());
  }
  if (d > 0) L.energy_block = out.sdp.add_block(d);
  if (mode == P4Mode::MaxScale) L.scale_block = out.sdp.add_block(1);

  auto& p = out.sdp;
  LinearFunctional power;
  if (mode == P4Mode::MaxScale) {
    p.sense = Sense::Maximize;
    p.objective.add(*L.scale_block, CMatrix::Identity(1, 1));
  } else {
    p.sense = Sense::Minimize;
  }
  for (std::size_t i = 0; i < info.size(); ++i) {
    if (!L.user_block[i]) continue;
    const auto blk = *L.user_block[i];
    const Eigen::Index dim = L.bases[i].cols();
    if (mode == P4Mode::Exact) p.objective.add(blk, CMatrix::Identity(dim, dim));
    power.add(blk, CMatrix::Identity(dim, dim));
    // pin the leading block entry by entry
    const Eigen::Index r = L.pinned[i].rows();
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = a; b < r; ++b) {
        CMatrix re = CMatrix::Zero(dim, dim);
        re(a, b) += 0.5;
        re(b, a) += 0.5;
        const cplx target = L.pinned[i](a, b);
        LinearFunctional lre;
        lre.add(blk, re);
        if (mode == P4Mode::MaxScale) {
          lre.add(*L.scale_block, CMatrix::Constant(1, 1, -target.real()));
          p.add_constraint(std::move(lre), Relation::Equal, 0.0);
        } else {
          p.add_constraint(std::move(lre), Relation::Equal, pin_scale * target.real());
        }
        if (a != b) {
          CMatrix im = CMatrix::Zero(dim, dim);
          im(a, b) = cplx(0, 0.5);
          im(b, a) = cplx(0, -0.5);
          LinearFunctional lim;
          lim.add(blk, im);
          if (mode == P4Mode::MaxScale) {
            lim.add(*L.scale_block, CMatrix::Constant(1, 1, -target.imag()));
            p.add_constraint(std::move(lim), Relation::Equal, 0.0);
          } else {
            p.add_constraint(std::move(lim), Relation::Equal, pin_scale * target.imag());
          }
        }
      }
    }
  }
  if (L.energy_block) power.add(*L.energy_block, CMatrix::Identity(d, d));
  if (power.terms.empty()) power.add(0, CMatrix::Zero(p.blocks[0], p.blocks[0]));
  p.add_constraint(power, Relation::LessEqual, 1.0);
  for (std::size_t j = 0; j < f.eh_dirs.size(); ++j) {
    LinearFunctional h;
    for (std::size_t i = 0; i < info.size(); ++i) {
      if (!L.user_block[i]) continue;
      const CVector proj = L.bases[i].adjoint() * f.eh_dirs[j];
      h.add(*L.user_block[i], outer(proj));
    }
    if (L.energy_block) h.add(*L.energy_block, outer(u2.adjoint() * f.eh_dirs[j]));
    if (h.terms.empty()) h.add(0, CMatrix::Zero(p.blocks[0], p.blocks[0]));
    p.add_constraint(std::move(h), Relation::GreaterEqual, f.targets[j] * (1.0 + harvest_margin));
  }
  return out;
}

/// Covariances from a solved P4, in Watts. The solver meets the pins only to its own accuracy, so the
/// pinned blocks are restored exactly. Preferred repair: keep C_i and raise D_i by the least PSD amount the
/// Schur condition needs, taking the same amount out of the energy block (both live on U2, so harvest and
/// power are unchanged). If the energy block cannot absorb it, rescale C_i by a congruence instead.
inline std::pair<std::vector<CMatrix>, CMatrix> extract_p4(const P4Layout& L, const SdpSolution& sol) {
  const Eigen::Index d = L.u2.cols();
  std::vector<CMatrix> ys;
  for (std::size_t i = 0; i < L.user_block.size(); ++i)
    ys.push_back(L.user_block[i] ? CMatrix(hermitian_part(sol.blocks[*L.user_block[i]])) : CMatrix());
  CMatrix e = L.energy_block ? CMatrix(hermitian_part(sol.blocks[*L.energy_block])) : CMatrix::Zero(d, d);

  auto assemble = [&](const std::vector<CMatrix>& blocks, const CMatrix& energy) {
    std::vector<CMatrix> info;
    for (std::size_t i = 0; i < blocks.size(); ++i)
      info.push_back(blocks[i].size() == 0 ? CMatrix(CMatrix::Zero(L.n, L.n))
                                           : CMatrix(L.sum_power * hermitian_part(L.bases[i] * blocks[i] * L.bases[i].adjoint())));
    return std::pair{info, CMatrix(L.sum_power * hermitian_part(L.u2 * energy * L.u2.adjoint()))};
  };

  // shift repair
  {
    std::vector<CMatrix> blocks = ys;
    CMatrix energy = e;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].size() == 0) continue;
      const CMatrix pin = L.pin_scale * L.pinned[i];
      const Eigen::Index r = pin.rows();
      blocks[i].topLeftCorner(r, r) = pin;
      if (blocks[i].rows() == r) continue;
      const CMatrix c = blocks[i].topRightCorner(r, d);
      const CMatrix need = hermitian_part(c.adjoint() * pin.ldlt().solve(c)) - hermitian_part(blocks[i].bottomRightCorner(d, d));
      const EigenPairs ep = hermitian_eig(need);
      const CMatrix delta = ep.vectors * ep.values.cwiseMax(0.0).cast<cplx>().asDiagonal() * ep.vectors.adjoint();
      blocks[i].bottomRightCorner(d, d) += delta;
      energy -= delta;
    }
    energy = hermitian_part(energy);
    const double floor = d > 0 ? hermitian_eig(energy).values.minCoeff() : 0.0;
    if (d == 0 || floor >= -1e-14 * std::max(1.0, energy.trace().real())) {
      if (d > 0) {
        const EigenPairs ep = hermitian_eig(energy);
        energy = ep.vectors * ep.values.cwiseMax(0.0).cast<cplx>().asDiagonal() * ep.vectors.adjoint();
      }
      return assemble(blocks, energy);
    }
  }

  // congruence repair
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (ys[i].size() == 0) continue;
    CMatrix& y = ys[i];
    const Eigen::Index r = L.pinned[i].rows();
    if (d > 0) {
      const CMatrix got = hermitian_part(y.topLeftCorner(r, r));
      const EigenPairs eg = hermitian_eig(got), ew = hermitian_eig(L.pin_scale * L.pinned[i]);
      auto msqrt = [](const EigenPairs& ev, bool inverse) {
        RVector v = ev.values.cwiseMax(1e-300).cwiseSqrt();
        if (inverse) v = v.cwiseInverse();
        return CMatrix(ev.vectors * v.cast<cplx>().asDiagonal() * ev.vectors.adjoint());
      };
      const CMatrix t = msqrt(ew, false) * msqrt(eg, true);
      const CMatrix c = y.topRightCorner(r, d);
      y.topRightCorner(r, d) = t * c;
      y.bottomLeftCorner(d, r) = (t * c).adjoint();
    }
    y.topLeftCorner(r, r) = L.pin_scale * L.pinned[i];
  }
  return assemble(ys, e);
}

}  // namespace swipt

#endif  // SWIPT_SDP_HPP
