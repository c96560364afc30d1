#include "swipt/ellipsoid.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace swipt;
using swipt::testing::random_vector;

namespace {

Scenario random_scenario(std::uint64_t seed, Eigen::Index n, std::size_t ki, std::size_t ke, double frac) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  PowerSettings pw;
  auto s = generate_scenario(cfg, {n, ki, ke}, pw);
  // targets as a fraction of the single-receiver maximum of the weakest receiver
  double weakest = INFINITY;
  for (const auto& g : s.eh_channels) weakest = std::min(weakest, g.squaredNorm());
  s.harvest_targets.assign(ke, frac * s.sum_power * weakest / static_cast<double>(ke));
  return s;
}

Scenario orthogonal_single(double frac) {
  Scenario s;
  s.n_tx = 3;
  CVector h = CVector::Zero(3), g = CVector::Zero(3);
  h << cplx(1e-3, 0), cplx(0, 2e-3), 0;
  g << 0, 0, cplx(0.02, 0.01);
  s.id_channels = {h};
  s.eh_channels = {g};
  s.harvest_targets = {frac * s.sum_power * g.squaredNorm()};
  s.weights = {1.0};
  return s;
}

}  // namespace

TEST(EllipsoidUpdate, TextbookStep) {
  for (int n = 2; n <= 5; ++n) {
    EllipsoidState st;
    st.center = RVector::Zero(n);
    st.shape = RMatrix::Identity(n, n);
    RVector a = RVector::Zero(n);
    a(0) = 1.0;
    const auto nx = ellipsoid_update(st, a);
    EXPECT_NEAR(nx.center(0), -1.0 / (n + 1), 1e-15);
    EXPECT_NEAR(nx.center.tail(n - 1).norm(), 0.0, 1e-15);
  }
}

TEST(EllipsoidUpdate, RepeatedCutsShrinkVolume) {
  EllipsoidState st;
  st.center = RVector::Zero(3);
  st.shape = RMatrix::Identity(3, 3);
  RVector a(3);
  a << 1.0, -0.5, 0.25;
  // volume is tracked through the factor; the shape itself becomes too ill-conditioned for det()
  double vol = 1.0;
  for (int k = 0; k < 100; ++k) {
    st = ellipsoid_update(st, a);
    const double nv = std::abs(st.factor.determinant());
    EXPECT_LT(nv, vol);
    vol = nv;
  }
  EXPECT_LT(vol, 1e-5);
  // the centre approaches the first cut hyperplane from the kept side
  EXPECT_LT(a.dot(st.center), 0.0);
}

TEST(EllipsoidUpdate, VolumeShrinkBoundAndSeparation) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int n = 2; n <= 6; ++n) {
    EllipsoidState st;
    st.center = RVector::Zero(n);
    st.shape = RMatrix::Identity(n, n);
    for (int k = 0; k < 50; ++k) {
      RVector a(n);
      for (int i = 0; i < n; ++i) a(i) = nd(rng);
      const RVector query = st.center;
      const double det = st.shape.determinant();
      st = ellipsoid_update(st, a);
      EXPECT_LE(st.shape.determinant(), det * std::exp(-1.0 / (n + 1)) * (1 + 1e-9));
      EXPECT_GT(a.dot(query - st.center), 0.0);
    }
  }
}

TEST(EllipsoidUpdate, Rejections) {
  EllipsoidState st;
  st.center = RVector::Zero(2);
  st.shape = RMatrix::Identity(2, 2);
  EXPECT_THROW(ellipsoid_update(st, RVector::Zero(2)), DegenerateEllipsoidError);
  EXPECT_THROW(ellipsoid_update(st, RVector::Ones(3)), ContractError);
  st.center = RVector::Zero(1);
  st.shape = RMatrix::Identity(1, 1);
  EXPECT_THROW(ellipsoid_update(st, RVector::Ones(1)), ContractError);
}

TEST(OracleCut, ZeroMultipliersHitNullspace) {
  const auto s = random_scenario(1, 4, 2, 2, 0.5);
  DualPoint lam{0.0, RVector::Zero(2)};
  EXPECT_EQ(oracle_cut(s, lam).cut.kind, CutKind::Nullspace);
}

TEST(OracleCut, LargeSumPowerMultiplierIsFeasible) {
  const auto s = random_scenario(2, 4, 2, 2, 0.5);
  DualPoint lam{1e6, RVector::Zero(2)};
  const auto r = oracle_cut(s, lam);
  ASSERT_EQ(r.cut.kind, CutKind::Objective);
  // full budget is used, so the power entry is ~0
  EXPECT_NEAR(r.cut.direction(0) / s.sum_power, 0.0, 1e-9);
}

TEST(OracleCut, PsdCutAlignsWithChannel) {
  auto s = random_scenario(3, 4, 1, 1, 0.5);
  const CVector& g = s.eh_channels[0];
  DualPoint lam{1.0, RVector::Constant(1, 2.0 / g.squaredNorm())};
  const auto r = oracle_cut(s, lam);
  ASSERT_EQ(r.cut.kind, CutKind::Psd);
  EXPECT_NEAR(std::abs(r.cut.context->dot(g)) / g.norm(), 1.0, 1e-12);
}

TEST(OracleCut, NegativeMultiplier) {
  const auto s = random_scenario(4, 3, 1, 2, 0.5);
  DualPoint lam{1.0, RVector::Zero(2)};
  lam.lam(1) = -1e-3;
  const auto r = oracle_cut(s, lam);
  EXPECT_EQ(r.cut.kind, CutKind::Nonnegativity);
  EXPECT_EQ(r.cut.direction(2), -1.0 * s.sum_power * s.eh_channels[1].squaredNorm());
}

TEST(MinimizeG, VanishingTargetGivesMrt) {
  std::mt19937_64 rng(5);
  auto s = orthogonal_single(1e-9);
  const CVector& h = s.id_channels[0];
  s.eh_channels[0] = random_vector(rng, 3) * 0.01;
  s.harvest_targets = {1e-9 * s.sum_power * s.eh_channels[0].squaredNorm()};
  const auto r = minimize_g(s);
  EXPECT_TRUE(r.converged);
  const double mrt = std::log2(1 + s.sum_power * h.squaredNorm() / s.noise_power);
  EXPECT_NEAR(r.g, mrt, 1e-6 * mrt);
}

TEST(MinimizeG, OrthogonalSingleReceiverClosedForm) {
  for (double frac : {0.1, 0.5, 0.9}) {
    const auto s = orthogonal_single(frac);
    const auto r = minimize_g(s);
    const CVector& h = s.id_channels[0];
    const CVector& g = s.eh_channels[0];
    const double want = std::log2(1 + (s.sum_power - s.harvest_targets[0] / g.squaredNorm()) * h.squaredNorm() / s.noise_power);
    EXPECT_NEAR(r.g, want, 1e-6 * want) << frac;
  }
}

TEST(MinimizeG, IncumbentNonincreasing) {
  const auto s = random_scenario(6, 4, 2, 3, 0.6);
  const auto r = minimize_g(s);
  double best = INFINITY;
  double last_best = INFINITY;
  for (const auto& e : r.trace) {
    if (e.g) best = std::min(best, *e.g);
    EXPECT_LE(best, last_best);
    last_best = best;
  }
  EXPECT_NEAR(best, r.g, 1e-12 * (1 + r.g));
}

TEST(DualFunction, HomogeneousOfDegreeZero) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ud(0, 1);
  const auto s = random_scenario(8, 4, 2, 2, 0.5);
  const auto f = normal_form(s);
  int tested = 0;
  while (tested < 10) {
    RVector mu(3);
    mu << 1.0, 0.6 * ud(rng), 0.6 * ud(rng);
    const DualPoint lam = from_normal(f, mu);
    const auto g0 = evaluate_g(s, lam);
    if (!g0) continue;
    ++tested;
    for (double c : {0.5, 2.0, 10.0}) {
      const auto gc = evaluate_g(s, DualPoint{c * lam.lam0, c * lam.lam});
      ASSERT_TRUE(gc.has_value());
      EXPECT_NEAR(*gc, *g0, 1e-8 * std::max(1.0, *g0));
    }
  }
}

TEST(DualFunction, SubgradientDirectionIsValid) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ud(0, 1);
  int tested = 0, seed = 10;
  while (tested < 50) {
    const auto s = random_scenario(static_cast<std::uint64_t>(seed++), 3, 2, 2, 0.5);
    const auto f = normal_form(s);
    for (int attempt = 0; attempt < 40 && tested < 50; ++attempt) {
      RVector m1(3), m2(3);
      m1 << 1.0, 0.7 * ud(rng), 0.7 * ud(rng);
      m2 << 1.0, 0.7 * ud(rng), 0.7 * ud(rng);
      const DualPoint l1 = from_normal(f, m1), l2 = from_normal(f, m2);
      const auto r2 = oracle_cut(s, l2);
      const auto g1 = evaluate_g(s, l1);
      if (r2.cut.kind != CutKind::Objective || !g1) continue;
      RVector x1(3), x2(3);
      x1 << l1.lam0, l1.lam;
      x2 << l2.lam0, l2.lam;
      if (r2.cut.direction.dot(x1 - x2) <= 0) continue;
      ++tested;
      EXPECT_GE(*g1, *r2.g - 1e-7);
    }
  }
}
