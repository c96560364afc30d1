// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "swipt/cli.hpp"

using namespace swipt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v, int digits = 3) { return cli::fmt_short(v, digits); }

// ---------------------------------------------------------------------------
// bookkeeping shared by all criteria

struct Ledger {
  double slowest_solve = 0.0;  // seconds, over every solve with N <= 8, K_I <= 3, K_E <= 4
  std::string slowest_what;
  int energy_checks = 0;       // optimal solves with a nonzero energy signal
  double worst_orthogonality = 0.0;
  std::string worst_orthogonality_what;
};
Ledger ledger;

SolveReport timed_solve(const Scenario& s, Algorithm a, const std::string& what) {
  const auto t0 = Clock::now();
  SolveReport r = solve(s, a);
  const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
  if (s.n_tx <= 8 && s.num_id() <= 3 && s.num_eh() <= 4 && dt > ledger.slowest_solve) {
    ledger.slowest_solve = dt;
    ledger.slowest_what = what + " " + to_string(a);
  }
  if (a == Algorithm::Optimal && trace_real(r.solution.energy_covariance) > 1e-8 * s.sum_power) {
    ++ledger.energy_checks;
    if (r.classification.orthogonality > ledger.worst_orthogonality) {
      ledger.worst_orthogonality = r.classification.orthogonality;
      ledger.worst_orthogonality_what = what;
    }
  }
  return r;
}

Scenario generated(std::uint64_t seed, Eigen::Index n, std::size_t ki, std::size_t ke, double frac,
                   std::vector<double> weights = {1.0}) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  PowerSettings pw;
  pw.weights = std::move(weights);
  auto s = generate_scenario(cfg, {n, ki, ke}, pw);
  s.harvest_targets.assign(ke, frac * compute_emax(s).emax);
  return s;
}

Scenario correlated(const RMatrix& rho, Eigen::Index n, std::uint64_t seed, double frac,
                    std::vector<double> weights = {1.0}) {
  CorrelationTarget ct;
  ct.rho = rho;
  ct.n_tx = n;
  ct.seed = seed;
  ct.id_norms = {std::sqrt(1e-7)};
  ct.eh_norms = {std::sqrt(1e-3)};
  PowerSettings pw;
  pw.weights = std::move(weights);
  auto s = build_correlated_scenario(ct, pw);
  s.harvest_targets.assign(s.num_eh(), frac * compute_emax(s).emax);
  return s;
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> w(k);
  for (auto& x : w) x = u(rng);
  return w;
}

// ---------------------------------------------------------------------------

Outcome single_user_closed_form() {
  Outcome o;
  double worst = 0.0, slowest = 0.0;
  for (double frac : {0.0, 0.3, 0.7, 0.99}) {
    for (double zeta : {1.0, 0.5}) {
      Scenario s;
      s.n_tx = 3;
      CVector h(3), g(3);
      h << cplx(2e-4, 1e-4), cplx(-1e-4, 0), 0;
      g << cplx(1e-3, 0), cplx(2e-3, -1e-3), cplx(0, 3e-2);  // h^H g = 0
      s.id_channels = {h};
      s.eh_channels = {g};
      s.harvest_efficiency = zeta;
      s.weights = {1.0};
      const double emax = zeta * s.sum_power * g.squaredNorm();
      s.harvest_targets = {std::max(frac, 1e-6) * emax};
      const auto t0 = Clock::now();
      const auto r = timed_solve(s, Algorithm::Optimal, "closed-form");
      const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
      const double want =
          std::log2(1 + (s.sum_power - s.harvest_targets[0] / (zeta * g.squaredNorm())) * h.squaredNorm() / s.noise_power);
      const double err = std::abs(r.solution.wsr - want) / want;
      worst = std::max(worst, err);
      slowest = std::max(slowest, dt);
      if (err > 1e-4 || dt >= 5.0) o.pass = false;
    }
  }
  o.detail = "worst relative error " + fmt(worst) + ", slowest " + fmt(slowest) + " s";
  return o;
}

Outcome oracle_sandwich() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst_low = -INFINITY, worst_high = -INFINITY, slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t0 = Clock::now();
    const auto s = generated(100 + seed, 2, 1, 1, u(rng));
    const auto r = timed_solve(s, Algorithm::Optimal, "sandwich");
    const auto bf = brute_force_oracle(s, 120);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    slowest = std::max(slowest, dt);
    const double g = *r.g_star;
    worst_low = std::max(worst_low, bf.wsr - r.solution.wsr);
    worst_high = std::max(worst_high, r.solution.wsr - g - 1e-4 * (1 + g));
    if (!bf.feasible || bf.wsr - 1e-6 > r.solution.wsr || r.solution.wsr > g + 1e-4 * (1 + g) || dt >= 30) o.pass = false;
  }
  o.detail = "max(oracle - wsr) " + fmt(worst_low) + ", max(wsr - bound) " + fmt(worst_high) + ", slowest " +
             fmt(slowest) + " s";
  return o;
}

Outcome strong_duality() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst_gap = 0.0;
  int violations = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = generated(300 + seed, 4, 2, 2, u(rng), random_weights(rng, 2));
    const auto r = timed_solve(s, Algorithm::Optimal, "duality seed " + std::to_string(seed));
    const double gap = std::abs(r.solution.wsr - *r.g_star) / (1 + *r.g_star);
    worst_gap = std::max(worst_gap, gap);
    if (!verify_solution(s, r.solution, 1e-6).ok()) ++violations;
  }
  o.pass = worst_gap <= 1e-3 && violations == 0;
  o.detail = "worst relative gap " + fmt(worst_gap) + ", constraint violations " + std::to_string(violations) + "/50";
  return o;
}

Outcome bc_mac_identity() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0, 1);
  auto cvec = [&](Eigen::Index n) {
    CVector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = cplx(nd(rng), nd(rng));
    return v;
  };
  double worst = 0.0, worst_power = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 5);
    const std::size_t k = 1 + rng() % 4;
    CMatrix f(n, n);
    for (Eigen::Index c = 0; c < n; ++c) f.col(c) = cvec(n);
    const CMatrix a = hermitian_part(f * f.adjoint() / static_cast<double>(n)) + 0.05 * CMatrix::Identity(n, n);
    std::vector<CVector> hs;
    std::vector<double> w;
    for (std::size_t i = 0; i < k; ++i) {
      hs.push_back(std::pow(10.0, 2 * u(rng) - 1) * cvec(n));
      w.push_back(i > 0 && u(rng) < 0.2 ? w.back() : 0.1 + u(rng));
    }
    const double budget = 0.1 + 10 * u(rng);
    const auto bc = solve_reduced_bc(a, hs, w, budget);
    CMatrix tail = CMatrix::Zero(n, n), total = CMatrix::Zero(n, n);
    for (std::size_t pos = k; pos-- > 0;) {
      const std::size_t user = bc.encoding_order[pos];
      const double below = 1 + quad_form(tail, hs[user]);
      tail += bc.covariances[user];
      const double r = std::log2((1 + quad_form(tail, hs[user])) / below);
      worst = std::max(worst, std::abs(r - bc.rates[user]));
    }
    for (const auto& c : bc.covariances) total += c;
    worst_power = std::max(worst_power, std::abs(trace_product(a, total) - budget) / budget);
  }
  o.pass = worst <= 1e-7 && worst_power <= 1e-7;
  o.detail = "worst |uplink - downlink| rate " + fmt(worst) + " on 100 problems, weighted-power mismatch " + fmt(worst_power);
  return o;
}

Outcome ordering() {
  Outcome o;
  std::mt19937_64 rng(5);
  struct Shape {
    Eigen::Index n;
    std::size_t ki, ke;
  };
  const Shape shapes[] = {{4, 2, 2}, {5, 2, 3}, {6, 3, 3}, {4, 1, 3}, {8, 3, 4}};
  double worst_oi = -INFINITY, worst_ie = -INFINITY, worst_equal = 0.0;
  int bad = 0;
  for (int k = 0; k < 50; ++k) {
    const Shape& sh = shapes[k % 5];
    const double frac = 0.1 * (1 + k % 9);
    const auto weights = random_weights(rng, sh.ki);
    Scenario s;
    if (k % 2 == 0) {
      s = generated(500 + static_cast<std::uint64_t>(k), sh.n, sh.ki, sh.ke, frac, weights);
    } else {
      // correlated receivers make the harvest constraints bite
      RMatrix rho(static_cast<Eigen::Index>(sh.ki), static_cast<Eigen::Index>(sh.ke));
      for (Eigen::Index i = 0; i < rho.rows(); ++i)
        for (Eigen::Index j = 0; j < rho.cols(); ++j) rho(i, j) = std::pow(2.0, -static_cast<double>(1 + (i + j) % 3));
      s = correlated(rho, sh.n, 500 + static_cast<std::uint64_t>(k), frac, weights);
    }
    const std::string what = "ordering #" + std::to_string(k);
    const double wo = timed_solve(s, Algorithm::Optimal, what).solution.wsr;
    const double wi = timed_solve(s, Algorithm::Idsied, what).solution.wsr;
    const double we = timed_solve(s, Algorithm::Ehsied, what).solution.wsr;
    worst_oi = std::max(worst_oi, wi - wo);
    worst_ie = std::max(worst_ie, we - wi);
    if (wo < wi - 1e-5 || wi - 1e-5 < we - 2e-5) ++bad;

    if (k % 5 == 0) {
      s.harvest_targets.assign(s.num_eh(), 1e-6 * compute_emax(s).emax);
      const double zo = timed_solve(s, Algorithm::Optimal, what + " E->0").solution.wsr;
      const double zi = timed_solve(s, Algorithm::Idsied, what + " E->0").solution.wsr;
      const double ze = timed_solve(s, Algorithm::Ehsied, what + " E->0").solution.wsr;
      const double spread = std::max({std::abs(zo - zi), std::abs(zo - ze), std::abs(zi - ze)}) / std::max(1e-300, zo);
      worst_equal = std::max(worst_equal, spread);
      if (spread > 1e-4) ++bad;
    }
  }
  o.pass = bad == 0;
  o.detail = "max(IDSIED - optimal) " + fmt(worst_oi) + ", max(EHSIED - IDSIED) " + fmt(worst_ie) +
             ", spread at E = 1e-6 E_max " + fmt(worst_equal) + ", failures " + std::to_string(bad);
  return o;
}

Outcome all_orthogonal() {
  Outcome o;
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto s = correlated(RMatrix::Zero(2, 2), 5, seed, 0.15 * static_cast<double>(seed), random_weights(rng, 2));
    const double wo = timed_solve(s, Algorithm::Optimal, "orthogonal").solution.wsr;
    const double wi = timed_solve(s, Algorithm::Idsied, "orthogonal").solution.wsr;
    const double we = timed_solve(s, Algorithm::Ehsied, "orthogonal").solution.wsr;
    worst = std::max(worst, std::max({std::abs(wo - wi), std::abs(wo - we), std::abs(wi - we)}) / wo);
  }
  o.pass = worst <= 1e-4;
  o.detail = "worst relative spread " + fmt(worst) + " over 6 scenarios";
  return o;
}

Outcome ten_receiver_expansion() {
  Outcome o;
  const auto f = cli::load_scenario(std::string(SWIPT_SOURCE_DIR) + "/scenarios/ten_eh.json");
  const Scenario& s = f.scenario;
  const auto r = timed_solve(s, Algorithm::Optimal, "ten-eh");
  if (!r.recovery || !r.lambda) return {false, "no recovery information"};
  const Recovery& rec = *r.recovery;

  int violated = 0;
  for (std::size_t j = 0; j < s.num_eh(); ++j)
    if (rec.representative_harvest[j] < s.harvest_targets[j] * (1 - 1e-6)) ++violated;

  const auto q = harvested_powers(s, r.solution.info_covariances, r.solution.energy_covariance);
  double worst_deficit = 0.0;
  for (std::size_t j = 0; j < s.num_eh(); ++j)
    worst_deficit = std::max(worst_deficit, (s.harvest_targets[j] - q[j]) / s.harvest_targets[j]);

  double rate_diff = 0.0;
  for (std::size_t i = 0; i < s.num_id(); ++i)
    rate_diff = std::max(rate_diff, std::abs(r.solution.rates[i] - rec.pinned_rates[i]));

  CMatrix a = r.lambda->constraint_matrix(s);
  a /= spectral_norm_hermitian(a);
  const CMatrix& u1 = rec.u1;
  const CMatrix& u2 = rec.u2;
  double trace_o = 0.0, trace_oa = 0.0, schur_b = 0.0, schur_range = 0.0, schur_d = 0.0;
  for (const auto& si : r.solution.info_covariances) {
    const CMatrix b = hermitian_part(u1.adjoint() * si * u1);
    const CMatrix c = u1.adjoint() * si * u2;
    const CMatrix d = hermitian_part(u2.adjoint() * si * u2);
    const CMatrix oi = u1 * c * u2.adjoint() + u2 * c.adjoint() * u1.adjoint();
    trace_o = std::max(trace_o, std::abs(oi.trace()) / s.sum_power);
    trace_oa = std::max(trace_oa, std::abs((oi * a).trace()) / s.sum_power);
    const CMatrix bp = psd_pinv(b, 1e-10);
    schur_b = std::max(schur_b, std::max(0.0, -min_eigenvalue(b)) / s.sum_power);
    const CMatrix leak = (CMatrix::Identity(b.rows(), b.cols()) - b * bp) * c;
    schur_range = std::max(schur_range, leak.norm() / s.sum_power);
    if (d.rows() > 0) schur_d = std::max(schur_d, std::max(0.0, -min_eigenvalue(hermitian_part(d - c.adjoint() * bp * c))) / s.sum_power);
  }
  o.pass = rec.path != "representative" && violated >= 1 && worst_deficit <= 1e-8 && rate_diff <= 1e-8 &&
           trace_o <= 1e-8 && trace_oa <= 1e-8 && schur_b <= 1e-7 && schur_range <= 1e-7 && schur_d <= 1e-7;
  std::ostringstream d;
  d << "path " << rec.path << ", representative misses " << violated << "/" << s.num_eh() << " targets, worst deficit after "
    << fmt(worst_deficit) << ", rate change " << fmt(rate_diff) << ", |Tr O| " << fmt(trace_o) << ", |Tr O A| "
    << fmt(trace_oa) << ", Schur " << fmt(schur_b) << "/" << fmt(schur_range) << "/" << fmt(schur_d);
  o.detail = d.str();
  return o;
}

Outcome orthogonality() {
  // extra sweeps over the correlated fixtures, where the energy signal is most often active
  for (const char* name : {"hcs.json", "lcs.json"}) {
    auto f = cli::load_scenario(std::string(SWIPT_SOURCE_DIR) + "/scenarios/" + name);
    for (double frac : {0.5, 0.8, 0.95}) {
      Scenario s = f.scenario;
      s.harvest_targets.assign(s.num_eh(), frac * compute_emax(s).emax);
      for (double t : {0.1, 0.5, 0.9}) {
        s.weights = {t, 1 - t};
        timed_solve(s, Algorithm::Optimal, std::string(name) + " frac " + fmt(frac) + " t " + fmt(t));
      }
    }
  }
  Outcome o;
  o.pass = ledger.energy_checks > 0 && ledger.worst_orthogonality <= 1e-6;
  o.detail = std::to_string(ledger.energy_checks) + " optimal solves with an energy signal, worst ratio " +
             fmt(ledger.worst_orthogonality) + (ledger.worst_orthogonality_what.empty() ? "" : " (" + ledger.worst_orthogonality_what + ")");
  return o;
}

Outcome emax_closed_forms() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  double worst_single = 0.0;
  for (int t = 0; t < 10; ++t) {
    Scenario s;
    s.n_tx = 2 + t % 4;
    CVector h(s.n_tx), g(s.n_tx);
    for (Eigen::Index k = 0; k < s.n_tx; ++k) {
      h(k) = cplx(nd(rng), nd(rng)) * 1e-4;
      g(k) = cplx(nd(rng), nd(rng)) * 1e-2;
    }
    s.id_channels = {h};
    s.eh_channels = {g};
    s.harvest_efficiency = 0.3 + 0.07 * t;
    s.harvest_targets = {1e-6};
    s.weights = {1.0};
    const double want = s.harvest_efficiency * s.sum_power * g.squaredNorm();
    worst_single = std::max(worst_single, std::abs(compute_emax(s).emax - want) / want);
  }
  // orthogonal, equal norms, two antennas
  Scenario s;
  s.n_tx = 2;
  CVector h(2), g1(2), g2(2);
  h << cplx(1e-4, 0), cplx(0, 1e-4);
  g1 << cplx(0.03, 0.01), cplx(-0.01, 0.02);
  g2 << cplx(0.01, 0.02), cplx(0.03, -0.01);  // g1^H g2 = 0, same norm
  s.id_channels = {h};
  s.eh_channels = {g1, g2};
  s.harvest_targets = {1e-6, 1e-6};
  s.weights = {1.0};
  const double emax = compute_emax(s).emax;
  const double half = 0.5 * s.sum_power * g1.squaredNorm();
  // brute force: covariance mixes of two grid beams w1, w2 with power split p
  const int grid = 90;
  std::vector<CVector> beams;
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      const double th = (M_PI / 2) * a / (grid - 1), ph = 2 * M_PI * b / grid;
      CVector w(2);
      w << std::cos(th), std::sin(th) * std::polar(1.0, ph);
      beams.push_back(w);
    }
  double grid_best = 0.0;
  for (const auto& w : beams) {
    const double q1 = std::norm(g1.dot(w)), q2 = std::norm(g2.dot(w));
    grid_best = std::max(grid_best, s.sum_power * std::min(q1, q2));
  }
  const double closed = std::abs(emax - half) / half, vs_grid = std::abs(emax - grid_best) / grid_best;
  o.pass = worst_single <= 1e-6 && closed <= 1e-6 && vs_grid <= 1e-3;
  o.detail = "single-EH worst relative error " + fmt(worst_single) + ", orthogonal pair vs half " + fmt(closed) +
             ", vs beam grid " + fmt(vs_grid);
  return o;
}

Outcome dual_function_properties() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  double worst_homog = 0.0;
  int points = 0;
  {
    const auto s = generated(1000, 4, 2, 2, 0.5);
    const auto f = normal_form(s);
    while (points < 10) {
      RVector mu(3);
      mu << 1.0, 0.6 * u(rng), 0.6 * u(rng);
      const DualPoint lam = from_normal(f, mu);
      const auto g0 = evaluate_g(s, lam);
      if (!g0) continue;
      ++points;
      for (double c : {0.5, 2.0, 10.0}) {
        const auto gc = evaluate_g(s, DualPoint{c * lam.lam0, c * lam.lam});
        worst_homog = std::max(worst_homog, gc ? std::abs(*gc - *g0) / std::max(1.0, *g0) : INFINITY);
      }
    }
  }
  int pairs = 0, wrong = 0;
  double worst_dir = -INFINITY;
  for (std::uint64_t seed = 1100; pairs < 50; ++seed) {
    const auto s = generated(seed, 3, 2, 2, 0.5);
    const auto f = normal_form(s);
    for (int attempt = 0; attempt < 40 && pairs < 50; ++attempt) {
      RVector m1(3), m2(3);
      m1 << 1.0, 0.7 * u(rng), 0.7 * u(rng);
      m2 << 1.0, 0.7 * u(rng), 0.7 * u(rng);
      const DualPoint l1 = from_normal(f, m1), l2 = from_normal(f, m2);
      const auto r2 = oracle_cut(s, l2);
      const auto g1 = evaluate_g(s, l1);
      if (r2.cut.kind != CutKind::Objective || !g1) continue;
      RVector x1(3), x2(3);
      x1 << l1.lam0, l1.lam;
      x2 << l2.lam0, l2.lam;
      if (r2.cut.direction.dot(x1 - x2) <= 0) continue;
      ++pairs;
      worst_dir = std::max(worst_dir, *r2.g - *g1);
      if (*g1 < *r2.g - 1e-7) ++wrong;
    }
  }
  o.pass = worst_homog <= 1e-8 && wrong == 0;
  o.detail = "homogeneity worst " + fmt(worst_homog) + " at 10 points, subgradient direction violated " +
             std::to_string(wrong) + "/50 (max g(l2) - g(l1) " + fmt(worst_dir) + ")";
  return o;
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + std::string(SWIPT_TOOL_PATH) + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "swipt_acceptance";
  std::filesystem::create_directories(dir);
  const std::string src = std::string(SWIPT_SOURCE_DIR) + "/scenarios/";
  auto q = [](const std::filesystem::path& p) { return "\"" + p.string() + "\""; };
  struct Job {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs = {
      {"solve", "solve \"" + src + "ten_eh.json\" --out @0", {"rec.json"}},
      {"solve-idsied", "solve \"" + src + "hcs.json\" --algorithm idsied --out @0", {"rec.json"}},
      {"region", "region \"" + src + "lcs.json\" --grid 6 --baseline --out @0 --plot-script @1", {"reg.csv", "plot.py"}},
      {"montecarlo", "montecarlo \"" + src + "montecarlo.json\" --trials 6 --evalues 0,0.5,0.9 --out @0 --trials-out @1",
       {"mc.csv", "trials.csv"}},
  };
  Outcome o;
  int identical = 0, total = 0;
  for (const auto& job : jobs) {
    // both runs write the same paths (plot scripts embed them); the first run's files are read back before the second
    std::vector<std::string> runs[2];
    std::string args = job.args;
    std::vector<std::filesystem::path> paths;
    for (std::size_t i = 0; i < job.files.size(); ++i) {
      paths.push_back(dir / (job.name + "_" + job.files[i]));
      const std::string tag = "@" + std::to_string(i);
      args.replace(args.find(tag), tag.size(), q(paths.back()));
    }
    for (int k = 0; k < 2; ++k) {
      for (const auto& p : paths) std::filesystem::remove(p);
      // the second run uses a different worker count: output assembly must not depend on it
      if (run_tool(args, k == 0 ? "SWIPT_THREADS=1" : "SWIPT_THREADS=3") != 0) {
        o.pass = false;
        o.detail += job.name + " failed to run; ";
      }
      for (const auto& p : paths) runs[k].push_back(slurp(p));
    }
    for (std::size_t i = 0; i < job.files.size(); ++i) {
      ++total;
      if (!runs[0][i].empty() && runs[0][i] == runs[1][i]) ++identical;
      else o.pass = false;
    }
  }
  o.detail += std::to_string(identical) + "/" + std::to_string(total) + " output files byte-identical across repeated runs";
  return o;
}

Outcome runtime_budget(Clock::time_point start) {
  // the largest shapes in scope, correlated and uncorrelated, every algorithm
  std::mt19937_64 rng(12);
  for (int k = 0; k < 6; ++k) {
    const double frac = k % 2 == 0 ? 0.5 : 0.9;
    Scenario s;
    if (k < 3) {
      s = generated(1200 + static_cast<std::uint64_t>(k), 8, 3, 4, frac, random_weights(rng, 3));
    } else {
      RMatrix rho(3, 4);
      for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) rho(i, j) = std::pow(2.0, -static_cast<double>(1 + i + j));
      s = correlated(rho, 8, 1200 + static_cast<std::uint64_t>(k), frac, random_weights(rng, 3));
    }
    for (Algorithm a : {Algorithm::Optimal, Algorithm::Idsied, Algorithm::Ehsied})
      timed_solve(s, a, "N=8 K_I=3 K_E=4 #" + std::to_string(k));
  }
  const double suite = std::chrono::duration<double>(Clock::now() - start).count();
  Outcome o;
  o.pass = ledger.slowest_solve < 10.0 && suite < 1200.0;
  o.detail = "slowest solve " + fmt(ledger.slowest_solve) + " s (" + ledger.slowest_what + "), suite so far " + fmt(suite) + " s";
  return o;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "single-user closed form", single_user_closed_form},
      {2, "brute-force oracle sandwich", oracle_sandwich},
      {3, "strong duality and feasibility", strong_duality},
      {4, "uplink/downlink rate identity", bc_mac_identity},
      {5, "algorithm ordering", ordering},
      {6, "orthogonal receivers agree", all_orthogonal},
      {7, "primal expansion on the ten-receiver setup", ten_receiver_expansion},
      {9, "E_max closed forms", emax_closed_forms},
      {10, "homogeneity and subgradient direction of g", dual_function_properties},
      {11, "determinism of output files", determinism},
      // last two read the shared ledger, so they run after everything else
      {8, "energy signal orthogonal to ID channels", orthogonality},
      {12, "runtime budget", [start] { return runtime_budget(start); }},
  };
  std::vector<std::pair<int, std::string>> lines;
  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    all = all && o.pass;
    char head[128];
    std::snprintf(head, sizeof head, "%s %2d %s", o.pass ? "PASS" : "FAIL", c.id, c.name);
    lines.emplace_back(c.id, std::string(head) + ": " + o.detail + " [" + fmt(dt) + " s]");
    std::fprintf(stderr, "%s\n", lines.back().second.c_str());
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) std::printf("%s\n", l.second.c_str());
  std::printf("%s: total %.1f s\n", all ? "ALL PASS" : "SOME FAILED",
              std::chrono::duration<double>(Clock::now() - start).count());
  return all ? 0 : 1;
}
