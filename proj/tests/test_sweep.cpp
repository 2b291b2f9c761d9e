#include <doctest.h>

#include <memory>

#include "kst/registry.hpp"
#include "kst/sweep.hpp"

using namespace kst;

namespace {
std::shared_ptr<InnerLadder> ladder1() {
  static auto L = [] {
    DomainSpec spec;
    spec.n = 1;
    InnerLadder::Config cfg;
    cfg.n = 1;
    cfg.build_bound = 5.5;
    cfg.fine_u_exp = -17;
    return std::make_shared<InnerLadder>(build_exhaustion(spec), cfg);
  }();
  return L;
}
}  // namespace

TEST_CASE("zero residual: no increments, no sweeps") {
  auto L = ladder1();
  AnnulusProblem p;
  p.s = 1;
  p.window_bound = 3.0;
  p.f_s = [](const Point&) { return 0.0; };
  SweepConfig cfg;
  cfg.tol = 1e-9;
  AnnulusSolution sol = solve_annulus(*L, p, cfg);
  CHECK(sol.history.empty());
  CHECK(sol.residual_sup == 0.0);
  CHECK(sol.reached_tol);
  for (auto& g : sol.g) CHECK(g.zero());
}

TEST_CASE("simultaneous worst case: r = 1, full coverage overshoot") {
  // at a point covered by all 3 families the three increments sum to 3/2,
  // leaving -1/2; the sup of the updated residual is n/(n+1) = 1/2
  auto L = ladder1();
  AnnulusProblem p;
  p.s = 1;
  p.window_bound = 2.0;
  p.f_s = [](const Point&) { return 1.0; };
  SweepConfig cfg;
  cfg.sequential = false;
  cfg.theta_commit = 1.0;
  cfg.max_sweeps = 1;
  cfg.tol = 1e-12;
  AnnulusSolver solver(*L, p, cfg);
  std::vector<std::vector<double>> delta;
  double ratio = solver.tentative_sweep(delta);
  // find a point inside cells of all families: cell centers of family 0 are
  // candidates; residual there must be exactly 1 - 3*(1/2) = -1/2
  const LevelParams& lp = L->level(2).params;
  bool found = false;
  for (double t = 0.0; t < 200.0 && !found; t += 1.0) {
    Point x{(8.5 + 24.0 * t) * lp.u()};
    int covered = 0;
    for (int f = 0; f < 3; ++f)
      if (axis_locate(x[0], f, lp).in_cell) ++covered;
    if (covered == 3) {
      found = true;
      CHECK(solver.residual_at(x) == doctest::Approx(-0.5).epsilon(1e-9));
    }
  }
  CHECK(found);
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("increment bound: |delta| <= R/(n+1) exactly") {
  auto L = ladder1();
  AnnulusProblem p;
  p.s = 1;
  p.window_bound = 3.0;
  auto hat = make_registry_function("hat", {2.0}, 1);
  p.f_s = [hat](const Point& x) { return hat(x) * cutoff(1, x); };
  SweepConfig cfg;
  cfg.max_sweeps = 3;
  cfg.tol = 1e-12;
  cfg.theta_commit = 0.71;
  AnnulusSolver solver(*L, p, cfg);
  double R = solver.residual_sup();
  std::vector<std::vector<double>> delta;
  solver.tentative_sweep(delta);
  for (auto& fam : delta)
    for (double v : fam) CHECK(std::abs(v) <= R / 2.0 + 1e-18);
}

TEST_CASE("hat function solve: contraction and support certificate") {
  auto L = ladder1();
  Exhaustion ex = L->exhaustion();
  auto f = make_registry_function("hat", {2.0}, 1);
  auto parts = annulus_decompose(f, ex, 1);
  SweepConfig cfg;
  cfg.tol = 1e-3;
  cfg.theta_commit = 0.71;
  AnnulusSolution sol = solve_annulus(*L, parts[0], cfg);
  CHECK(sol.reached_tol);
  CHECK(sol.residual_sup <= 1e-3);
  for (auto& rec : sol.history) CHECK(rec.ratio <= 0.71);
  // residual history strictly decreasing
  for (size_t i = 1; i < sol.history.size(); ++i)
    CHECK(sol.history[i].residual_sup < sol.history[i - 1].residual_sup);
  // supports inside [s-2, s+2+1/4] = [-1, 3.25]
  for (auto& g : sol.g) {
    if (g.zero()) continue;
    CHECK(g.support_lo() >= -1.0);
    CHECK(g.support_hi() <= 3.25);
  }
  // identity on the window, including points outside L_1
  AnnulusSolver verify(*L, parts[0], cfg);
  (void)verify;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    Point x{dist(rng)};
    double recon = 0.0;
    for (int fam = 0; fam < 3; ++fam) recon += sol.g[fam](L->eval_ladder(2, fam, x));
    CHECK(std::abs(parts[0].f_s(x) - recon) <= 2e-3);
  }
}

TEST_CASE("assemble: single annulus passes through; overlap counts bounded") {
  auto L = ladder1();
  auto f = make_registry_function("ramp", {}, 1);
  auto parts = annulus_decompose(f, L->exhaustion(), 1);
  SweepConfig cfg;
  cfg.tol = 5e-4;
  AnnulusSolution sol = solve_annulus(*L, parts[0], cfg);
  std::vector<AnnulusSolution> sols{sol};
  auto g = assemble(sols, 3);
  for (int fam = 0; fam < 3; ++fam)
    for (double y = -1.0; y <= 3.25; y += 0.01)
      CHECK(g[fam](y) == doctest::Approx(sol.g[fam](y)).epsilon(1e-12));
  // support overlap count over solved annuli s in {1..5}: at most 5 at any y
  for (double y = -1.0; y <= 7.5; y += 0.125) {
    int cnt = 0;
    for (int s = 1; s <= 5; ++s)
      if (y >= double(s) - 2.0 && y <= double(s) + 2.25) ++cnt;
    CHECK(cnt <= 5);
  }
}
