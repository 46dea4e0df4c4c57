#include <doctest.h>

#include <cmath>
#include <random>

#include "tvflow/resolvent.hpp"

using namespace tvflow;

namespace {

ScalarField smooth_field(const PeriodicGrid& g, unsigned seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::uniform_int_distribution<int> uk(-3, 3);
  ScalarField u(g);
  for (int j = 0; j < 6; ++j) {
    int kv[3] = {uk(rng), uk(rng), uk(rng)};
    if (kv[0] == 0 && kv[1] == 0 && kv[2] == 0) kv[0] = 1;
    const double phase = uphase(rng);
    for (long k = 0; k < g.size(); ++k) {
      const Point x = g.node_position(k);
      double arg = phase;
      for (int a = 0; a < g.dim(); ++a) arg += 2.0 * M_PI * kv[a] * x[a];
      u[k] += amp / 6.0 * std::cos(arg);
    }
  }
  return u;
}

// 1D plateau of J cells height H on a zero background.
ScalarField plateau_1d(const PeriodicGrid& g, long first, long cells, double H) {
  ScalarField u(g);
  for (long j = 0; j < cells; ++j) u[(first + j) % g.resolution()] = H;
  return u;
}

}  // namespace

TEST_CASE("TV resolvent of a constant is the constant") {
  PeriodicGrid g(2, 32);
  ScalarField f(g, 2.5);
  for (double a : {1e-3, 1e-1, 1.0}) {
    ResolventConfig cfg;
    cfg.a = a;
    cfg.tolerance = 1e-10;
    ResolventSolution sol = solve_resolvent_tv(f, cfg);
    CHECK(norm_inf(sol.u) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(sol.method == "exact-dual");
  }
}

TEST_CASE("1D plateau drops by exactly 2a/L, background rises by 2a/(1-L)") {
  // independent oracle: the discrete minimizer keeps the two-level structure
  // pre-merge, so the drop follows from the first-order conditions
  const long N = 64;
  PeriodicGrid g(1, N);
  const long cells = 16;  // L = 0.25
  ScalarField f = plateau_1d(g, 24, cells, 1.0);
  const double L = static_cast<double>(cells) / N;
  const double a = 2e-3;
  ResolventConfig cfg;
  cfg.a = a;
  cfg.tolerance = 1e-10;
  ResolventSolution sol = solve_resolvent_tv(f, cfg);
  const double plateau_expect = 1.0 - 2.0 * a / L;
  const double background_expect = 2.0 * a / (1.0 - L);
  CHECK(sol.u[24 + cells / 2] == doctest::Approx(plateau_expect).epsilon(1e-6));
  CHECK(sol.u[0] == doctest::Approx(background_expect).epsilon(1e-6));
}

TEST_CASE("mean preservation and non-expansiveness") {
  PeriodicGrid g(2, 48);
  ScalarField f1 = smooth_field(g, 31);
  ScalarField f2 = smooth_field(g, 32);
  ResolventConfig cfg;
  cfg.a = 5e-3;
  cfg.tolerance = 1e-9;
  ResolventSolution s1 = solve_resolvent_tv(f1, cfg);
  ResolventSolution s2 = solve_resolvent_tv(f2, cfg);
  CHECK(std::abs(mean(s1.u) - mean(f1)) <= 1e-10);

  ScalarField du(g), df(g);
  for (long k = 0; k < g.size(); ++k) {
    du[k] = s1.u[k] - s2.u[k];
    df[k] = f1[k] - f2[k];
  }
  CHECK(norm_l2(du) <= norm_l2(df) + 2.0 * cfg.tolerance);
}

TEST_CASE("energy optimality against sampled competitors") {
  PeriodicGrid g(2, 32);
  ScalarField f = smooth_field(g, 33);
  ResolventConfig cfg;
  cfg.a = 1e-2;
  cfg.tolerance = 1e-9;
  ResolventSolution sol = solve_resolvent_tv(f, cfg);
  auto objective = [&](const ScalarField& v) {
    ScalarField d(g);
    for (long k = 0; k < g.size(); ++k) d[k] = v[k] - f[k];
    const double n2 = norm_l2(d);
    return 0.5 * n2 * n2 + cfg.a * tv_energy(v);
  };
  const double opt = objective(sol.u);
  CHECK(opt <= objective(f) + 1e-8);
  CHECK(opt <= objective(ScalarField(g, mean(f))) + 1e-8);
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> pert(-1e-3, 1e-3);
  ScalarField v = sol.u;
  for (auto& x : v.v) x += pert(rng);
  CHECK(opt <= objective(v) + 1e-8);
}

TEST_CASE("comparison: additive constants and ordered pairs") {
  PeriodicGrid g(2, 32);
  ScalarField f1 = smooth_field(g, 41);
  ResolventConfig cfg;
  cfg.a = 1e-2;
  cfg.tolerance = 1e-9;

  SUBCASE("f2 = f1 gives equality") { CHECK(resolvent_comparison_check(f1, f1, cfg)); }
  SUBCASE("f2 = f1 + c shifts the solution by c") {
    ScalarField f2 = f1;
    for (auto& v : f2.v) v += 0.7;
    ResolventSolution s1 = solve_resolvent_tv(f1, cfg);
    ResolventSolution s2 = solve_resolvent_tv(f2, cfg);
    double dev = 0.0;
    for (long k = 0; k < g.size(); ++k)
      dev = std::max(dev, std::abs(s2.u[k] - s1.u[k] - 0.7));
    CHECK(dev <= 5.0 * cfg.tolerance);
  }
  SUBCASE("random ordered pairs stay ordered") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uamp(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      ScalarField base = smooth_field(g, 100 + trial);
      ScalarField gap = smooth_field(g, 200 + trial, 0.5);
      ScalarField f2 = base;
      for (long k = 0; k < g.size(); ++k) f2[k] += std::abs(gap[k]) + 0.01 * uamp(rng);
      CHECK(resolvent_comparison_check(base, f2, cfg));
    }
  }
  SUBCASE("violated precondition throws") {
    ScalarField f2 = f1;
    f2[0] -= 1.0;
    CHECK_THROWS_AS((void)resolvent_comparison_check(f1, f2, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("iteration cap raises a solver error") {
  PeriodicGrid g(2, 32);
  ScalarField f = smooth_field(g, 51);
  ResolventConfig cfg;
  cfg.a = 1e-2;
  cfg.tolerance = 1e-13;
  cfg.max_iterations = 5;
  CHECK_THROWS_AS((void)solve_resolvent_tv(f, cfg), SolverError);
}

TEST_CASE("smoothed resolvent: constants, m-ladder convergence, Lipschitz bound") {
  PeriodicGrid g(2, 32);
  SUBCASE("constant is a fixed point") {
    ScalarField f(g, 1.5);
    ResolventConfig cfg;
    cfg.a = 1e-2;
    cfg.tolerance = 1e-12;
    ResolventSolution sol = solve_resolvent_smooth(f, SmoothedEnergy(100.0), cfg);
    CHECK(norm_inf(sol.u) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(sol.method == "smoothed-newton");
  }
  SUBCASE("f_{a,m} approaches f_a uniformly as m grows") {
    ScalarField f = smooth_field(g, 61);
    ResolventConfig cfg;
    cfg.a = 5e-3;
    cfg.tolerance = 1e-10;
    ResolventSolution exact = solve_resolvent_tv(f, cfg);
    double prev = 1e300;
    for (double m : {10.0, 100.0, 1000.0}) {
      ResolventSolution sm = solve_resolvent_smooth(f, SmoothedEnergy(m), cfg);
      double err = 0.0;
      for (long k = 0; k < g.size(); ++k)
        err = std::max(err, std::abs(sm.u[k] - exact.u[k]));
      CHECK(err <= prev * (1.0 + 1e-9));
      prev = err;
    }
    CHECK(prev <= 5e-3);
  }
  SUBCASE("Lipschitz seminorm does not grow") {
    ScalarField f = smooth_field(g, 62);
    ResolventConfig cfg;
    cfg.a = 2e-3;
    cfg.tolerance = 1e-10;
    ResolventSolution sol = solve_resolvent_smooth(f, SmoothedEnergy(100.0), cfg);
    CHECK(lipschitz_seminorm(sol.u) <=
          lipschitz_seminorm(f) * (1.0 + 5.0 * g.spacing()));
  }
}

TEST_CASE("subgradient quotient basics") {
  PeriodicGrid g(2, 32);
  SUBCASE("constant right-hand side gives the zero quotient") {
    ScalarField f(g, 3.0);
    ResolventConfig cfg;
    cfg.a = 1e-2;
    cfg.tolerance = 1e-10;
    ResolventSolution sol = solve_resolvent_tv(f, cfg);
    ScalarField q = subgradient_quotient(f, sol, cfg.a);
    CHECK(norm_inf(q) <= 1e-9);
  }
  SUBCASE("config validation") {
    ResolventConfig cfg;
    cfg.a = -1.0;
    CHECK_THROWS(cfg.validate(g));
    cfg.a = 1.0;
    cfg.tau = 1.0;  // far above h^2/(4n)
    CHECK_THROWS(cfg.validate(g));
  }
}
