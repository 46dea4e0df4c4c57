#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "tvflow/experiments.hpp"
#include "tvflow/facet.hpp"
#include "tvflow/flow.hpp"

namespace tvflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Sum of a few low-frequency cosine modes; Lipschitz constant controlled by
// amp and kmax.
ScalarField random_smooth_field(const PeriodicGrid& g, std::mt19937_64& rng, int modes,
                                int kmax, double amp) {
  std::uniform_int_distribution<int> uk(-kmax, kmax);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> uamp(0.2, 1.0);
  ScalarField u(g);
  for (int j = 0; j < modes; ++j) {
    int kv[3] = {0, 0, 0};
    bool nonzero = false;
    for (int a = 0; a < g.dim(); ++a) {
      kv[a] = uk(rng);
      nonzero = nonzero || kv[a] != 0;
    }
    if (!nonzero) kv[0] = 1;
    const double phase = uphase(rng);
    const double c = uamp(rng) * amp / modes;
    for (long k = 0; k < g.size(); ++k) {
      const Point x = g.node_position(k);
      double arg = phase;
      for (int a = 0; a < g.dim(); ++a) arg += 2.0 * M_PI * kv[a] * x[a];
      u[k] += c * std::cos(arg);
    }
  }
  return u;
}

// Nonnegative bump field for ordered right-hand sides.
ScalarField random_nonneg_field(const PeriodicGrid& g, std::mt19937_64& rng, int modes,
                                int kmax, double amp) {
  std::uniform_int_distribution<int> uk(-kmax, kmax);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> uamp(0.0, 1.0);
  ScalarField u(g);
  for (int j = 0; j < modes; ++j) {
    int kv[3] = {0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) kv[a] = uk(rng);
    const double phase = uphase(rng);
    const double c = uamp(rng) * amp / modes;
    for (long k = 0; k < g.size(); ++k) {
      const Point x = g.node_position(k);
      double arg = phase;
      for (int a = 0; a < g.dim(); ++a) arg += 2.0 * M_PI * kv[a] * x[a];
      u[k] += c * (1.0 + std::cos(arg));
    }
  }
  return u;
}

SmoothPair ball_pair(const PeriodicGrid& g, double R) {
  std::ostringstream ss;
  ss << "ball";
  for (int a = 0; a < g.dim(); ++a) ss << " 0.5";
  ss << " " << R << " side=minus\n";
  return make_pair(ss.str(), g);
}

SmoothPair annulus_pair(const PeriodicGrid& g, double Rp, double Rm) {
  std::ostringstream ss;
  ss << "ball";
  for (int a = 0; a < g.dim(); ++a) ss << " 0.5";
  ss << " " << Rm << " side=minus\n";
  ss << "ball";
  for (int a = 0; a < g.dim(); ++a) ss << " 0.5";
  ss << " " << Rp << " side=plus\n";
  return make_pair(ss.str(), g);
}

// Radial Lambda profile as plot data: columns r, lambda.
void write_radial_profile(const std::string& path, const CurvatureEstimate& est) {
  std::ofstream f(path);
  if (!f) return;
  f << "r,lambda\n";
  const PeriodicGrid& g = est.mask.grid;
  const Point c = {0.5, 0.5, 0.5};
  char buf[96];
  for (long k = 0; k < g.size(); ++k) {
    if (est.mask[k] < 0.5) continue;
    const double r = torus_distance(g.dim(), g.node_position(k), c);
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", r, est.lambda[k]);
    f << buf;
  }
}

// Minimal SVG polyline plot of 1D profiles.
void write_svg_profiles(const std::string& path,
                        const std::vector<const ScalarField*>& profiles) {
  if (profiles.empty()) return;
  std::ofstream f(path);
  if (!f) return;
  const int W = 640, H = 360, pad = 24;
  double lo = 1e300, hi = -1e300;
  for (const auto* u : profiles) {
    lo = std::min(lo, min_value(*u));
    hi = std::max(hi, max_value(*u));
  }
  if (hi <= lo) hi = lo + 1.0;
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
    << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
  for (size_t p = 0; p < profiles.size(); ++p) {
    const ScalarField& u = *profiles[p];
    const long N = u.grid.resolution();
    f << "<polyline fill='none' stroke='" << colors[p % 5] << "' points='";
    for (long k = 0; k < N; ++k) {
      const double x = pad + (W - 2.0 * pad) * k / (N - 1);
      const double y = H - pad - (H - 2.0 * pad) * (u[k] - lo) / (hi - lo);
      f << x << "," << y << " ";
    }
    f << "'/>\n";
  }
  f << "</svg>\n";
}

ResolventConfig tv_config(double tolerance) {
  ResolventConfig cfg;
  cfg.tolerance = tolerance;
  return cfg;
}

// -- scenario 1: ball curvature ------------------------------------------------------

ScenarioResult run_ball_curvature(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"R", "a_levels", "eps", "rel_tol", "tv_tolerance",
                            "obstacle_tolerance", "budget_s"});
  const long N = cfg.get_long("grid", "N", 256);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const double R = cfg.get_double("params", "R", 0.25);
  const double rel = cfg.get_double("params", "rel_tol", 0.05);
  const double budget = cfg.get_double("params", "budget_s", 120.0);
  const std::vector<double> levels =
      cfg.get_list("params", "a_levels", {2e-3, 1e-3, 5e-4});
  const double eps = cfg.get_double("params", "eps", 1.0);

  PeriodicGrid g(dim, N);
  SmoothPair pair = ball_pair(g, R);
  const double expected = -static_cast<double>(dim) / R;
  ScenarioResult res;

  auto t0 = Clock::now();
  CurvatureEstimate er = nonlocal_curvature_resolvent(
      pair, levels, eps, tv_config(cfg.get_double("params", "tv_tolerance", 1e-7)));
  const double t_res = seconds_since(t0);

  t0 = Clock::now();
  ObstacleConfig ocfg;
  ocfg.tolerance = cfg.get_double("params", "obstacle_tolerance", 1e-9);
  CurvatureEstimate eo = nonlocal_curvature_obstacle(pair, ocfg);
  const double t_obs = seconds_since(t0);

  res.add_close("ball-lambda-mean-resolvent", er.mean_on_mask(), expected,
                rel * std::abs(expected));
  res.add_close("ball-lambda-mean-obstacle", eo.mean_on_mask(), expected,
                rel * std::abs(expected));
  double agree = 0.0;
  for (long k = 0; k < g.size(); ++k)
    if (er.mask[k] >= 0.5 && eo.mask[k] >= 0.5)
      agree = std::max(agree, std::abs(er.lambda[k] - eo.lambda[k]));
  res.add_le("ball-estimator-agreement", agree, 2.0 * (er.tolerance + eo.tolerance));
  res.add_timing("ball-runtime-resolvent", t_res, budget);
  res.add_timing("ball-runtime-obstacle", t_obs, budget);

  write_tvf1(out + "/lambda_resolvent.tvf1", er.lambda);
  write_tvf1(out + "/lambda_obstacle.tvf1", eo.lambda);
  write_radial_profile(out + "/lambda_radial_resolvent.csv", er);
  write_radial_profile(out + "/lambda_radial_obstacle.csv", eo);
  CalibrabilityResult cal = calibrability_check(eo, pair, rel * std::abs(expected));
  eo.write_summary_csv(out + "/estimate_summary.csv", cal.lambda_const, cal.calibrable);
  return res;
}

// -- scenario 2: annulus calibrability --------------------------------------------------

ScenarioResult run_annulus_calibrable(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"R_plus", "R_minus", "a_levels", "eps", "band_rel",
                            "tv_tolerance", "obstacle_tolerance"});
  const long N = cfg.get_long("grid", "N", 256);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const double Rp = cfg.get_double("params", "R_plus", 0.1);
  const double Rm = cfg.get_double("params", "R_minus", 0.3);
  const double band_rel = cfg.get_double("params", "band_rel", 0.05);
  const std::vector<double> levels =
      cfg.get_list("params", "a_levels", {6e-4, 3e-4, 1.5e-4});

  PeriodicGrid g(dim, N);
  SmoothPair pair = annulus_pair(g, Rp, Rm);
  const double n = dim;
  const double expected = n * (std::pow(Rp, n - 1) - std::pow(Rm, n - 1)) /
                          (std::pow(Rm, n) - std::pow(Rp, n));
  const double band = band_rel * std::abs(expected);

  ScenarioResult res;
  CurvatureEstimate er = nonlocal_curvature_resolvent(
      pair, levels, cfg.get_double("params", "eps", 1.0),
      tv_config(cfg.get_double("params", "tv_tolerance", 1e-8)));
  ObstacleConfig ocfg;
  ocfg.tolerance = cfg.get_double("params", "obstacle_tolerance", 1e-9);
  CurvatureEstimate eo = nonlocal_curvature_obstacle(pair, ocfg);

  res.add_close("annulus-lambda-mean-obstacle", eo.mean_on_mask(), expected, band);
  res.add_close("annulus-lambda-mean-resolvent", er.mean_on_mask(), expected, band);
  double dev = 0.0;
  for (long k = 0; k < g.size(); ++k)
    if (eo.mask[k] >= 0.5) dev = std::max(dev, std::abs(eo.lambda[k] - expected));
  res.add_le("annulus-constancy-band", dev, band);

  CalibrabilityResult cal = calibrability_check(eo, pair, band);
  res.add_close("annulus-lambda-perimeter-formula", cal.lambda_const, expected,
                0.5 * band);
  res.add("annulus-calibrable-flag", cal.calibrable ? 1.0 : 0.0, 1.0, 0.0,
          cal.calibrable);

  write_tvf1(out + "/lambda_obstacle.tvf1", eo.lambda);
  write_radial_profile(out + "/lambda_radial_obstacle.csv", eo);
  eo.write_summary_csv(out + "/estimate_summary.csv", cal.lambda_const, cal.calibrable);
  return res;
}

// -- scenario 3: whole torus ------------------------------------------------------------

ScenarioResult run_whole_torus(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"a_levels", "tv_tolerance", "obstacle_tolerance"});
  const long N = cfg.get_long("grid", "N", 128);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  PeriodicGrid g(dim, N);
  SmoothPair pair = make_pair(PairSpec{}, g);

  const std::vector<double> levels = cfg.get_list("params", "a_levels", {1e-3, 5e-4});
  ResolventConfig rcfg = tv_config(cfg.get_double("params", "tv_tolerance", 1e-9));
  CurvatureEstimate er = nonlocal_curvature_resolvent(pair, levels, 1.0, rcfg);
  ObstacleConfig ocfg;
  ocfg.tolerance = cfg.get_double("params", "obstacle_tolerance", 1e-12);
  CurvatureEstimate eo = nonlocal_curvature_obstacle(pair, ocfg);

  ScenarioResult res;
  double mr = 0.0, mo = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    if (er.mask[k] >= 0.5) mr = std::max(mr, std::abs(er.lambda[k]));
    if (eo.mask[k] >= 0.5) mo = std::max(mo, std::abs(eo.lambda[k]));
  }
  res.add_le("whole-torus-lambda-resolvent", mr, er.tolerance + 1e-12);
  res.add_le("whole-torus-lambda-obstacle", mo, eo.tolerance + 1e-12);
  write_tvf1(out + "/lambda_resolvent.tvf1", er.lambda);
  return res;
}

// -- scenario 4: randomized monotonicity --------------------------------------------------

struct RandomNestedPairs {
  SmoothPair inner, outer;
};

RandomNestedPairs draw_nested_pairs(const PeriodicGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double R2 = 0.24 + 0.08 * u01(rng);
    const double margin = 0.05 + 0.04 * u01(rng);
    const double R1 = R2 - margin;
    const double off = 0.5 * (margin - 0.01) * u01(rng);
    const double ang = 2.0 * M_PI * u01(rng);
    Point c2 = {0.5, 0.5, 0.5};
    Point c1 = c2;
    if (g.dim() >= 2) {
      c1[0] += off * std::cos(ang);
      c1[1] += off * std::sin(ang);
    } else {
      c1[0] += off;
    }
    const bool with_plus = u01(rng) < 0.5;
    double r1 = 0.0, r2 = 0.0;
    if (with_plus) {
      r2 = std::min(0.13, std::min(R1 - 0.09, R2 - off - 0.09)) * (0.7 + 0.3 * u01(rng));
      r1 = r2 - 0.02 - 0.02 * u01(rng);
      if (r1 < 0.055) continue;
    }
    auto build = [&](const Point& cm, double Rm, double rp) {
      PairSpec spec;
      Primitive ball;
      ball.kind = Primitive::Kind::Ball;
      ball.center = cm;
      ball.radius = Rm;
      spec.minus_side.prims.push_back(ball);
      if (rp > 0.0) {
        Primitive plus = ball;
        plus.center = c1;  // concentric plus balls keep the nesting exact
        plus.radius = rp;
        spec.plus_side.prims.push_back(plus);
      }
      return make_pair(spec, g);
    };
    try {
      RandomNestedPairs pairs{build(c1, R1, r1), build(c2, R2, r2)};
      return pairs;
    } catch (const ConstructionError&) {
      continue;  // redraw
    }
  }
  throw std::runtime_error("draw_nested_pairs: no valid geometry after 100 draws");
}

CurvatureEstimate estimate_for_pair(const SmoothPair& pair, double tolerance) {
  // scale the a-ladder so the facet drop stays well inside the support
  // function's range delta/2
  const double delta = pair.delta();
  CalibrabilityResult scale;
  CurvatureEstimate probe;  // only need lambda_const; use perimeters directly
  const double per_m =
      pair.minus_is_whole_torus ? 0.0 : level_zero_perimeter(pair.d_minus);
  const double per_p = pair.plus_is_empty ? 0.0 : level_zero_perimeter(pair.d_plus);
  const double lam = std::abs((per_p - per_m) / facet_volume(pair));
  (void)scale;
  (void)probe;
  const double a0 = std::min(1e-3, 0.05 * delta / std::max(1.0, lam));
  return nonlocal_curvature_resolvent(pair, {a0, 0.5 * a0}, 1.0, tv_config(tolerance));
}

ScenarioResult run_monotonicity_random(const ExperimentConfig& cfg,
                                       const std::string& out) {
  cfg.check_allowed_params({"trials", "tv_tolerance"});
  const long N = cfg.get_long("grid", "N", 128);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const long trials = cfg.get_long("params", "trials", 10);
  const double tol = cfg.get_double("params", "tv_tolerance", 1e-8);
  PeriodicGrid g(dim, N);
  std::mt19937_64 rng(cfg.seed());

  ScenarioResult res;
  long violations = 0;
  double worst = -kFarAway;
  std::ofstream log(out + "/trials.csv");
  log << "trial,max_violation,slack,nodes\n";
  for (long t = 0; t < trials; ++t) {
    RandomNestedPairs pairs = draw_nested_pairs(g, rng);
    CurvatureEstimate e1 = estimate_for_pair(pairs.inner, tol);
    CurvatureEstimate e2 = estimate_for_pair(pairs.outer, tol);
    MonotonicityResult m = monotonicity_check(pairs.inner, pairs.outer, e1, e2);
    if (!m.ordered) ++violations;
    worst = std::max(worst, m.max_violation - (e1.tolerance + e2.tolerance));
    log << t << "," << fmt(m.max_violation) << "," << fmt(e1.tolerance + e2.tolerance)
        << "," << m.nodes_compared << "\n";
  }
  res.add("monotonicity-violations", static_cast<double>(violations), 0.0, 0.0,
          violations == 0);
  res.add_le("monotonicity-worst-excess", worst, 0.0);
  return res;
}

// -- scenario 5: curvature bound --------------------------------------------------------

ScenarioResult run_curvature_bound(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"R", "R_plus", "R_minus", "rel_excess", "obstacle_tolerance"});
  const long N = cfg.get_long("grid", "N", 256);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const double rel = cfg.get_double("params", "rel_excess", 0.05);
  PeriodicGrid g(dim, N);
  ObstacleConfig ocfg;
  ocfg.tolerance = cfg.get_double("params", "obstacle_tolerance", 1e-9);

  ScenarioResult res;
  {
    SmoothPair pair = ball_pair(g, cfg.get_double("params", "R", 0.25));
    CurvatureEstimate est = nonlocal_curvature_obstacle(pair, ocfg);
    CurvatureBoundResult b = curvature_bound_check(est, pair);
    res.add_le("bound-ball-relative-excess", b.max_relative_excess, rel);
  }
  {
    SmoothPair pair = annulus_pair(g, cfg.get_double("params", "R_plus", 0.1),
                                   cfg.get_double("params", "R_minus", 0.3));
    CurvatureEstimate est = nonlocal_curvature_obstacle(pair, ocfg);
    CurvatureBoundResult b = curvature_bound_check(est, pair);
    res.add_le("bound-annulus-relative-excess", b.max_relative_excess, rel);
    write_tvf1(out + "/rho_annulus.tvf1", inradius_field(pair));
  }
  return res;
}

// -- scenario 6: resolvent comparison ----------------------------------------------------

ScenarioResult run_resolvent_comparison(const ExperimentConfig& cfg,
                                        const std::string& out) {
  cfg.check_allowed_params({"trials", "tolerance", "budget_s"});
  const long N = cfg.get_long("grid", "N", 64);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const long trials = cfg.get_long("params", "trials", 50);
  const double tol = cfg.get_double("params", "tolerance", 1e-8);
  const double budget = cfg.get_double("params", "budget_s", 300.0);
  PeriodicGrid g(dim, N);
  std::mt19937_64 rng(cfg.seed());
  std::uniform_real_distribution<double> ua(1e-3, 5e-2);

  auto t0 = Clock::now();
  long violations = 0;
  std::ofstream log(out + "/trials.csv");
  log << "trial,a,ordered\n";
  for (long t = 0; t < trials; ++t) {
    ScalarField f1 = random_smooth_field(g, rng, 6, 3, 1.0);
    ScalarField bump = random_nonneg_field(g, rng, 3, 2, 0.8);
    ScalarField f2 = f1;
    for (long k = 0; k < g.size(); ++k) f2[k] += bump[k];
    ResolventConfig rcfg = tv_config(tol);
    rcfg.a = ua(rng);
    const bool ok = resolvent_comparison_check(f1, f2, rcfg);
    if (!ok) ++violations;
    log << t << "," << fmt(rcfg.a) << "," << (ok ? 1 : 0) << "\n";
  }
  ScenarioResult res;
  res.add("comparison-violations", static_cast<double>(violations), 0.0, 0.0,
          violations == 0);
  res.add_timing("comparison-total-runtime", seconds_since(t0), budget);
  return res;
}

// -- scenario 7: Wulff identity -----------------------------------------------------------

ScenarioResult run_wulff_identity(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"m", "N1", "N2", "radius1", "radius2", "tol1", "tol2",
                            "ladder1", "ladder2"});
  const double m = cfg.get_double("params", "m", 10.0);
  const long N1 = cfg.get_long("params", "N1", 1024);
  const long N2 = cfg.get_long("params", "N2", 256);
  const double rad1 = cfg.get_double("params", "radius1", 0.25);
  const double rad2 = cfg.get_double("params", "radius2", 0.2);
  const double tol1 = cfg.get_double("params", "tol1", 1e-2);
  const double tol2 = cfg.get_double("params", "tol2", 3e-2);
  SmoothedEnergy e(m);

  ScenarioResult res;
  const double cap1 = conjugate_slope(e, rad1);
  const double cap2 = conjugate_slope(e, rad2);
  {
    WulffCheckResult r = wulff_identity_check(e, PeriodicGrid(1, N1), cap1);
    res.add_le("wulff-deviation-1d", r.max_relative_deviation, tol1);
  }
  {
    WulffCheckResult r = wulff_identity_check(e, PeriodicGrid(2, N2), cap2);
    res.add_le("wulff-deviation-2d", r.max_relative_deviation, tol2);
  }
  {
    std::vector<double> ladder1 = cfg.get_list("params", "ladder1", {256, 512, 1024});
    std::vector<double> ladder2 = cfg.get_list("params", "ladder2", {64, 128, 256});
    std::ofstream lcsv(out + "/refinement.csv");
    lcsv << "dim,N,deviation\n";
    bool monotone = true;
    double prev = kFarAway;
    for (double Nd : ladder1) {
      WulffCheckResult r = wulff_identity_check(e, PeriodicGrid(1, (long)Nd), cap1);
      monotone = monotone && r.max_relative_deviation <= prev * (1.0 + 1e-9);
      prev = r.max_relative_deviation;
      lcsv << "1," << Nd << "," << fmt(r.max_relative_deviation) << "\n";
    }
    res.add("wulff-refinement-monotone-1d", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone);
    monotone = true;
    prev = kFarAway;
    for (double Nd : ladder2) {
      WulffCheckResult r = wulff_identity_check(e, PeriodicGrid(2, (long)Nd), cap2);
      monotone = monotone && r.max_relative_deviation <= prev * (1.0 + 1e-9);
      prev = r.max_relative_deviation;
      lcsv << "2," << Nd << "," << fmt(r.max_relative_deviation) << "\n";
    }
    res.add("wulff-refinement-monotone-2d", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone);
  }
  {
    RadialProfile prof = fenchel_conjugate_radial(e, 3.0, 256);
    prof.write_csv(out + "/wulff_profile.csv");
  }
  return res;
}

// -- scenario 8: barrier supersolution -----------------------------------------------------

ScenarioResult run_barrier_supersolution(const ExperimentConfig& cfg,
                                         const std::string& out) {
  cfg.check_allowed_params({"m", "A", "q", "c", "rel_slack"});
  const long N = cfg.get_long("grid", "N", 256);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  BarrierSpec spec;
  spec.m = cfg.get_double("params", "m", 100.0);
  spec.A = cfg.get_double("params", "A", 8.0);
  spec.q = cfg.get_double("params", "q", 4.0);
  const double c = cfg.get_double("params", "c", 1.0);
  const double rel = cfg.get_double("params", "rel_slack", 1e-2);
  PeriodicGrid g(dim, N);

  ScenarioResult res;
  {
    BarrierCheckResult r =
        barrier_supersolution_check(spec, EllipticOperatorF::tv_flow(), g);
    res.add("barrier-residual-tv-flow", r.min_residual, 0.0, rel * r.B,
            r.min_residual >= -rel * r.B);
  }
  {
    BarrierCheckResult r =
        barrier_supersolution_check(spec, EllipticOperatorF::crystalline_graph(c), g);
    res.add("barrier-residual-crystalline", r.min_residual, 0.0, rel * r.B,
            r.min_residual >= -rel * r.B);
  }
  write_tvf1(out + "/barrier.tvf1", build_barrier(spec, g));
  return res;
}

// -- scenario 9: 1D facet speed ------------------------------------------------------------

ScenarioResult run_facet_speed_1d(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"L", "m", "ramp", "t1", "t2", "dt_semigroup", "rel_tol",
                            "tv_tolerance"});
  const long N = cfg.get_long("grid", "N", 256);
  const double L = cfg.get_double("params", "L", 0.25);
  const double m = cfg.get_double("params", "m", 1000.0);
  const double ramp = cfg.get_double("params", "ramp", 0.05);
  const double t1 = cfg.get_double("params", "t1", 5e-3);
  const double t2 = cfg.get_double("params", "t2", 1.5e-2);
  const double dt_sg = cfg.get_double("params", "dt_semigroup", 1e-3);
  const double rel = cfg.get_double("params", "rel_tol", 0.05);

  PeriodicGrid g(1, N);
  ScalarField u0(g);
  for (long k = 0; k < N; ++k) {
    const double x = g.node_position(k)[0];
    const double d = std::abs(wrap_delta(x - 0.5));
    u0[k] = std::clamp((0.5 * L + ramp - d) / ramp, 0.0, 1.0);
  }
  const long center = N / 2;
  const double expected = 2.0 / L;

  ScenarioResult res;
  {
    FlowConfig fc;
    fc.energy = SmoothedEnergy(m);
    fc.T = t2;
    fc.snapshot_times = {t1, t2};
    Trajectory tr = evolve(u0, EllipticOperatorF::tv_flow(), fc);
    const double rate =
        (tr.snapshots[1][center] - tr.snapshots[2][center]) / (t2 - t1);
    res.add_close("facet-speed-explicit", rate, expected, rel * expected);
    write_svg_profiles(out + "/profiles_explicit.svg",
                       {&tr.snapshots[0], &tr.snapshots[1], &tr.snapshots[2]});
    tr.write_manifest(out + "/explicit_manifest.csv", out + "/explicit");
  }
  {
    ResolventConfig rcfg = tv_config(cfg.get_double("params", "tv_tolerance", 1e-10));
    Trajectory tr = evolve_semigroup_tv(u0, dt_sg, t2, rcfg, {t1, t2});
    const double rate =
        (tr.snapshots[1][center] - tr.snapshots[2][center]) / (t2 - t1);
    res.add_close("facet-speed-semigroup", rate, expected, rel * expected);
    write_svg_profiles(out + "/profiles_semigroup.svg",
                       {&tr.snapshots[0], &tr.snapshots[1], &tr.snapshots[2]});
  }
  return res;
}

// -- scenario 10: Lipschitz preservation ------------------------------------------------------

ScenarioResult run_lipschitz_preservation(const ExperimentConfig& cfg,
                                          const std::string& out) {
  cfg.check_allowed_params({"count", "m", "T_tv", "T_graph", "c"});
  const long N = cfg.get_long("grid", "N", 128);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const long count = cfg.get_long("params", "count", 5);
  const double m = cfg.get_double("params", "m", 100.0);
  const double T_tv = cfg.get_double("params", "T_tv", 4e-3);
  const double T_graph = cfg.get_double("params", "T_graph", 2e-3);
  PeriodicGrid g(dim, N);
  const double h = g.spacing();
  const double bound = 1.0 + 10.0 * h;
  std::mt19937_64 rng(cfg.seed());

  ScenarioResult res;
  std::ofstream log(out + "/ratios.csv");
  log << "field,operator,max_ratio\n";
  double worst = 0.0;
  for (long j = 0; j < count; ++j) {
    ScalarField u0 = random_smooth_field(g, rng, 5, 2, 1.0);
    const double lip0 = lipschitz_seminorm(u0);
    for (int op = 0; op < 2; ++op) {
      FlowConfig fc;
      fc.energy = SmoothedEnergy(m);
      fc.T = op == 0 ? T_tv : T_graph;
      fc.snapshot_times = {fc.T / 4, fc.T / 2, 3 * fc.T / 4, fc.T};
      EllipticOperatorF F = op == 0
                                ? EllipticOperatorF::tv_flow()
                                : EllipticOperatorF::crystalline_graph(
                                      cfg.get_double("params", "c", 1.0));
      Trajectory tr = evolve(u0, F, fc);
      double ratio = 0.0;
      for (const auto& d : tr.diagnostics) ratio = std::max(ratio, d.lipschitz / lip0);
      worst = std::max(worst, ratio);
      log << j << "," << F.name() << "," << fmt(ratio) << "\n";
    }
  }
  res.add_le("lipschitz-max-ratio", worst, bound);
  return res;
}

// -- scenario 11: stability ladder -------------------------------------------------------------

ScenarioResult run_stability_ladder(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"m_ladder", "T", "dt_semigroup", "rel_tol", "bump_radius",
                            "tv_tolerance"});
  const long N = cfg.get_long("grid", "N", 128);
  const int dim = static_cast<int>(cfg.get_long("grid", "dim", 2));
  const double T = cfg.get_double("params", "T", 0.05);
  const double dt_sg = cfg.get_double("params", "dt_semigroup", 1e-3);
  const double rel = cfg.get_double("params", "rel_tol", 0.02);
  const double R = cfg.get_double("params", "bump_radius", 0.3);
  const std::vector<double> ladder =
      cfg.get_list("params", "m_ladder", {10.0, 100.0, 1000.0});
  PeriodicGrid g(dim, N);

  ScalarField u0(g);
  const Point c = {0.5, 0.5, 0.5};
  for (long k = 0; k < g.size(); ++k) {
    const double r = torus_distance(dim, g.node_position(k), c);
    const double s = std::max(0.0, 1.0 - (r / R) * (r / R));
    u0[k] = s * s;
  }
  const double range = max_value(u0) - min_value(u0);

  ResolventConfig rcfg = tv_config(cfg.get_double("params", "tv_tolerance", 1e-8));
  Trajectory sg = evolve_semigroup_tv(u0, dt_sg, T, rcfg);
  const ScalarField& ref = sg.final_state();

  ScenarioResult res;
  std::ofstream log(out + "/ladder.csv");
  log << "m,err_inf,err_rel\n";
  double prev = kFarAway;
  bool monotone = true;
  double last_rel = kFarAway;
  for (double m : ladder) {
    FlowConfig fc;
    fc.energy = SmoothedEnergy(m);
    fc.T = T;
    Trajectory tr = evolve(u0, EllipticOperatorF::tv_flow(), fc);
    double err = 0.0;
    for (long k = 0; k < g.size(); ++k)
      err = std::max(err, std::abs(tr.final_state()[k] - ref[k]));
    monotone = monotone && err <= prev * (1.0 + 1e-9);
    prev = err;
    last_rel = err / range;
    log << fmt(m) << "," << fmt(err) << "," << fmt(err / range) << "\n";
    write_tvf1(out + "/u_m" + std::to_string((long)m) + ".tvf1", tr.final_state());
  }
  write_tvf1(out + "/u_semigroup.tvf1", ref);
  res.add("stability-monotone-decrease", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone);
  res.add_le("stability-final-relative-error", last_rel, rel);
  return res;
}

// -- scenario 12: exact identities ---------------------------------------------------------------

ScenarioResult run_exact_identities(const ExperimentConfig& cfg, const std::string& out) {
  cfg.check_allowed_params({"N_adjoint", "N_resolvent", "N_eps", "a_levels",
                            "tv_tolerance"});
  std::mt19937_64 rng(cfg.seed());
  ScenarioResult res;

  {  // adjointness, n = 2 and n = 3
    for (int dim : {2, 3}) {
      PeriodicGrid g(dim, cfg.get_long("params", "N_adjoint", dim == 2 ? 32 : 16));
      ScalarField u = random_smooth_field(g, rng, 6, 3, 1.0);
      VectorField z(g);
      std::uniform_real_distribution<double> uz(-1.0, 1.0);
      for (auto& comp : z.comp)
        for (auto& v : comp.v) v = uz(rng);
      const double lhs = inner(gradient_forward(u), z) + inner(u, divergence_backward(z));
      const double scale = norm_l2(u) * norm_l2(z);
      res.add_le("adjointness-relative-" + std::to_string(dim) + "d",
                 std::abs(lhs) / scale, 1e-10);
    }
  }
  {  // mean preservation through the TV resolvent
    PeriodicGrid g(2, cfg.get_long("params", "N_resolvent", 64));
    ScalarField f = random_smooth_field(g, rng, 6, 3, 1.0);
    ResolventConfig rcfg = tv_config(1e-9);
    rcfg.a = 5e-3;
    ResolventSolution sol = solve_resolvent_tv(f, rcfg);
    res.add_le("mean-preservation", std::abs(mean(sol.u) - mean(f)), 1e-10);
  }
  {  // conjugate value at the origin
    for (double m : {1.0, 10.0, 100.0}) {
      RadialProfile prof = fenchel_conjugate_radial(SmoothedEnergy(m), 1.0, 32);
      res.add_le("conjugate-at-zero-m" + fmt(m),
                 std::abs(prof.values.front() + 1.0 / m), 1e-12);
    }
  }
  {  // eps-invariance of the facet curvature
    PeriodicGrid g(2, cfg.get_long("params", "N_eps", 128));
    SmoothPair pair = ball_pair(g, 0.25);
    const std::vector<double> levels =
        cfg.get_list("params", "a_levels", {2e-3, 1e-3});
    ResolventConfig rcfg = tv_config(cfg.get_double("params", "tv_tolerance", 1e-8));
    CurvatureEstimate base = nonlocal_curvature_resolvent(pair, levels, 1.0, rcfg);
    for (double eps : {0.5, 2.0}) {
      CurvatureEstimate est = nonlocal_curvature_resolvent(pair, levels, eps, rcfg);
      double dev = 0.0;
      for (long k = 0; k < g.size(); ++k)
        if (base.mask[k] >= 0.5) dev = std::max(dev, std::abs(est.lambda[k] - base.lambda[k]));
      res.add_le("eps-invariance-" + fmt(eps), dev, base.tolerance + est.tolerance);
    }
  }
  (void)out;
  return res;
}

}  // namespace

// -- catalog ---------------------------------------------------------------------------

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> catalog = {
      {"ball-curvature",
       "ball facet (R, n=2): both estimators recover the constant -n/R",
       1, run_ball_curvature},
      {"annulus-calibrable",
       "annulus facet is calibrable with constant n(R+^{n-1}-R-^{n-1})/(R-^n-R+^n)",
       2, run_annulus_calibrable},
      {"whole-torus-flat", "whole-torus facet has zero nonlocal curvature", 3,
       run_whole_torus},
      {"monotonicity-random",
       "nested facet pairs give ordered curvatures (randomized trials)", 4,
       run_monotonicity_random},
      {"curvature-bound",
       "|Lambda| <= n/rho with rho the largest interior ball radius", 5,
       run_curvature_bound},
      {"resolvent-comparison",
       "ordered right-hand sides give ordered resolvent solutions", 6,
       run_resolvent_comparison},
      {"wulff-identity",
       "the smoothed operator is identically n on the sampled conjugate profile", 7,
       run_wulff_identity},
      {"barrier-supersolution",
       "cut-off conjugate barriers with speed max|F| are discrete supersolutions", 8,
       run_barrier_supersolution},
      {"facet-speed-1d",
       "1D plateau of width L drops at rate 2/L pre-merge (explicit and semigroup)", 9,
       run_facet_speed_1d},
      {"lipschitz-preservation",
       "evolution does not increase the Lipschitz seminorm", 10,
       run_lipschitz_preservation},
      {"stability-ladder",
       "smoothed flows approach the semigroup solution as m grows", 11,
       run_stability_ladder},
      {"exact-identities",
       "adjointness, mean preservation, conjugate origin value, eps-invariance", 12,
       run_exact_identities},
  };
  return catalog;
}

const ScenarioInfo* find_scenario(const std::string& name) {
  for (const auto& info : scenario_catalog())
    if (info.name == name) return &info;
  return nullptr;
}

void apply_quick_tier(ExperimentConfig& cfg) {
  const std::string name = cfg.scenario_name();
  auto set = [&](const std::string& section, const std::string& key,
                 const std::string& value) {
    if (!cfg.has(section, key)) cfg.set(section, key, value);
  };
  if (name == "ball-curvature") {
    set("grid", "N", "128");
    set("params", "a_levels", "4e-3,2e-3,1e-3");
    set("params", "rel_tol", "0.08");
    set("params", "budget_s", "600");
  } else if (name == "annulus-calibrable") {
    set("grid", "N", "128");
    set("params", "a_levels", "8e-4,4e-4,2e-4");
    set("params", "band_rel", "0.12");
  } else if (name == "whole-torus-flat") {
    set("grid", "N", "64");
  } else if (name == "monotonicity-random") {
    set("grid", "N", "64");
    set("params", "trials", "3");
  } else if (name == "curvature-bound") {
    set("grid", "N", "128");
    set("params", "rel_excess", "0.09");
  } else if (name == "resolvent-comparison") {
    set("params", "trials", "10");
  } else if (name == "wulff-identity") {
    set("params", "N1", "512");
    set("params", "N2", "128");
    set("params", "tol1", "2e-2");
    set("params", "tol2", "6e-2");
    set("params", "ladder1", "128,256,512");
    set("params", "ladder2", "32,64,128");
  } else if (name == "barrier-supersolution") {
    set("grid", "N", "128");
    set("params", "rel_slack", "3e-2");
  } else if (name == "facet-speed-1d") {
    set("grid", "N", "128");
    set("params", "m", "300");
    set("params", "rel_tol", "0.08");
  } else if (name == "lipschitz-preservation") {
    set("grid", "N", "64");
    set("params", "count", "3");
  } else if (name == "stability-ladder") {
    set("grid", "N", "64");
    set("params", "m_ladder", "10,100");
    set("params", "rel_tol", "0.06");
    set("params", "dt_semigroup", "2e-3");
  } else if (name == "exact-identities") {
    set("params", "N_eps", "64");
    set("params", "a_levels", "4e-3,2e-3");
  }
}

}  // namespace tvflow
