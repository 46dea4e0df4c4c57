#include "tvflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace tvflow {

// -- elliptic operators ---------------------------------------------------------------

void EllipticOperatorF::audit(int dim, double p_range, double xi_range) const {
  std::mt19937_64 rng(0x5eedF00d);
  std::uniform_real_distribution<double> up(-p_range, p_range);
  std::uniform_real_distribution<double> ux(-xi_range, xi_range);
  double p[3] = {0, 0, 0};
  for (int trial = 0; trial < 512; ++trial) {
    for (int a = 0; a < dim; ++a) p[a] = up(rng);
    double xi = ux(rng), eta = ux(rng);
    if (xi < eta) std::swap(xi, eta);  // xi >= eta
    const double fxi = eval_(p, dim, xi);
    const double feta = eval_(p, dim, eta);
    if (fxi > feta + 1e-9 * (1.0 + std::abs(feta)))
      throw std::invalid_argument("EllipticOperatorF: '" + name_ +
                                  "' failed the degenerate-ellipticity audit "
                                  "(F increasing in xi)");
  }
}

EllipticOperatorF EllipticOperatorF::tv_flow() {
  EllipticOperatorF F;
  F.kind_ = Kind::TvFlow;
  F.uses_gradient_ = false;
  F.name_ = "tv-flow";
  F.eval_ = [](const double*, int, double xi) { return -xi; };
  F.audit(3, 10.0, 100.0);
  return F;
}

EllipticOperatorF EllipticOperatorF::crystalline_graph(double c) {
  EllipticOperatorF F;
  F.kind_ = Kind::CrystallineGraph;
  F.forcing_ = c;
  F.uses_gradient_ = true;
  F.name_ = "crystalline-graph";
  F.eval_ = [c](const double* p, int dim, double xi) {
    double q = 0.0;
    for (int a = 0; a < dim; ++a) q += p[a] * p[a];
    return -std::sqrt(1.0 + q) * (xi + c);
  };
  F.audit(3, 10.0, 100.0);
  return F;
}

EllipticOperatorF EllipticOperatorF::custom(
    std::function<double(const double*, int, double)> fn, int dim, double p_range,
    double xi_range, const std::string& name) {
  EllipticOperatorF F;
  F.kind_ = Kind::Custom;
  F.uses_gradient_ = true;
  F.name_ = name;
  F.eval_ = std::move(fn);
  F.audit(dim, p_range, xi_range);
  return F;
}

double EllipticOperatorF::xi_lipschitz_bound(int dim, double p_cap, double xi_cap) const {
  switch (kind_) {
    case Kind::TvFlow: return 1.0;
    case Kind::CrystallineGraph: return std::sqrt(1.0 + p_cap * p_cap);
    case Kind::Custom: break;
  }
  std::mt19937_64 rng(0xD1FFs);
  std::uniform_real_distribution<double> up(-p_cap, p_cap);
  std::uniform_real_distribution<double> ux(-xi_cap, xi_cap);
  const double dxi = 1e-3 * xi_cap + 1e-12;
  double p[3] = {0, 0, 0};
  double L = 0.0;
  for (int trial = 0; trial < 512; ++trial) {
    for (int a = 0; a < dim; ++a) p[a] = up(rng);
    const double xi = ux(rng);
    L = std::max(L, std::abs(eval_(p, dim, xi + dxi) - eval_(p, dim, xi)) / dxi);
  }
  return L;
}

// -- explicit stepping -----------------------------------------------------------------

namespace {

// Collocated central-difference gradient (the p-argument of F).
void central_gradient(const ScalarField& u, VectorField& out) {
  const PeriodicGrid& g = u.grid;
  if (!(out.grid == g)) out = VectorField(g);
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  const double half_invh = 0.5 * static_cast<double>(g.resolution());
  const double* src = u.v.data();
  for (int a = 0; a < g.dim(); ++a) {
    double* dst = out.comp[a].v.data();
    const long sa = g.stride(a);
    const long na = g.extent(a);
    long k = 0;
    for (long i0 = 0; i0 < n0; ++i0)
      for (long i1 = 0; i1 < n1; ++i1)
        for (long i2 = 0; i2 < n2; ++i2, ++k) {
          const long ia = (a == 0 ? i0 : (a == 1 ? i1 : i2));
          const long kp = (ia + 1 == na) ? k - (na - 1) * sa : k + sa;
          const long km = (ia == 0) ? k + (na - 1) * sa : k - sa;
          dst[k] = (src[kp] - src[km]) * half_invh;
        }
  }
}

struct StepWorkspace {
  ScalarField op;
  VectorField scratch;
  VectorField grad_c;
  explicit StepWorkspace(const PeriodicGrid& g) : op(g), scratch(g), grad_c(g) {}
};

// In-place forward Euler step; returns the index of the first non-finite
// node or -1.
long step_inplace(ScalarField& u, const EllipticOperatorF& F, const SmoothedEnergy& e,
                  double dt, StepWorkspace& ws) {
  operator_Em(u, e, ws.op, ws.scratch);
  const long n = u.grid.size();
  const int dim = u.grid.dim();
  if (F.kind() == EllipticOperatorF::Kind::TvFlow) {
    for (long k = 0; k < n; ++k) u[k] += dt * ws.op[k];
  } else if (F.kind() == EllipticOperatorF::Kind::CrystallineGraph) {
    central_gradient(u, ws.grad_c);
    const double c = F.forcing();
    if (dim == 2) {
      const double* gx = ws.grad_c.comp[0].v.data();
      const double* gy = ws.grad_c.comp[1].v.data();
      for (long k = 0; k < n; ++k)
        u[k] += dt * std::sqrt(1.0 + gx[k] * gx[k] + gy[k] * gy[k]) * (ws.op[k] + c);
    } else {
      for (long k = 0; k < n; ++k) {
        double q = 0.0;
        for (int a = 0; a < dim; ++a) q += ws.grad_c.comp[a][k] * ws.grad_c.comp[a][k];
        u[k] += dt * std::sqrt(1.0 + q) * (ws.op[k] + c);
      }
    }
  } else {
    if (F.uses_gradient()) central_gradient(u, ws.grad_c);
    double p[3] = {0, 0, 0};
    for (long k = 0; k < n; ++k) {
      if (F.uses_gradient())
        for (int a = 0; a < dim; ++a) p[a] = ws.grad_c.comp[a][k];
      u[k] -= dt * F(p, dim, ws.op[k]);
    }
  }
  for (long k = 0; k < n; ++k)
    if (!std::isfinite(u[k])) return k;
  return -1;
}

SnapshotDiagnostics diagnose(const ScalarField& u, double t) {
  SnapshotDiagnostics d;
  d.time = t;
  d.lipschitz = lipschitz_seminorm(u);
  d.min = min_value(u);
  d.max = max_value(u);
  d.mean = mean(u);
  return d;
}

std::vector<double> snapshot_schedule(const FlowConfig& cfg) {
  std::vector<double> times = cfg.snapshot_times;
  if (times.empty()) times.push_back(cfg.T);
  std::sort(times.begin(), times.end());
  if (times.back() < cfg.T - 1e-15) times.push_back(cfg.T);
  return times;
}

}  // namespace

ScalarField step_explicit(const ScalarField& u, const EllipticOperatorF& F,
                          const SmoothedEnergy& e, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_explicit: dt must be positive");
  ScalarField out = u;
  StepWorkspace ws(u.grid);
  const long bad = step_inplace(out, F, e, dt, ws);
  if (bad >= 0)
    throw SolverError("step_explicit: non-finite value at node " + std::to_string(bad));
  return out;
}

double cfl_time_step(const ScalarField& u0, const EllipticOperatorF& F,
                     const FlowConfig& cfg) {
  const PeriodicGrid& g = u0.grid;
  const double h = g.spacing();
  const double m = cfg.energy.m;
  const double lip = lipschitz_seminorm(u0);
  const double p_cap = lip * std::sqrt(static_cast<double>(g.dim())) + 1.0;
  const double xi_cap = (m + 2.0 / m) * 4.0 * g.dim() * (lip + 1.0) / h;
  const double L_F = std::max(1e-12, F.xi_lipschitz_bound(g.dim(), p_cap, xi_cap));
  return cfg.cfl_safety * h * h / (2.0 * g.dim() * (m + 2.0 / m) * L_F);
}

Trajectory evolve(const ScalarField& u0, const EllipticOperatorF& F,
                  const FlowConfig& cfg) {
  if (!(cfg.T > 0.0)) throw std::invalid_argument("evolve: T must be positive");
  const double dt = (cfg.dt > 0.0) ? cfg.dt : cfl_time_step(u0, F, cfg);

  Trajectory traj;
  traj.dt_used = dt;
  ScalarField u = u0;
  StepWorkspace ws(u0.grid);
  double t = 0.0;

  traj.times.push_back(0.0);
  traj.snapshots.push_back(u);
  traj.diagnostics.push_back(diagnose(u, 0.0));

  for (double target : snapshot_schedule(cfg)) {
    if (target <= 0.0) continue;
    while (t < target - 1e-14) {
      const double step = std::min(dt, target - t);
      const long bad = step_inplace(u, F, cfg.energy, step, ws);
      if (bad >= 0)
        throw SolverError("evolve: blow-up (non-finite value) at node " +
                          std::to_string(bad) + ", step " + std::to_string(traj.steps) +
                          ", t = " + std::to_string(t));
      t += step;
      ++traj.steps;
    }
    traj.times.push_back(target);
    traj.snapshots.push_back(u);
    traj.diagnostics.push_back(diagnose(u, target));
  }
  return traj;
}

Trajectory evolve_semigroup_tv(const ScalarField& u0, double dt, double T,
                               const ResolventConfig& rcfg,
                               const std::vector<double>& snapshot_times) {
  if (!(dt > 0.0) || !(T > 0.0))
    throw std::invalid_argument("evolve_semigroup_tv: dt and T must be positive");
  std::vector<double> targets = snapshot_times;
  if (targets.empty()) targets.push_back(T);
  std::sort(targets.begin(), targets.end());
  if (targets.back() < T - 1e-15) targets.push_back(T);

  Trajectory traj;
  traj.dt_used = dt;
  ScalarField u = u0;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(u);
  traj.diagnostics.push_back(diagnose(u, 0.0));

  double t = 0.0;
  size_t next = 0;
  ResolventConfig cfg = rcfg;
  cfg.a = dt;
  while (t < T - 1e-14 && next < targets.size()) {
    ResolventSolution sol = solve_resolvent_tv(u, cfg);
    u = std::move(sol.u);
    t += dt;
    ++traj.steps;
    // record at the first step boundary reaching each target
    while (next < targets.size() && t >= targets[next] - 1e-12) {
      traj.times.push_back(t);
      traj.snapshots.push_back(u);
      traj.diagnostics.push_back(diagnose(u, t));
      ++next;
    }
  }
  return traj;
}

bool comparison_probe(const ScalarField& u0, const ScalarField& v0,
                      const EllipticOperatorF& F, const FlowConfig& cfg) {
  const long n = u0.grid.size();
  for (long k = 0; k < n; ++k)
    if (u0[k] > v0[k]) throw std::invalid_argument("comparison_probe: u0 <= v0 violated");

  FlowConfig common = cfg;
  if (!(common.dt > 0.0))
    common.dt = std::min(cfl_time_step(u0, F, cfg), cfl_time_step(v0, F, cfg));
  Trajectory tu = evolve(u0, F, common);
  Trajectory tv = evolve(v0, F, common);

  const double scale = 1.0 + norm_inf(u0) + norm_inf(v0);
  const double slack = 2.0 * 1e-9 * scale;
  for (size_t s = 0; s < tu.snapshots.size(); ++s)
    for (long k = 0; k < n; ++k)
      if (tu.snapshots[s][k] > tv.snapshots[s][k] + slack) return false;
  return true;
}

void Trajectory::write_manifest(const std::string& csv_path,
                                const std::string& field_prefix) const {
  std::ofstream f(csv_path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + csv_path);
  f << "time,file,lipschitz,min,max,mean\n";
  char buf[256];
  for (size_t s = 0; s < snapshots.size(); ++s) {
    std::string file;
    if (!field_prefix.empty()) {
      file = field_prefix + "_" + std::to_string(s) + ".tvf1";
      write_tvf1(file, snapshots[s]);
    }
    std::snprintf(buf, sizeof buf, "%.12g,%s,%.12g,%.12g,%.12g,%.12g\n",
                  diagnostics[s].time, file.c_str(), diagnostics[s].lipschitz,
                  diagnostics[s].min, diagnostics[s].max, diagnostics[s].mean);
    f << buf;
  }
}

// -- barriers -----------------------------------------------------------------------

void BarrierSpec::validate() const {
  if (!(A > 0.0) || !(q > 0.0) || !(m > 0.0) || B < 0.0)
    throw std::invalid_argument("BarrierSpec: A, q, m must be positive and B >= 0");
  if (!(m > 4.0 / q))
    throw std::invalid_argument("BarrierSpec: requires m > 4/q (m0 = 4/q)");
}

namespace {

// theta_q: identity up to q/2, saturates at q beyond 2q, monotone Hermite
// cubic in between (slope (1-t)^2 on the normalized band).
double theta_q(double s, double q) {
  const double as = std::abs(s);
  double val;
  if (as <= 0.5 * q) {
    val = as;
  } else if (as >= 2.0 * q) {
    val = q;
  } else {
    const double t = (as - 0.5 * q) / (1.5 * q);
    const double h00 = (2 * t - 3) * t * t + 1;
    const double h10 = ((t - 2) * t + 1) * t;
    const double h01 = (3 - 2 * t) * t * t;
    val = 0.5 * q * h00 + 1.5 * q * h10 + q * h01;
  }
  return s < 0 ? -val : val;
}

struct RadialBarrier {
  std::vector<double> r, w, wprime;
  double value(double rr) const {
    if (rr <= 0.0) return 0.0;
    if (rr >= r.back()) return w.back() + wprime.back() * (rr - r.back());
    const double x = rr / r.back() * (r.size() - 1);
    const size_t j = std::min(static_cast<size_t>(x), r.size() - 2);
    const double t = x - j;
    return w[j] + t * (w[j + 1] - w[j]);
  }
};

RadialBarrier tabulate_barrier(const BarrierSpec& spec, int dim, long N) {
  SmoothedEnergy e(spec.m);
  RadialBarrier tab;
  const double r_max = 0.5 * std::sqrt(static_cast<double>(dim)) + 4.0 / N;
  const long K = std::max<long>(4 * N, 2048);
  tab.r.resize(K + 1);
  tab.w.resize(K + 1);
  tab.wprime.resize(K + 1);
  const double dr = r_max / K;
  double acc = 0.0, prev = 0.0;
  for (long j = 0; j <= K; ++j) {
    const double rr = j * dr;
    const double slope = conjugate_slope(e, spec.A * rr);
    const double g = theta_q(slope, spec.q);
    if (j > 0) acc += 0.5 * dr * (prev + g);
    tab.r[j] = rr;
    tab.w[j] = acc;
    tab.wprime[j] = g;
    prev = g;
  }
  return tab;
}

}  // namespace

ScalarField build_barrier(const BarrierSpec& spec, const PeriodicGrid& grid) {
  spec.validate();
  RadialBarrier tab = tabulate_barrier(spec, grid.dim(), grid.resolution());
  ScalarField w(grid);
  const Point c = {0.5, 0.5, 0.5};
  for (long k = 0; k < grid.size(); ++k)
    w[k] = tab.value(torus_distance(grid.dim(), grid.node_position(k), c));
  return w;
}

BarrierCheckResult barrier_supersolution_check(const BarrierSpec& spec,
                                               const EllipticOperatorF& F,
                                               const PeriodicGrid& grid) {
  spec.validate();
  const int dim = grid.dim();
  SmoothedEnergy e(spec.m);
  RadialBarrier tab = tabulate_barrier(spec, dim, grid.resolution());

  // C = radial sup of |-d0 E_m(w_m)| (no periodization kinks in the radial view)
  double C = 0.0;
  {
    const size_t K = tab.r.size() - 1;
    const double dr = tab.r[1] - tab.r[0];
    std::vector<double> flux(K + 1);
    for (size_t j = 0; j <= K; ++j) {
      const double wp = tab.wprime[j];
      flux[j] = wp / std::sqrt(wp * wp + 1.0 / (spec.m * spec.m)) + 2.0 * wp / spec.m;
    }
    const double fp0 = (flux[1] - flux[0]) / dr;
    C = std::abs(dim * fp0);
    for (size_t j = 1; j < K; ++j) {
      const double fp = (flux[j + 1] - flux[j - 1]) / (2.0 * dr);
      const double div = fp + (dim - 1) * flux[j] / tab.r[j];
      C = std::max(C, std::abs(div));
    }
  }

  // sizing rule B = max |F(p, s)| over |p| <= q, |s| <= C
  double B = spec.B;
  if (B <= 0.0) {
    std::mt19937_64 rng(0xBa55);
    std::uniform_real_distribution<double> us(-1.0, 1.0);
    double p[3] = {0, 0, 0};
    auto consider = [&](const double* pp, double s) {
      B = std::max(B, std::abs(F(pp, dim, s)));
    };
    for (double pmag : {0.0, 0.5 * spec.q, spec.q})
      for (int axis = 0; axis < dim; ++axis)
        for (double s : {-C, 0.0, C}) {
          double pe[3] = {0, 0, 0};
          pe[axis] = pmag;
          consider(pe, s);
        }
    for (int trial = 0; trial < 2048; ++trial) {
      double q2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        p[a] = us(rng) * spec.q;
        q2 += p[a] * p[a];
      }
      if (q2 > spec.q * spec.q) {
        const double sc = spec.q / std::sqrt(q2);
        for (int a = 0; a < dim; ++a) p[a] *= sc;
      }
      consider(p, us(rng) * C);
    }
  }

  ScalarField w(grid);
  const Point c = {0.5, 0.5, 0.5};
  for (long k = 0; k < grid.size(); ++k)
    w[k] = tab.value(torus_distance(dim, grid.node_position(k), c));

  ScalarField op = operator_Em(w, e);
  VectorField gc(grid);
  central_gradient(w, gc);

  BarrierCheckResult res;
  res.B = B;
  res.C = C;
  res.min_residual = kFarAway;
  double p[3] = {0, 0, 0};
  for (long k = 0; k < grid.size(); ++k) {
    for (int a = 0; a < dim; ++a) p[a] = gc.comp[a][k];
    const double r = B + F(p, dim, op[k]);
    if (r < res.min_residual) {
      res.min_residual = r;
      res.worst_node = k;
    }
  }
  return res;
}

}  // namespace tvflow
