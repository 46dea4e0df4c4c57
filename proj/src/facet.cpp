#include "tvflow/facet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tvflow {

// -- primitives -------------------------------------------------------------------

double Primitive::signed_distance(int dim, const Point& x) const {
  if (kind == Kind::Ball) {
    return torus_distance(dim, x, center) - radius;
  }
  // stadium: rounded box, Minkowski sum of the half_extent box and a ball
  double out_sq = 0.0;
  double in_max = -kFarAway;
  for (int a = 0; a < dim; ++a) {
    const double q = std::abs(wrap_delta(x[a] - center[a])) - half_extent[a];
    if (q > 0.0) out_sq += q * q;
    in_max = std::max(in_max, q);
  }
  return std::sqrt(out_sq) + std::min(in_max, 0.0) - radius;
}

double Primitive::reach(int dim) const {
  double outer = radius;
  if (kind == Kind::Stadium) {
    for (int a = 0; a < dim; ++a) outer = std::max(outer, half_extent[a] + radius);
  }
  return std::min(radius, 0.5 - outer);
}

double SideSpec::distance(int dim, const Point& x, double /*big*/) const {
  double best = intersect ? -kFarAway : kFarAway;
  for (const auto& p : prims) {
    double d = p.signed_distance(dim, x);
    if (p.complement) d = -d;
    best = intersect ? std::max(best, d) : std::min(best, d);
  }
  return best;
}

PairSpec parse_pair_description(const std::string& text, int dim) {
  PairSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    auto fail = [&](const std::string& why) {
      throw ConstructionError("pair description line " + std::to_string(lineno) + ": " + why);
    };
    Primitive p;
    int ncoef;
    if (kind == "ball") {
      p.kind = Primitive::Kind::Ball;
      ncoef = dim + 1;
    } else if (kind == "stadium") {
      p.kind = Primitive::Kind::Stadium;
      ncoef = 2 * dim + 1;
    } else {
      fail("unknown primitive '" + kind + "'");
      continue;
    }
    std::vector<double> coef;
    std::string tok;
    bool side_minus = false, side_seen = false;
    while (ls >> tok) {
      if (tok.rfind("side=", 0) == 0) {
        const std::string s = tok.substr(5);
        if (s == "minus") side_minus = true;
        else if (s == "plus") side_minus = false;
        else fail("bad side '" + s + "'");
        side_seen = true;
      } else if (tok.rfind("op=", 0) == 0) {
        const std::string s = tok.substr(3);
        if (s == "complement") p.complement = true;
        else if (s != "union") fail("bad op '" + s + "'");
      } else {
        try {
          coef.push_back(std::stod(tok));
        } catch (...) {
          fail("bad number '" + tok + "'");
        }
      }
    }
    if (static_cast<int>(coef.size()) != ncoef)
      fail("expected " + std::to_string(ncoef) + " numbers, got " +
           std::to_string(coef.size()));
    if (!side_seen) fail("missing side=");
    for (int a = 0; a < dim; ++a) p.center[a] = coef[a] - std::floor(coef[a]);
    if (p.kind == Primitive::Kind::Stadium)
      for (int a = 0; a < dim; ++a) p.half_extent[a] = coef[dim + a];
    p.radius = coef.back();
    (side_minus ? spec.minus_side : spec.plus_side).prims.push_back(p);
  }
  return spec;
}

// -- smooth pair -------------------------------------------------------------------

double SmoothPair::d_minus_at(const Point& x) const {
  if (minus_is_whole_torus) return -kFarAway;
  return spec.minus_side.distance(grid.dim(), x, kFarAway);
}

double SmoothPair::d_plus_at(const Point& x) const {
  if (plus_is_empty) return kFarAway;
  return spec.plus_side.distance(grid.dim(), x, kFarAway);
}

double SmoothPair::delta() const {
  if (!has_boundary()) return 0.25;
  return std::min({reach_minus, reach_plus, gap}) / 3.0;
}

ScalarField SmoothPair::facet_mask() const {
  ScalarField m(grid);
  for (long k = 0; k < grid.size(); ++k)
    m[k] = (d_minus[k] <= 0.0 && d_plus[k] >= 0.0) ? 1.0 : 0.0;
  return m;
}

SmoothPair make_pair(const PairSpec& spec, const PeriodicGrid& grid) {
  SmoothPair pair;
  pair.grid = grid;
  pair.spec = spec;
  pair.minus_is_whole_torus = spec.minus_side.prims.empty();
  pair.plus_is_empty = spec.plus_side.prims.empty();
  const int dim = grid.dim();
  const double h = grid.spacing();

  for (const auto* side : {&spec.minus_side, &spec.plus_side}) {
    for (const auto& p : *side) {
      if (!(p.radius > 0.0))
        throw ConstructionError("make_pair: primitive radius must be positive");
      double outer = p.radius;
      if (p.kind == Primitive::Kind::Stadium)
        for (int a = 0; a < dim; ++a) outer = std::max(outer, p.half_extent[a] + p.radius);
      if (!(outer < 0.5))
        throw ConstructionError(
            "make_pair: primitive does not fit in the fundamental domain "
            "(outer radius >= 1/2)");
      if (!(p.reach(dim) > 0.0))
        throw ConstructionError("make_pair: primitive has non-positive reach");
    }
  }

  pair.d_minus = ScalarField(grid, -kFarAway);
  pair.d_plus = ScalarField(grid, kFarAway);
  for (long k = 0; k < grid.size(); ++k) {
    const Point x = grid.node_position(k);
    if (!pair.minus_is_whole_torus) pair.d_minus[k] = pair.d_minus_at(x);
    if (!pair.plus_is_empty) pair.d_plus[k] = pair.d_plus_at(x);
  }

  auto side_reach = [&](const SideSpec& s) {
    double r = kFarAway;
    for (const auto& p : s.prims) r = std::min(r, p.reach(dim));
    return r;
  };
  pair.reach_minus = side_reach(spec.minus_side);
  pair.reach_plus = side_reach(spec.plus_side);

  if (pair.minus_is_whole_torus || pair.plus_is_empty) {
    pair.gap = kFarAway;
  } else {
    double g = kFarAway;
    for (long k = 0; k < grid.size(); ++k)
      g = std::min(g, std::abs(pair.d_minus[k]) + std::abs(pair.d_plus[k]));
    pair.gap = g;
  }

  // invariants: Omega_+ inside Omega_-, nonempty facet, resolvable gap
  bool facet_nonempty = false;
  for (long k = 0; k < grid.size(); ++k) {
    if (pair.d_plus[k] < pair.d_minus[k] - 1e-9)
      throw ConstructionError("make_pair: Omega_+ not contained in Omega_- "
                              "(d_plus < d_minus at a node)");
    if (pair.d_minus[k] <= 0.0 && pair.d_plus[k] >= 0.0) facet_nonempty = true;
  }
  if (!facet_nonempty)
    throw ConstructionError("make_pair: facet D = cl(Omega_-) \\ Omega_+ is empty");
  if (!(pair.gap > 4.0 * h))
    throw ConstructionError("make_pair: boundary gap " + std::to_string(pair.gap) +
                            " below the 4h resolution guard");
  return pair;
}

SmoothPair make_pair(const std::string& description, const PeriodicGrid& grid) {
  return make_pair(parse_pair_description(description, grid.dim()), grid);
}

SmoothPair swapped_pair(const SmoothPair& pair) {
  auto complement_of = [](const SideSpec& s) {
    SideSpec out;
    out.prims = s.prims;
    for (auto& p : out.prims) p.complement = !p.complement;
    out.intersect = !s.intersect;
    return out;
  };
  PairSpec spec;
  // new minus side = complement of old plus side; whole torus when Omega_+ empty
  if (!pair.plus_is_empty) spec.minus_side = complement_of(pair.spec.plus_side);
  // new plus side = complement of old minus side; empty when Omega_- is everything
  if (!pair.minus_is_whole_torus) spec.plus_side = complement_of(pair.spec.minus_side);
  return make_pair(spec, pair.grid);
}

// -- support function and Cahn-Hoffman field ------------------------------------------

SupportFunctionField build_support_function(const SmoothPair& pair) {
  const PeriodicGrid& g = pair.grid;
  const double h = g.spacing();
  const double delta = pair.delta();
  if (pair.has_boundary() && delta < 2.0 * h)
    throw ConstructionError("build_support_function: delta = " + std::to_string(delta) +
                            " is below 2h; refine the grid");
  SupportFunctionField out;
  out.delta = delta;
  out.psi = ScalarField(g);
  const double cap = 0.5 * delta;
  auto zeta = [cap](double s) { return std::clamp(s, -cap, cap); };
  for (long k = 0; k < g.size(); ++k) {
    const double dm = pair.d_minus[k];
    const double dp = pair.d_plus[k];
    if (dp < 0.0)
      out.psi[k] = -zeta(dp);
    else if (dm <= 0.0)
      out.psi[k] = 0.0;
    else
      out.psi[k] = -zeta(dm);
  }
  const double lip = lipschitz_seminorm(out.psi);
  if (lip > 1.0 + 5.0 * h)
    throw ConstructionError("build_support_function: Lipschitz seminorm " +
                            std::to_string(lip) + " exceeds 1 + 5h");
  return out;
}

namespace {

// Ramp slope: 1 up to delta/2, Hermite taper to 0 at delta (theta itself
// rises to 3 delta/4 and saturates).
double theta_prime(double sigma, double delta) {
  const double s = std::abs(sigma);
  if (s <= 0.5 * delta) return 1.0;
  if (s >= delta) return 0.0;
  return 1.0 - (s - 0.5 * delta) / (0.5 * delta);
}

// d/dx_i of a side's distance at x: analytic for an active ball branch,
// central differences otherwise.
double side_distance_partial(const SmoothPair& pair, bool minus_side, const Point& x,
                             int axis, double h) {
  const int dim = pair.grid.dim();
  const SideSpec& side = minus_side ? pair.spec.minus_side : pair.spec.plus_side;
  int active = -1;
  double best = side.intersect ? -kFarAway : kFarAway;
  for (size_t j = 0; j < side.prims.size(); ++j) {
    double d = side.prims[j].signed_distance(dim, x);
    if (side.prims[j].complement) d = -d;
    if (side.intersect ? (d > best) : (d < best)) {
      best = d;
      active = static_cast<int>(j);
    }
  }
  if (active < 0) return 0.0;
  const Primitive& p = side.prims[static_cast<size_t>(active)];
  const double sign = p.complement ? -1.0 : 1.0;
  if (p.kind == Primitive::Kind::Ball) {
    const double rho = torus_distance(dim, x, p.center);
    if (rho < 1e-12) return 0.0;
    return sign * wrap_delta(x[axis] - p.center[axis]) / rho;
  }
  Point xp = x, xm = x;
  xp[axis] += h;
  xm[axis] -= h;
  return sign *
         (p.signed_distance(dim, xp) - p.signed_distance(dim, xm)) / (2.0 * h);
}

}  // namespace

VectorField build_cahn_hoffman(const SmoothPair& pair) {
  const PeriodicGrid& g = pair.grid;
  const int dim = g.dim();
  const double h = g.spacing();
  const double delta = pair.delta();
  VectorField z(g, 0.0);
  if (!pair.has_boundary()) return z;  // z = 0 on the whole-torus facet

  for (int a = 0; a < dim; ++a) {
    for (long k = 0; k < g.size(); ++k) {
      Point x = g.node_position(k);
      x[a] += 0.5 * h;  // forward-staggered position of component a
      double val = 0.0;
      const double dm = pair.d_minus_at(x);
      if (std::abs(dm) < delta)
        val -= theta_prime(dm, delta) * side_distance_partial(pair, true, x, a, h);
      const double dp = pair.d_plus_at(x);
      if (std::abs(dp) < delta)
        val -= theta_prime(dp, delta) * side_distance_partial(pair, false, x, a, h);
      z.comp[a][k] = val;
    }
  }
  const double zmax = max_pointwise_norm(z);
  if (zmax > 1.0 + 5.0 * h)
    throw ConstructionError("build_cahn_hoffman: |z| = " + std::to_string(zmax) +
                            " exceeds 1 + 5h; gap or resolution insufficient");
  return z;
}

// -- morphology -----------------------------------------------------------------------

namespace {

constexpr double kDtInf = 1e20;

// Lower-envelope squared distance transform of one sample line (length n),
// in units of cells squared.
void dt_line(const double* f, double* d, long n, std::vector<long>& v,
             std::vector<double>& zbuf) {
  v.assign(static_cast<size_t>(n), 0);
  zbuf.assign(static_cast<size_t>(n + 1), 0.0);
  long k = 0;
  v[0] = 0;
  zbuf[0] = -kDtInf;
  zbuf[1] = kDtInf;
  for (long q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const long p = v[static_cast<size_t>(k)];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
      if (s <= zbuf[static_cast<size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    zbuf[static_cast<size_t>(k)] = s;
    zbuf[static_cast<size_t>(k + 1)] = kDtInf;
  }
  k = 0;
  for (long q = 0; q < n; ++q) {
    while (zbuf[static_cast<size_t>(k + 1)] < q) ++k;
    const long p = v[static_cast<size_t>(k)];
    d[q] = (q - p) * (q - p) + f[p];
  }
}

}  // namespace

ScalarField distance_to_set(const ScalarField& mask) {
  const PeriodicGrid& g = mask.grid;
  const long N = g.resolution();
  ScalarField sq(g);
  for (long k = 0; k < g.size(); ++k) sq[k] = (mask[k] >= 0.5) ? 0.0 : kDtInf;

  std::vector<double> line(static_cast<size_t>(3 * N));
  std::vector<double> out(static_cast<size_t>(3 * N));
  std::vector<long> v;
  std::vector<double> zbuf;

  for (int a = 0; a < g.dim(); ++a) {
    const long sa = g.stride(a);
    const long na = g.extent(a);
    // iterate over all lines along axis a
    const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
    for (long i0 = 0; i0 < (a == 0 ? 1 : n0); ++i0)
      for (long i1 = 0; i1 < (a == 1 ? 1 : n1); ++i1)
        for (long i2 = 0; i2 < (a == 2 ? 1 : n2); ++i2) {
          const long base = g.index(i0, i1, i2);
          for (long j = 0; j < na; ++j) {
            const double val = sq[base + j * sa];
            line[static_cast<size_t>(j)] = val;
            line[static_cast<size_t>(j + na)] = val;
            line[static_cast<size_t>(j + 2 * na)] = val;
          }
          dt_line(line.data(), out.data(), 3 * na, v, zbuf);
          for (long j = 0; j < na; ++j) sq[base + j * sa] = out[static_cast<size_t>(j + na)];
        }
  }
  const double h2 = g.spacing() * g.spacing();
  for (long k = 0; k < g.size(); ++k)
    sq[k] = (sq[k] >= kDtInf) ? kFarAway : std::sqrt(sq[k] * h2);
  return sq;
}

ScalarField dilate_erode(const ScalarField& mask, double rho) {
  if (rho == 0.0) return mask;
  ScalarField out(mask.grid);
  if (rho > 0.0) {
    ScalarField d = distance_to_set(mask);
    const double thr = rho * (1.0 + 1e-12) + 1e-15;
    for (long k = 0; k < mask.grid.size(); ++k) out[k] = (d[k] <= thr) ? 1.0 : 0.0;
  } else {
    ScalarField inv(mask.grid);
    for (long k = 0; k < mask.grid.size(); ++k) inv[k] = 1.0 - mask[k];
    ScalarField d = distance_to_set(inv);
    const double thr = -rho * (1.0 + 1e-12) + 1e-15;
    for (long k = 0; k < mask.grid.size(); ++k) out[k] = (d[k] > thr) ? 1.0 : 0.0;
  }
  return out;
}

// -- curvature estimates ----------------------------------------------------------------

double CurvatureEstimate::min_on_mask() const {
  double m = kFarAway;
  for (long k = 0; k < mask.grid.size(); ++k)
    if (mask[k] >= 0.5) m = std::min(m, lambda[k]);
  return m;
}

double CurvatureEstimate::max_on_mask() const {
  double m = -kFarAway;
  for (long k = 0; k < mask.grid.size(); ++k)
    if (mask[k] >= 0.5) m = std::max(m, lambda[k]);
  return m;
}

double CurvatureEstimate::mean_on_mask() const {
  double s = 0.0;
  long c = 0;
  for (long k = 0; k < mask.grid.size(); ++k)
    if (mask[k] >= 0.5) {
      s += lambda[k];
      ++c;
    }
  return c > 0 ? s / c : 0.0;
}

long CurvatureEstimate::mask_count() const {
  long c = 0;
  for (long k = 0; k < mask.grid.size(); ++k)
    if (mask[k] >= 0.5) ++c;
  return c;
}

void CurvatureEstimate::write_summary_csv(const std::string& path, double lambda_const,
                                          bool calibrable) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_summary_csv: cannot open " + path);
  f << "method,min,max,mean,lambda,calibrable\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g,%.12g,%d\n", method.c_str(),
                min_on_mask(), max_on_mask(), mean_on_mask(), lambda_const,
                calibrable ? 1 : 0);
  f << buf;
}

CurvatureEstimate nonlocal_curvature_resolvent(const SmoothPair& pair,
                                               const std::vector<double>& a_levels,
                                               double eps, const ResolventConfig& cfg) {
  if (!(eps > 0.0))
    throw std::invalid_argument("nonlocal_curvature_resolvent: eps must be positive");
  if (a_levels.size() < 2)
    throw std::invalid_argument("nonlocal_curvature_resolvent: need at least two a-levels");
  for (size_t j = 1; j < a_levels.size(); ++j)
    if (!(a_levels[j] < a_levels[j - 1]) || !(a_levels[j] > 0.0))
      throw std::invalid_argument(
          "nonlocal_curvature_resolvent: a-levels must be positive and strictly decreasing");
  const double a_lo = a_levels.back();
  if (a_lo < 10.0 * cfg.tolerance)
    throw std::invalid_argument(
        "nonlocal_curvature_resolvent: smallest a below 10x solver tolerance; "
        "the quotient would be noise-dominated");

  const PeriodicGrid& g = pair.grid;
  const double h = g.spacing();
  SupportFunctionField sf = build_support_function(pair);
  ScalarField f(g);
  for (long k = 0; k < g.size(); ++k) f[k] = eps * sf.psi[k];

  CurvatureEstimate est;
  est.method = "resolvent-quotient";
  est.eps = eps;
  est.a_levels = a_levels;
  est.mask = dilate_erode(pair.facet_mask(), -2.0 * h);

  ScalarField q_hi(g), q_lo(g);
  for (size_t j = 0; j < a_levels.size(); ++j) {
    ResolventConfig lc = cfg;
    lc.a = a_levels[j];
    ResolventSolution sol = solve_resolvent_tv(f, lc);
    est.iterations += sol.iterations;
    est.final_residual = std::max(est.final_residual, sol.final_residual);
    if (j + 2 == a_levels.size()) q_hi = subgradient_quotient(f, sol, lc.a);
    if (j + 1 == a_levels.size()) q_lo = subgradient_quotient(f, sol, lc.a);
  }

  const double a_hi = a_levels[a_levels.size() - 2];
  const double w_rich = a_lo / (a_hi - a_lo);
  est.lambda = ScalarField(g);
  double max_diff = 0.0, max_abs = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    est.lambda[k] = q_lo[k] + (q_lo[k] - q_hi[k]) * w_rich;
    if (est.mask[k] >= 0.5) {
      max_diff = std::max(max_diff, std::abs(q_lo[k] - q_hi[k]));
      max_abs = std::max(max_abs, std::abs(est.lambda[k]));
    }
  }
  est.tolerance = max_diff + cfg.tolerance / a_lo + 2.0 * h * max_abs;
  return est;
}

CurvatureEstimate nonlocal_curvature_obstacle(const SmoothPair& pair,
                                              const ObstacleConfig& cfg) {
  const PeriodicGrid& g = pair.grid;
  const int dim = g.dim();
  const long n = g.size();
  const double h = g.spacing();

  VectorField z = build_cahn_hoffman(pair);
  // clamp the initialization to the exact unit ball so the frozen ring is feasible
  for (long k = 0; k < n; ++k) {
    double q = 0.0;
    for (int a = 0; a < dim; ++a) q += z.comp[a][k] * z.comp[a][k];
    if (q > 1.0) {
      const double inv = 1.0 / std::sqrt(q);
      for (int a = 0; a < dim; ++a) z.comp[a][k] *= inv;
    }
  }

  // free components: staggered points strictly inside D, beyond the one-cell
  // ring straddling either boundary
  std::vector<std::vector<char>> free_comp(dim, std::vector<char>(n, 0));
  for (int a = 0; a < dim; ++a)
    for (long k = 0; k < n; ++k) {
      Point x = g.node_position(k);
      x[a] += 0.5 * h;
      const double dm = pair.d_minus_at(x);
      const double dp = pair.d_plus_at(x);
      free_comp[a][k] = (dm < -h && dp > h) ? 1 : 0;
    }

  ScalarField M = pair.facet_mask();
  ScalarField w(g), wm(g);
  VectorField grad(g);
  const double coef = h * h / (4.0 * dim);

  long it = 0;
  double change = kFarAway;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    divergence_backward(z, w);
    for (long k = 0; k < n; ++k) wm[k] = M[k] >= 0.5 ? w[k] : 0.0;
    gradient_forward(wm, grad);
    double max_change = 0.0;
    for (long k = 0; k < n; ++k) {
      double frozen_sq = 0.0, free_sq = 0.0;
      double updated[3];
      for (int a = 0; a < dim; ++a) {
        if (free_comp[a][k]) {
          updated[a] = z.comp[a][k] + coef * grad.comp[a][k];
          free_sq += updated[a] * updated[a];
        } else {
          updated[a] = z.comp[a][k];
          frozen_sq += updated[a] * updated[a];
        }
      }
      if (frozen_sq + free_sq > 1.0 && free_sq > 0.0) {
        const double scale = std::sqrt(std::max(0.0, 1.0 - frozen_sq) / free_sq);
        for (int a = 0; a < dim; ++a)
          if (free_comp[a][k]) updated[a] *= scale;
      }
      for (int a = 0; a < dim; ++a) {
        if (free_comp[a][k])
          max_change = std::max(max_change, std::abs(updated[a] - z.comp[a][k]));
        z.comp[a][k] = updated[a];
      }
    }
    change = max_change;
    if (it % cfg.check_interval == 0 && change <= cfg.tolerance) break;
  }
  if (change > cfg.tolerance)
    throw SolverError("nonlocal_curvature_obstacle: projected gradient stagnated at "
                      "max |dz| = " + std::to_string(change));

  CurvatureEstimate est;
  est.method = "direct-obstacle";
  est.iterations = it;
  est.final_residual = change;
  est.mask = dilate_erode(pair.facet_mask(), -2.0 * h);
  divergence_backward(z, w);
  est.lambda = w;
  double max_abs = 0.0;
  for (long k = 0; k < n; ++k)
    if (est.mask[k] >= 0.5) max_abs = std::max(max_abs, std::abs(w[k]));
  est.tolerance = 8.0 * h * max_abs;
  return est;
}

// -- measurements --------------------------------------------------------------------

namespace {

double perimeter_1d(const ScalarField& d) {
  const long N = d.grid.resolution();
  long crossings = 0;
  for (long k = 0; k < N; ++k) {
    const long kp = (k + 1 == N) ? 0 : k + 1;
    if ((d[k] < 0.0) != (d[kp] < 0.0)) ++crossings;
  }
  return static_cast<double>(crossings);
}

double perimeter_marching_squares(const ScalarField& d) {
  const PeriodicGrid& g = d.grid;
  const long N = g.resolution();
  const double h = g.spacing();
  double length = 0.0;
  for (long i = 0; i < N; ++i) {
    const long ip = (i + 1 == N) ? 0 : i + 1;
    for (long j = 0; j < N; ++j) {
      const long jp = (j + 1 == N) ? 0 : j + 1;
      const double a = d[g.index(i, j)];
      const double b = d[g.index(i, jp)];
      const double c = d[g.index(ip, jp)];
      const double e = d[g.index(ip, j)];
      // crossings on edges a-b, b-c, e-c, a-e (cell coordinates in [0,1]^2)
      double px[4], py[4];
      int cnt = 0;
      auto cross = [&](double u, double v, double x0, double y0, double x1, double y1) {
        if ((u < 0.0) == (v < 0.0)) return;
        const double t = u / (u - v);
        px[cnt] = x0 + t * (x1 - x0);
        py[cnt] = y0 + t * (y1 - y0);
        ++cnt;
      };
      cross(a, b, 0, 0, 0, 1);
      cross(b, c, 0, 1, 1, 1);
      cross(e, c, 1, 0, 1, 1);
      cross(a, e, 0, 0, 1, 0);
      if (cnt == 2) {
        length += std::hypot(px[1] - px[0], py[1] - py[0]);
      } else if (cnt == 4) {
        // saddle cell: resolve the pairing with the center sign
        const double center = 0.25 * (a + b + c + e);
        if ((center < 0.0) == (a < 0.0)) {
          length += std::hypot(px[1] - px[0], py[1] - py[0]);
          length += std::hypot(px[3] - px[2], py[3] - py[2]);
        } else {
          length += std::hypot(px[3] - px[0], py[3] - py[0]);
          length += std::hypot(px[2] - px[1], py[2] - py[1]);
        }
      }
    }
  }
  return length * h;
}

double perimeter_delta_integral(const ScalarField& d) {
  const PeriodicGrid& g = d.grid;
  const double h = g.spacing();
  const double eps = 1.5 * h;
  VectorField gr = gradient_forward(d);
  double s = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    if (std::abs(d[k]) >= eps) continue;
    double q = 0.0;
    for (const auto& c : gr.comp) q += c[k] * c[k];
    const double delta = (1.0 + std::cos(M_PI * d[k] / eps)) / (2.0 * eps);
    s += delta * std::sqrt(q);
  }
  double hn = 1.0;
  for (int a = 0; a < g.dim(); ++a) hn *= h;
  return s * hn;
}

}  // namespace

double level_zero_perimeter(const ScalarField& d) {
  double dmin = kFarAway;
  for (long k = 0; k < d.grid.size(); ++k) dmin = std::min(dmin, std::abs(d[k]));
  if (dmin > 1.0) return 0.0;  // sentinel field, no boundary
  switch (d.grid.dim()) {
    case 1: return perimeter_1d(d);
    case 2: return perimeter_marching_squares(d);
    default: return perimeter_delta_integral(d);
  }
}

double facet_volume(const SmoothPair& pair) {
  const PeriodicGrid& g = pair.grid;
  const double h = g.spacing();
  const double eps = 1.5 * h;
  double s = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    const double dx = std::max(pair.d_minus[k], -pair.d_plus[k]);  // D = {dx <= 0}
    double H;
    if (-dx < -eps) H = 0.0;
    else if (-dx > eps) H = 1.0;
    else H = 0.5 * (1.0 + (-dx) / eps + std::sin(M_PI * (-dx) / eps) / M_PI);
    s += H;
  }
  double hn = 1.0;
  for (int a = 0; a < g.dim(); ++a) hn *= h;
  return s * hn;
}

CalibrabilityResult calibrability_check(const CurvatureEstimate& est,
                                        const SmoothPair& pair, double band) {
  CalibrabilityResult res;
  const double per_minus =
      pair.minus_is_whole_torus ? 0.0 : level_zero_perimeter(pair.d_minus);
  const double per_plus = pair.plus_is_empty ? 0.0 : level_zero_perimeter(pair.d_plus);
  const double vol = facet_volume(pair);
  res.lambda_const = (per_plus - per_minus) / vol;
  for (long k = 0; k < est.mask.grid.size(); ++k)
    if (est.mask[k] >= 0.5)
      res.max_deviation =
          std::max(res.max_deviation, std::abs(est.lambda[k] - res.lambda_const));
  res.calibrable = res.max_deviation <= band;
  return res;
}

MonotonicityResult monotonicity_check(const SmoothPair& p1, const SmoothPair& p2,
                                      const CurvatureEstimate& e1,
                                      const CurvatureEstimate& e2) {
  if (!(p1.grid == p2.grid))
    throw std::invalid_argument("monotonicity_check: grid mismatch");
  const long n = p1.grid.size();
  for (long k = 0; k < n; ++k) {
    if (p2.d_minus[k] > p1.d_minus[k] + 1e-9 || p2.d_plus[k] > p1.d_plus[k] + 1e-9)
      throw std::invalid_argument(
          "monotonicity_check: pairs are not nested (Omega1 must lie inside Omega2)");
  }
  MonotonicityResult res;
  const double slack = e1.tolerance + e2.tolerance;
  for (long k = 0; k < n; ++k) {
    if (e1.mask[k] < 0.5 || e2.mask[k] < 0.5) continue;
    ++res.nodes_compared;
    res.max_violation = std::max(res.max_violation, e1.lambda[k] - e2.lambda[k]);
  }
  res.ordered = res.max_violation <= slack;
  return res;
}

ScalarField inradius_field(const SmoothPair& pair) {
  const PeriodicGrid& g = pair.grid;
  const double h = g.spacing();
  ScalarField D = pair.facet_mask();
  ScalarField Dc(g);
  bool complement_nonempty = false;
  for (long k = 0; k < g.size(); ++k) {
    Dc[k] = 1.0 - D[k];
    if (Dc[k] >= 0.5) complement_nonempty = true;
  }
  ScalarField rho(g, 0.5 * h);
  if (!complement_nonempty) {
    // D is the whole torus; every radius up to the 1/4 cap fits
    for (long k = 0; k < g.size(); ++k) rho[k] = 0.25;
    return rho;
  }
  ScalarField clearance = distance_to_set(Dc);
  const long jmax = static_cast<long>(std::floor(0.25 / h + 1e-9));
  ScalarField centers(g);
  for (long j = 1; j <= jmax; ++j) {
    const double r = j * h;
    bool any = false;
    for (long k = 0; k < g.size(); ++k) {
      centers[k] = (clearance[k] >= r - 1e-12) ? 1.0 : 0.0;
      any = any || centers[k] >= 0.5;
    }
    if (!any) break;
    ScalarField covered = distance_to_set(centers);
    for (long k = 0; k < g.size(); ++k)
      if (covered[k] < r - 1e-12) rho[k] = r;
  }
  return rho;
}

CurvatureBoundResult curvature_bound_check(const CurvatureEstimate& est,
                                           const SmoothPair& pair) {
  ScalarField rho = inradius_field(pair);
  const double n = static_cast<double>(pair.grid.dim());
  CurvatureBoundResult res;
  for (long k = 0; k < pair.grid.size(); ++k) {
    if (est.mask[k] < 0.5) continue;
    const double bound = n / rho[k];
    const double excess = std::abs(est.lambda[k]) - bound;
    res.max_excess = std::max(res.max_excess, excess);
    res.max_relative_excess = std::max(res.max_relative_excess, excess / bound);
  }
  return res;
}

}  // namespace tvflow
