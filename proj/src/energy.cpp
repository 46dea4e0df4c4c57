#include "tvflow/energy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tvflow {

double SmoothedEnergy::value(const double* p, int dim) const {
  double q = 0.0;
  for (int a = 0; a < dim; ++a) q += p[a] * p[a];
  return std::sqrt(q + 1.0 / (m * m)) + q / m;
}

double SmoothedEnergy::gradient_factor(double p_norm_sq) const {
  return 1.0 / std::sqrt(p_norm_sq + 1.0 / (m * m)) + 2.0 / m;
}

double w_value(const SmoothedEnergy& e, const double* p, int dim) {
  return e.value(p, dim);
}

void w_gradient(const SmoothedEnergy& e, const double* p, int dim, double* out) {
  double q = 0.0;
  for (int a = 0; a < dim; ++a) q += p[a] * p[a];
  const double c = e.gradient_factor(q);
  for (int a = 0; a < dim; ++a) out[a] = c * p[a];
}

double tv_energy(const ScalarField& u) {
  const PeriodicGrid& g = u.grid;
  VectorField grad = gradient_forward(u);
  const long n = g.size();
  double s = 0.0;
  for (long k = 0; k < n; ++k) {
    double q = 0.0;
    for (const auto& c : grad.comp) q += c[k] * c[k];
    s += std::sqrt(q);
  }
  double hn = 1.0;
  for (int a = 0; a < g.dim(); ++a) hn *= g.spacing();
  return s * hn;
}

void operator_Em(const ScalarField& u, const SmoothedEnergy& e, ScalarField& out,
                 VectorField& scratch) {
  gradient_forward(u, scratch);
  const long n = u.grid.size();
  const int dim = u.grid.dim();
  if (dim == 2) {
    double* zx = scratch.comp[0].v.data();
    double* zy = scratch.comp[1].v.data();
    for (long k = 0; k < n; ++k) {
      const double c = e.gradient_factor(zx[k] * zx[k] + zy[k] * zy[k]);
      zx[k] *= c;
      zy[k] *= c;
    }
  } else {
    for (long k = 0; k < n; ++k) {
      double q = 0.0;
      for (int a = 0; a < dim; ++a) q += scratch.comp[a][k] * scratch.comp[a][k];
      const double c = e.gradient_factor(q);
      for (int a = 0; a < dim; ++a) scratch.comp[a][k] *= c;
    }
  }
  divergence_backward(scratch, out);
}

ScalarField operator_Em(const ScalarField& u, const SmoothedEnergy& e) {
  ScalarField out(u.grid);
  VectorField scratch(u.grid);
  operator_Em(u, e, out, scratch);
  return out;
}

// -- convex conjugate ----------------------------------------------------------

double conjugate_slope(const SmoothedEnergy& e, double r) {
  if (r < 0.0) throw std::invalid_argument("conjugate_slope: negative radius");
  if (r == 0.0) return 0.0;
  const double m = e.m;
  const double minv2 = 1.0 / (m * m);
  auto slope_of = [&](double s) { return s / std::sqrt(s * s + minv2) + 2.0 * s / m; };
  // slope_of(s) >= 2s/m gives the upper bracket; monotone increasing in s.
  double lo = 0.0, hi = 0.5 * m * r + 1e-30;
  double s = std::min(hi, r / (m + 2.0 / m) + 0.5 * std::max(0.0, r - 1.0) * m);
  const int max_iter = 200;
  for (int it = 0; it < max_iter; ++it) {
    const double root = std::sqrt(s * s + minv2);
    const double f = s / root + 2.0 * s / m - r;
    if (std::abs(f) <= 1e-14 * (1.0 + r)) return s;
    if (f > 0.0) hi = s; else lo = s;
    const double df = minv2 / (root * root * root) + 2.0 / m;
    double step = s - f / df;
    s = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
  }
  const double res = std::abs(slope_of(s) - r);
  if (res > 1e-9 * (1.0 + r))
    throw std::runtime_error("conjugate_slope: Newton failed at r=" + std::to_string(r) +
                             " residual=" + std::to_string(res));
  return s;
}

RadialProfile fenchel_conjugate_radial(const SmoothedEnergy& e, double r_max, int K) {
  if (!(r_max > 0.0)) throw std::invalid_argument("fenchel_conjugate_radial: r_max must be positive");
  if (K < 16) throw std::invalid_argument("fenchel_conjugate_radial: need K >= 16 samples");
  RadialProfile prof;
  prof.radii.resize(K + 1);
  prof.values.resize(K + 1);
  prof.slopes.resize(K + 1);
  for (int j = 0; j <= K; ++j) {
    const double r = r_max * static_cast<double>(j) / K;
    const double s = conjugate_slope(e, r);
    const double p[3] = {s, 0.0, 0.0};
    prof.radii[j] = r;
    prof.slopes[j] = s;
    prof.values[j] = s * r - e.value(p, 1);
  }
  return prof;
}

static size_t bracket(const std::vector<double>& xs, double x) {
  size_t lo = 0, hi = xs.size() - 1;
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (xs[mid] <= x) lo = mid; else hi = mid;
  }
  return lo;
}

double RadialProfile::value(double r) const {
  if (r <= radii.front()) return values.front();
  if (r >= radii.back())
    return values.back() + slopes.back() * (r - radii.back());
  const size_t j = bracket(radii, r);
  const double t = (r - radii[j]) / (radii[j + 1] - radii[j]);
  return values[j] + t * (values[j + 1] - values[j]);
}

double RadialProfile::slope(double r) const {
  if (r <= radii.front()) return slopes.front();
  if (r >= radii.back()) return slopes.back();
  const size_t j = bracket(radii, r);
  const double t = (r - radii[j]) / (radii[j + 1] - radii[j]);
  return slopes[j] + t * (slopes[j + 1] - slopes[j]);
}

double RadialProfile::radius_for_slope(double slope_cap) const {
  if (slope_cap <= slopes.front()) return radii.front();
  for (size_t j = 1; j < radii.size(); ++j) {
    if (slopes[j] > slope_cap) {
      const double t = (slope_cap - slopes[j - 1]) / (slopes[j] - slopes[j - 1]);
      return radii[j - 1] + t * (radii[j] - radii[j - 1]);
    }
  }
  return radii.back();
}

void RadialProfile::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("RadialProfile::write_csv: cannot open " + path);
  f << "r,value,slope\n";
  char buf[160];
  for (size_t j = 0; j < radii.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", radii[j], values[j], slopes[j]);
    f << buf;
  }
}

WulffCheckResult wulff_identity_check(const SmoothedEnergy& e, const PeriodicGrid& g,
                                      double slope_cap) {
  if (!(slope_cap > 0.0))
    throw std::invalid_argument("wulff_identity_check: slope cap must be positive");
  const double h = g.spacing();
  const int dim = g.dim();

  // Sample the conjugate exactly (per-node Newton) about the torus midpoint.
  Point c = {0.5, 0.5, 0.5};
  ScalarField w(g);
  for (long k = 0; k < g.size(); ++k) {
    const double r = torus_distance(dim, g.node_position(k), c);
    const double s = conjugate_slope(e, r);
    const double p[3] = {s, 0.0, 0.0};
    w[k] = s * r - e.value(p, 1);
  }

  double core = 0.0;
  {
    // Invert slope(r) = cap by bisection; slope is increasing in r.
    double lo = 0.0, hi = 0.5;
    if (conjugate_slope(e, hi) <= slope_cap) {
      core = hi;
    } else {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (conjugate_slope(e, mid) <= slope_cap ? lo : hi) = mid;
      }
      core = lo;
    }
  }
  core = std::min(core, 0.5 - 2.0 * h);

  ScalarField op = operator_Em(w, e);
  const double n = static_cast<double>(dim);
  const double r_eval = core - 2.0 * h;
  WulffCheckResult res{0.0, core, 0};
  for (long k = 0; k < g.size(); ++k) {
    if (torus_distance(dim, g.node_position(k), c) > r_eval) continue;
    res.max_relative_deviation =
        std::max(res.max_relative_deviation, std::abs(op[k] - n) / n);
    ++res.nodes_checked;
  }
  return res;
}

}  // namespace tvflow
