#include "tvflow/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace tvflow {

void ResolventConfig::validate(const PeriodicGrid& g) const {
  if (!(a > 0.0)) throw std::invalid_argument("ResolventConfig: a must be positive");
  if (!(tolerance > 0.0))
    throw std::invalid_argument("ResolventConfig: tolerance must be positive");
  const double h = g.spacing();
  const double tau_max = h * h / (4.0 * g.dim());
  if (tau != 0.0 && tau > tau_max * (1.0 + 1e-12))
    throw std::invalid_argument("ResolventConfig: tau exceeds the stable step h^2/(4n)");
  if (max_iterations < 1)
    throw std::invalid_argument("ResolventConfig: max_iterations must be >= 1");
}

namespace {

// One fused dual update: p <- proj(y + tau grad(div y - f/a)).
// Returns the max absolute component change |p_new - y| for progress tracking.
double dual_step(const PeriodicGrid& g, const double* f, double inv_a, double tau,
                 std::vector<double*>& y, std::vector<double*>& pnew, double* w) {
  const int dim = g.dim();
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  const double invh = static_cast<double>(g.resolution());

  // w = div y - f/a
  {
    long k = 0;
    if (dim == 1) {
      const double* z0 = y[0];
      const long na = g.extent(0);
      for (long i0 = 0; i0 < na; ++i0, ++k) {
        const double zm = (i0 == 0) ? z0[na - 1] : z0[k - 1];
        w[k] = (z0[k] - zm) * invh - f[k] * inv_a;
      }
    } else if (dim == 2) {
      const double* zx = y[0];
      const double* zy = y[1];
      const long N = g.extent(0);
      for (long i0 = 0; i0 < N; ++i0) {
        const long rowm = (i0 == 0) ? (N - 1) * N : -N;
        for (long i1 = 0; i1 < N; ++i1, ++k) {
          const double xm = (i1 == 0) ? zx[k + N - 1] : zx[k - 1];
          w[k] = ((zx[k] - xm) + (zy[k] - zy[k + rowm])) * invh - f[k] * inv_a;
        }
      }
    } else {
      for (int a = 0; a < dim; ++a) {
        const double* z = y[a];
        const long sa = g.stride(a);
        const long na = g.extent(a);
        k = 0;
        for (long i0 = 0; i0 < n0; ++i0)
          for (long i1 = 0; i1 < n1; ++i1)
            for (long i2 = 0; i2 < n2; ++i2, ++k) {
              const long ia = (a == 0 ? i0 : (a == 1 ? i1 : i2));
              const long km = (ia == 0) ? k + (na - 1) * sa : k - sa;
              const double add = (z[k] - z[km]) * invh;
              w[k] = (a == 0) ? add - f[k] * inv_a : w[k] + add;
            }
      }
    }
  }

  // p = proj(y + tau grad w), projecting the component tuple at each node.
  double max_change = 0.0;
  if (dim == 2) {
    const long N = g.extent(0);
    const double* zx = y[0];
    const double* zy = y[1];
    double* px = pnew[0];
    double* py = pnew[1];
    long k = 0;
    for (long i0 = 0; i0 < N; ++i0) {
      const long rowp = (i0 + 1 == N) ? -(N - 1) * N : N;
      for (long i1 = 0; i1 < N; ++i1, ++k) {
        const double wp_x = (i1 + 1 == N) ? w[k - N + 1] : w[k + 1];
        double ax = zx[k] + tau * (wp_x - w[k]) * invh;
        double ay = zy[k] + tau * (w[k + rowp] - w[k]) * invh;
        const double q = ax * ax + ay * ay;
        if (q > 1.0) {
          const double inv = 1.0 / std::sqrt(q);
          ax *= inv;
          ay *= inv;
        }
        max_change = std::max(max_change, std::abs(ax - zx[k]));
        max_change = std::max(max_change, std::abs(ay - zy[k]));
        px[k] = ax;
        py[k] = ay;
      }
    }
  } else {
    long k = 0;
    double comp[3];
    for (long i0 = 0; i0 < n0; ++i0)
      for (long i1 = 0; i1 < n1; ++i1)
        for (long i2 = 0; i2 < n2; ++i2, ++k) {
          double q = 0.0;
          for (int a = 0; a < dim; ++a) {
            const long ia = (a == 0 ? i0 : (a == 1 ? i1 : i2));
            const long sa = g.stride(a);
            const long na = g.extent(a);
            const long kp = (ia + 1 == na) ? k - (na - 1) * sa : k + sa;
            comp[a] = y[a][k] + tau * (w[kp] - w[k]) * invh;
            q += comp[a] * comp[a];
          }
          if (q > 1.0) {
            const double inv = 1.0 / std::sqrt(q);
            for (int a = 0; a < dim; ++a) comp[a] *= inv;
          }
          for (int a = 0; a < dim; ++a) {
            max_change = std::max(max_change, std::abs(comp[a] - y[a][k]));
            pnew[a][k] = comp[a];
          }
        }
  }
  return max_change;
}

}  // namespace

ResolventSolution solve_resolvent_tv(const ScalarField& f, const ResolventConfig& cfg) {
  cfg.validate(f.grid);
  const PeriodicGrid& g = f.grid;
  const int dim = g.dim();
  const long n = g.size();
  const double h = g.spacing();
  const double tau = (cfg.tau > 0.0) ? cfg.tau : h * h / (4.0 * dim);
  const double inv_a = 1.0 / cfg.a;

  std::vector<std::vector<double>> p(dim, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> p_prev(dim, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> y(dim, std::vector<double>(n, 0.0));
  std::vector<double> w(n, 0.0);

  std::vector<double*> yp(dim), pp(dim);
  ScalarField u(g);
  VectorField pfield(g);

  double t_momentum = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  long it = 0;

  auto gap_residual = [&]() {
    // u = f - a div p; duality gap = a (TV(u) - <u, div p>) certifies
    // (1/2)||u - u*||^2 <= gap by 1-strong convexity of the primal.
    for (int a = 0; a < dim; ++a) pfield.comp[a].v.assign(p[a].begin(), p[a].end());
    ScalarField divp = divergence_backward(pfield);
    for (long k = 0; k < n; ++k) u[k] = f[k] - cfg.a * divp[k];
    const double gap = cfg.a * (tv_energy(u) - inner(u, divp));
    return std::sqrt(2.0 * std::max(0.0, gap));
  };

  for (it = 1; it <= cfg.max_iterations; ++it) {
    if (cfg.accelerate) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      const double beta = (t_momentum - 1.0) / t_next;
      t_momentum = t_next;
      for (int a = 0; a < dim; ++a) {
        const double* pc = p[a].data();
        const double* po = p_prev[a].data();
        double* yc = y[a].data();
        for (long k = 0; k < n; ++k) yc[k] = pc[k] + beta * (pc[k] - po[k]);
        yp[a] = yc;
        pp[a] = p_prev[a].data();  // overwrite the old iterate in place
      }
      dual_step(g, f.v.data(), inv_a, tau, yp, pp, w.data());
      for (int a = 0; a < dim; ++a) p[a].swap(p_prev[a]);
    } else {
      for (int a = 0; a < dim; ++a) {
        yp[a] = p[a].data();
        pp[a] = p_prev[a].data();
      }
      dual_step(g, f.v.data(), inv_a, tau, yp, pp, w.data());
      for (int a = 0; a < dim; ++a) p[a].swap(p_prev[a]);
    }

    if (it % cfg.gap_check_interval == 0 || it == cfg.max_iterations) {
      residual = gap_residual();
      if (residual <= cfg.tolerance) break;
    }
  }

  if (residual > cfg.tolerance) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "solve_resolvent_tv: no convergence after %ld iterations "
                  "(residual %.3e > tolerance %.3e)",
                  cfg.max_iterations, residual, cfg.tolerance);
    throw SolverError(msg);
  }

  ResolventSolution sol;
  sol.u = std::move(u);
  sol.iterations = std::min(it, cfg.max_iterations);
  sol.final_residual = residual;
  sol.method = "exact-dual";
  return sol;
}

// -- smoothed resolvent ---------------------------------------------------------

namespace {

// Residual R(u) = u - a opEm(u) - f.
void smooth_residual(const ScalarField& u, const SmoothedEnergy& e, const ScalarField& f,
                     double a, ScalarField& r, ScalarField& op, VectorField& scratch) {
  operator_Em(u, e, op, scratch);
  const long n = u.grid.size();
  for (long k = 0; k < n; ++k) r[k] = u[k] - a * op[k] - f[k];
}

// Linearization of opEm at u: L v = div( D2W(grad u) grad v ) with
// D2W(p) = alpha I + beta p p^T, alpha = 1/rho + 2/m, beta = -1/rho^3.
struct Linearization {
  VectorField grad_u;
  std::vector<double> alpha, beta;

  void build(const ScalarField& u, const SmoothedEnergy& e) {
    gradient_forward(u, grad_u);
    const long n = u.grid.size();
    alpha.resize(n);
    beta.resize(n);
    const double minv2 = 1.0 / (e.m * e.m);
    for (long k = 0; k < n; ++k) {
      double q = 0.0;
      for (const auto& c : grad_u.comp) q += c[k] * c[k];
      const double rho = std::sqrt(q + minv2);
      alpha[k] = 1.0 / rho + 2.0 / e.m;
      beta[k] = -1.0 / (rho * rho * rho);
    }
  }

  // out = v - a L v  (the Jacobian of the residual map, SPD for a > 0)
  void apply(const ScalarField& v, double a, ScalarField& out, VectorField& gv) const {
    gradient_forward(v, gv);
    const long n = v.grid.size();
    const int dim = v.grid.dim();
    for (long k = 0; k < n; ++k) {
      double dot = 0.0;
      for (int c = 0; c < dim; ++c) dot += grad_u.comp[c][k] * gv.comp[c][k];
      for (int c = 0; c < dim; ++c)
        gv.comp[c][k] = alpha[k] * gv.comp[c][k] + beta[k] * dot * grad_u.comp[c][k];
    }
    divergence_backward(gv, out);
    for (long k = 0; k < n; ++k) out[k] = v[k] - a * out[k];
  }
};

}  // namespace

ResolventSolution solve_resolvent_smooth(const ScalarField& f, const SmoothedEnergy& e,
                                         const ResolventConfig& cfg) {
  cfg.validate(f.grid);
  const PeriodicGrid& g = f.grid;
  const long n = g.size();
  const double a = cfg.a;

  ScalarField u = f;  // opEm of a constant vanishes, so f is the natural start
  ScalarField r(g), op(g), jv(g);
  VectorField scratch(g), gv(g);
  Linearization lin;
  lin.grad_u = VectorField(g);

  smooth_residual(u, e, f, a, r, op, scratch);
  double rnorm = norm_inf(r);
  long newton_it = 0;
  const long max_newton = 60;

  ScalarField delta(g), cg_r(g), cg_p(g), cg_ap(g), trial(g);

  while (rnorm > cfg.tolerance && newton_it < max_newton) {
    ++newton_it;
    lin.build(u, e);

    // CG on (I - a L) delta = -r
    std::fill(delta.v.begin(), delta.v.end(), 0.0);
    for (long k = 0; k < n; ++k) cg_r[k] = -r[k];
    cg_p = cg_r;
    double rr = inner(cg_r, cg_r);
    const double rr0 = rr;
    const double cg_tol2 = std::max(rr0 * 1e-16, 1e-300);
    long cg_it = 0;
    const long cg_max = 40 * static_cast<long>(std::sqrt(static_cast<double>(n))) + 200;
    while (rr > cg_tol2 && cg_it < cg_max) {
      ++cg_it;
      lin.apply(cg_p, a, cg_ap, gv);
      const double pap = inner(cg_p, cg_ap);
      if (!(pap > 0.0))
        throw SolverError("solve_resolvent_smooth: CG breakdown (non-positive curvature)");
      const double alpha_cg = rr / pap;
      for (long k = 0; k < n; ++k) {
        delta[k] += alpha_cg * cg_p[k];
        cg_r[k] -= alpha_cg * cg_ap[k];
      }
      const double rr_new = inner(cg_r, cg_r);
      const double beta_cg = rr_new / rr;
      rr = rr_new;
      for (long k = 0; k < n; ++k) cg_p[k] = cg_r[k] + beta_cg * cg_p[k];
    }

    // Damped update; fall back to a relaxation sweep if no damping works.
    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      for (long k = 0; k < n; ++k) trial[k] = u[k] + lambda * delta[k];
      smooth_residual(trial, e, f, a, r, op, scratch);
      const double rn = norm_inf(r);
      if (rn <= (1.0 - 0.25 * lambda) * rnorm || rn <= cfg.tolerance) {
        u.v.swap(trial.v);
        rnorm = rn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      const double h = g.spacing();
      const double stiff = 1.0 + a * (e.m + 2.0 / e.m) * 4.0 * g.dim() / (h * h);
      const double omega = 1.0 / stiff;
      smooth_residual(u, e, f, a, r, op, scratch);
      for (long k = 0; k < n; ++k) u[k] -= omega * r[k];
      smooth_residual(u, e, f, a, r, op, scratch);
      const double rn = norm_inf(r);
      if (rn >= rnorm)
        throw SolverError("solve_resolvent_smooth: stalled (residual " +
                          std::to_string(rnorm) + ")");
      rnorm = rn;
    }
  }

  if (rnorm > cfg.tolerance)
    throw SolverError("solve_resolvent_smooth: no convergence, residual " +
                      std::to_string(rnorm));

  ResolventSolution sol;
  sol.u = std::move(u);
  sol.iterations = newton_it;
  sol.final_residual = rnorm;
  sol.method = "smoothed-newton";
  return sol;
}

ScalarField subgradient_quotient(const ScalarField& f, const ResolventSolution& sol,
                                 double a) {
  if (!(f.grid == sol.u.grid))
    throw std::invalid_argument("subgradient_quotient: grid mismatch");
  ScalarField q(f.grid);
  const long n = f.grid.size();
  for (long k = 0; k < n; ++k) q[k] = (sol.u[k] - f[k]) / a;
  return q;
}

bool resolvent_comparison_check(const ScalarField& f1, const ScalarField& f2,
                                const ResolventConfig& cfg) {
  const long n = f1.grid.size();
  for (long k = 0; k < n; ++k)
    if (f1[k] > f2[k])
      throw std::invalid_argument("resolvent_comparison_check: f1 <= f2 violated");
  ResolventSolution s1 = solve_resolvent_tv(f1, cfg);
  ResolventSolution s2 = solve_resolvent_tv(f2, cfg);
  const double slack = 2.0 * cfg.tolerance;
  for (long k = 0; k < n; ++k)
    if (s1.u[k] > s2.u[k] + slack) return false;
  return true;
}

}  // namespace tvflow
