#ifndef TVFLOW_RESOLVENT_HPP
#define TVFLOW_RESOLVENT_HPP

#include <string>

#include "tvflow/energy.hpp"
#include "tvflow/grid.hpp"

namespace tvflow {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResolventConfig {
  double a = 1e-3;          ///< resolvent parameter (implicit time step)
  double tau = 0.0;         ///< dual step; 0 selects the stable default h^2/(4n)
  double tolerance = 1e-7;  ///< certified L2 error bound (exact) / max-norm residual (smooth)
  long max_iterations = 4000000;
  bool accelerate = true;   ///< Nesterov momentum on the dual ascent
  int gap_check_interval = 100;

  void validate(const PeriodicGrid& g) const;
};

struct ResolventSolution {
  ScalarField u;
  long iterations = 0;
  double final_residual = 0.0;
  std::string method;  ///< "exact-dual" | "smoothed-newton"
};

/// Exact TV resolvent: the minimizer of (1/2)||u-f||^2 + a TV(u), i.e. the
/// solution of u + a dE(u) ∋ f. Solved by projected ascent on the dual with
/// fixed step tau <= h^2/(4n):
///   p <- proj_{|p_k|<=1}( p + tau grad(div p - f/a) ),   u = f - a div p.
/// Convergence is certified through the duality gap: the reported residual
/// bounds ||u - u*|| in the h^n-weighted L2 norm. The dual variable starts
/// at zero. Throws SolverError when the iteration cap is hit.
ResolventSolution solve_resolvent_tv(const ScalarField& f, const ResolventConfig& cfg);

/// Smoothed resolvent u - a (-d0 E_m)(u) = f by damped Newton with a
/// matrix-free conjugate-gradient inner solve; residual is measured in the
/// max norm. Falls back to relaxation steps when a Newton step stalls.
ResolventSolution solve_resolvent_smooth(const ScalarField& f, const SmoothedEnergy& e,
                                         const ResolventConfig& cfg);

/// Pointwise (u - f)/a; approximates the minimal section -d0 E(f) as a -> 0.
ScalarField subgradient_quotient(const ScalarField& f, const ResolventSolution& sol,
                                 double a);

/// Solves both right-hand sides and checks the comparison property
/// u1 <= u2 + 2 tolerance. Requires f1 <= f2 pointwise.
bool resolvent_comparison_check(const ScalarField& f1, const ScalarField& f2,
                                const ResolventConfig& cfg);

}  // namespace tvflow

#endif
