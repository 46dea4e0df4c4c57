#ifndef TVFLOW_ENERGY_HPP
#define TVFLOW_ENERGY_HPP

#include <string>
#include <vector>

#include "tvflow/grid.hpp"

namespace tvflow {

/// Smoothed metric W_m(p) = sqrt(|p|^2 + 1/m^2) + |p|^2/m and the associated
/// energy E_m(u) = integral of W_m(grad u). Decreasing in m, uniformly convex,
/// converges to |p| pointwise as m grows.
struct SmoothedEnergy {
  explicit SmoothedEnergy(double m_) : m(m_) {
    if (!(m > 0.0)) throw std::invalid_argument("SmoothedEnergy: m must be positive");
  }
  double m;

  double value(const double* p, int dim) const;
  /// grad W_m(p) = p * (1/sqrt(|p|^2 + 1/m^2) + 2/m); isotropic, so the
  /// gradient is a scalar multiple of p.
  double gradient_factor(double p_norm_sq) const;
};

double w_value(const SmoothedEnergy& e, const double* p, int dim);
void w_gradient(const SmoothedEnergy& e, const double* p, int dim, double* out);

/// Discrete total variation: h^n-weighted sum of the Euclidean norm of the
/// forward-difference gradient.
double tv_energy(const ScalarField& u);

/// -d0 E_m(u) = div[(grad W_m)(grad u)], assembled from the adjoint pair.
ScalarField operator_Em(const ScalarField& u, const SmoothedEnergy& e);
void operator_Em(const ScalarField& u, const SmoothedEnergy& e, ScalarField& out,
                 VectorField& scratch);

/// Radially sampled convex conjugate W_m^*: values and slopes on an
/// increasing radius table starting at r_0 = 0.
struct RadialProfile {
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> slopes;

  double value(double r) const;  ///< linear interpolation, linear extension beyond r_max
  double slope(double r) const;
  /// Largest radius whose slope does not exceed the cap (profile slope is
  /// increasing in r).
  double radius_for_slope(double slope_cap) const;
  void write_csv(const std::string& path) const;
};

/// Radial slope s >= 0 of W_m^* at radius r: the unique root of
/// r = s/sqrt(s^2 + 1/m^2) + 2 s/m, found by bisection-safeguarded Newton.
double conjugate_slope(const SmoothedEnergy& e, double r);

/// Tabulate W_m^*(r) = s(r) r - W_m(s(r)) on K+1 uniform radii in [0, r_max].
RadialProfile fenchel_conjugate_radial(const SmoothedEnergy& e, double r_max, int K);

struct WulffCheckResult {
  double max_relative_deviation;  ///< max |op_Em(W_m^*) - n| / n on the core
  double core_radius;             ///< radius of the evaluation ball
  long nodes_checked;
};

/// Samples W_m^* radially about the torus midpoint, applies operator_Em and
/// measures the deviation from the constant n on the ball where the profile
/// slope stays below slope_cap, shrunk by a 2h guard band.
WulffCheckResult wulff_identity_check(const SmoothedEnergy& e, const PeriodicGrid& g,
                                      double slope_cap);

}  // namespace tvflow

#endif
