#ifndef TVFLOW_FACET_HPP
#define TVFLOW_FACET_HPP

#include <string>
#include <vector>

#include "tvflow/grid.hpp"
#include "tvflow/resolvent.hpp"

namespace tvflow {

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Analytic shape with a closed-form signed distance on the torus.
struct Primitive {
  enum class Kind { Ball, Stadium };
  Kind kind = Kind::Ball;
  Point center = {0, 0, 0};
  Point half_extent = {0, 0, 0};  ///< stadium box half-widths, zero for balls
  double radius = 0.0;
  bool complement = false;

  double signed_distance(int dim, const Point& x) const;  ///< before complement flip
  double reach(int dim) const;
};

/// One side of a pair: a union (or, after swapping, an intersection) of
/// possibly complemented primitives. No primitives means the whole torus for
/// the minus side and the empty set for the plus side.
struct SideSpec {
  std::vector<Primitive> prims;
  bool intersect = false;

  double distance(int dim, const Point& x, double big) const;
};

struct PairSpec {
  SideSpec minus_side;
  SideSpec plus_side;
};

/// Parses the pair description text format, one primitive per line:
///   ball c1 .. cn r side=(minus|plus) [op=(union|complement)]
///   stadium c1 .. cn h1 .. hn r side=(minus|plus) [op=(union|complement)]
/// Blank lines and `#` comments are ignored.
PairSpec parse_pair_description(const std::string& text, int dim);

/// Sentinel magnitude for "no boundary" distance fields.
inline constexpr double kFarAway = 1e30;

/// A facet descriptor: two signed distance fields (negative inside) with a
/// positive gap between the boundaries. The facet is D = cl(Omega_-) \ Omega_+.
struct SmoothPair {
  PeriodicGrid grid{2, 4};
  ScalarField d_minus;
  ScalarField d_plus;
  PairSpec spec;
  double gap = 0.0;           ///< measured dist(boundary-, boundary+)
  double reach_minus = 0.0;
  double reach_plus = 0.0;
  bool minus_is_whole_torus = false;
  bool plus_is_empty = false;

  /// Cutoff scale delta = (1/3) min(reach-, reach+, gap).
  double delta() const;
  bool has_boundary() const { return !(minus_is_whole_torus && plus_is_empty); }
  double d_minus_at(const Point& x) const;  ///< analytic evaluation anywhere
  double d_plus_at(const Point& x) const;
  /// 1 on D = {d_minus <= 0 and d_plus >= 0}, 0 elsewhere.
  ScalarField facet_mask() const;
};

SmoothPair make_pair(const PairSpec& spec, const PeriodicGrid& grid);
SmoothPair make_pair(const std::string& description, const PeriodicGrid& grid);

/// The mirror pair (cl Omega_+^c, cl Omega_-^c); its curvature is -Lambda.
SmoothPair swapped_pair(const SmoothPair& pair);

/// Support function of the pair: positive in Omega_+, zero on the facet,
/// negative outside cl Omega_-, built from the clamped signed distances
/// psi = -clamp(d, +-delta/2) with unit Lipschitz bound.
struct SupportFunctionField {
  ScalarField psi;
  double delta = 0.0;
};
SupportFunctionField build_support_function(const SmoothPair& pair);

/// Cahn-Hoffman vector field z = -grad[theta(d_-) + theta(d_+)] sampled on
/// the staggered grid; |z| <= 1, z·nu = -1 on boundary-, z·(-nu) = +1 on
/// boundary+. theta ramps linearly up to delta/2 and saturates at 3 delta/4.
VectorField build_cahn_hoffman(const SmoothPair& pair);

// -- morphology -----------------------------------------------------------------

/// Exact squared Euclidean distance (torus metric) from each node to the set
/// {mask >= 1/2}, via per-axis lower-envelope transforms.
ScalarField distance_to_set(const ScalarField& mask);

/// Morphological dilation (rho > 0) or erosion (rho < 0) of a 0/1 mask by the
/// closed ball of radius |rho| under the torus metric; rho = 0 is the identity.
ScalarField dilate_erode(const ScalarField& mask, double rho);

// -- curvature estimators ---------------------------------------------------------

struct CurvatureEstimate {
  ScalarField lambda;  ///< Lambda samples; meaningful only where mask == 1
  ScalarField mask;    ///< facet D eroded by 2h
  std::string method;  ///< "resolvent-quotient" | "direct-obstacle"
  double tolerance = 0.0;  ///< error scale used as slack in cross-checks
  // diagnostics
  std::vector<double> a_levels;
  double eps = 1.0;
  long iterations = 0;
  double final_residual = 0.0;

  double min_on_mask() const;
  double max_on_mask() const;
  double mean_on_mask() const;
  long mask_count() const;
  void write_summary_csv(const std::string& path, double lambda_const,
                         bool calibrable) const;
};

/// Lambda via the resolvent route: solve u + a dE(u) ∋ eps psi on a
/// decreasing ladder of a, form the quotients (u - eps psi)/a and Richardson
/// extrapolate the two smallest levels.
CurvatureEstimate nonlocal_curvature_resolvent(const SmoothPair& pair,
                                               const std::vector<double>& a_levels,
                                               double eps, const ResolventConfig& cfg);

struct ObstacleConfig {
  double tolerance = 1e-9;  ///< stop when the per-sweep max |dz| falls below
  long max_iterations = 400000;
  int check_interval = 50;
};

/// Lambda via the direct obstacle problem: minimize the L2 norm of div z over
/// staggered fields with |z| <= 1, z frozen on the one-cell ring straddling
/// the boundaries at its Cahn-Hoffman initialization.
CurvatureEstimate nonlocal_curvature_obstacle(const SmoothPair& pair,
                                              const ObstacleConfig& cfg);

// -- measurements and checks -------------------------------------------------------

/// Surface measure of the zero level of a signed distance field
/// (n=1: crossing count, n=2: marching-squares length, n=3: smoothed-delta
/// surface integral). Fields at the kFarAway sentinel have empty boundary.
double level_zero_perimeter(const ScalarField& d);

/// Lebesgue measure of D from the distance fields (sub-cell accurate).
double facet_volume(const SmoothPair& pair);

struct CalibrabilityResult {
  bool calibrable = false;
  double lambda_const = 0.0;  ///< (perim+ - perim-) / vol(D)
  double max_deviation = 0.0;
};

/// Compares the estimate against the constant (H^{n-1}(dOmega+) -
/// H^{n-1}(dOmega-)) / H^n(D); calibrable iff max |Lambda - const| <= band.
CalibrabilityResult calibrability_check(const CurvatureEstimate& est,
                                        const SmoothPair& pair, double band);

struct MonotonicityResult {
  bool ordered = false;
  double max_violation = 0.0;  ///< max(Lambda1 - Lambda2) on the common facet
  long nodes_compared = 0;
};

/// Checks Lambda1 <= Lambda2 + (tol1 + tol2) on D1 ∩ D2 for nested pairs
/// (Omega1_-+ inside Omega2_-+). Throws if the pairs are not nested.
MonotonicityResult monotonicity_check(const SmoothPair& p1, const SmoothPair& p2,
                                      const CurvatureEstimate& e1,
                                      const CurvatureEstimate& e2);

/// Largest rho < 1/4 such that x lies in some ball B_rho(y) contained in D,
/// computed on the grid by a ladder of distance transforms (quantized to h).
ScalarField inradius_field(const SmoothPair& pair);

struct CurvatureBoundResult {
  double max_excess = -kFarAway;           ///< max over mask of |Lambda| - n/rho
  double max_relative_excess = -kFarAway;  ///< same normalized by n/rho
};

/// |Lambda(x)| <= n/rho(x) check on the estimate's mask.
CurvatureBoundResult curvature_bound_check(const CurvatureEstimate& est,
                                           const SmoothPair& pair);

}  // namespace tvflow

#endif
