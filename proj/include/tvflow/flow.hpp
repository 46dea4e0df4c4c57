#ifndef TVFLOW_FLOW_HPP
#define TVFLOW_FLOW_HPP

#include <functional>
#include <string>
#include <vector>

#include "tvflow/energy.hpp"
#include "tvflow/grid.hpp"
#include "tvflow/resolvent.hpp"

namespace tvflow {

/// Degenerate-elliptic operator F(p, xi): continuous and non-increasing in
/// xi. Construction runs a randomized monotonicity audit and rejects
/// operators that fail it.
class EllipticOperatorF {
public:
  enum class Kind { TvFlow, CrystallineGraph, Custom };

  static EllipticOperatorF tv_flow();                    ///< F(p, xi) = -xi
  /// F(p, xi) = -sqrt(1 + |p|^2) (xi + c), the graph form of anisotropic
  /// mean curvature motion with constant forcing c.
  static EllipticOperatorF crystalline_graph(double c);
  static EllipticOperatorF custom(std::function<double(const double*, int, double)> fn,
                                  int dim, double p_range, double xi_range,
                                  const std::string& name = "custom");

  double operator()(const double* p, int dim, double xi) const {
    return eval_(p, dim, xi);
  }
  Kind kind() const { return kind_; }
  double forcing() const { return forcing_; }
  bool uses_gradient() const { return uses_gradient_; }
  const std::string& name() const { return name_; }

  /// Sampled Lipschitz bound of F in xi over |p| <= p_cap, |xi| <= xi_cap.
  double xi_lipschitz_bound(int dim, double p_cap, double xi_cap) const;

private:
  EllipticOperatorF() = default;
  void audit(int dim, double p_range, double xi_range) const;

  Kind kind_ = Kind::TvFlow;
  double forcing_ = 0.0;
  bool uses_gradient_ = false;
  std::string name_;
  std::function<double(const double*, int, double)> eval_;
};

struct FlowConfig {
  SmoothedEnergy energy{100.0};
  double dt = 0.0;  ///< fixed step; 0 selects the CFL-auto policy
  double T = 0.0;
  std::vector<double> snapshot_times;  ///< defaults to {T}
  double cfl_safety = 0.9;
};

struct SnapshotDiagnostics {
  double time = 0.0;
  double lipschitz = 0.0;
  double min = 0.0, max = 0.0, mean = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ScalarField> snapshots;
  std::vector<SnapshotDiagnostics> diagnostics;
  double dt_used = 0.0;
  long steps = 0;

  const ScalarField& final_state() const { return snapshots.back(); }
  /// Manifest CSV: time, file, lipschitz, min, max, mean (one row per
  /// snapshot); fields written next to it in TVF1 format when prefix given.
  void write_manifest(const std::string& csv_path,
                      const std::string& field_prefix = "") const;
};

/// One forward Euler step u' = u - dt F(grad u, -d0 E_m(u)); the gradient
/// argument of F is sampled by central differences. Throws on NaN/Inf with
/// the first offending node.
ScalarField step_explicit(const ScalarField& u, const EllipticOperatorF& F,
                          const SmoothedEnergy& e, double dt);

/// CFL-auto time step for the explicit scheme.
double cfl_time_step(const ScalarField& u0, const EllipticOperatorF& F,
                     const FlowConfig& cfg);

/// Explicit evolution of u_t + F(grad u, -d0 E_m(u)) = 0 to time T.
Trajectory evolve(const ScalarField& u0, const EllipticOperatorF& F,
                  const FlowConfig& cfg);

/// Iterated-resolvent (implicit Euler) semigroup for the total variation
/// flow: u^{k+1} solves u + dt dE(u) ∋ u^k. Reference dynamics for the
/// divergence-form case.
Trajectory evolve_semigroup_tv(const ScalarField& u0, double dt, double T,
                               const ResolventConfig& rcfg,
                               const std::vector<double>& snapshot_times = {});

/// Evolves both initial data with a common step and verifies that ordering
/// u <= v persists at every snapshot within twice the scheme slack.
bool comparison_probe(const ScalarField& u0, const ScalarField& v0,
                      const EllipticOperatorF& F, const FlowConfig& cfg);

// -- barriers ------------------------------------------------------------------------

/// Parameters of the rescaled cut-off Wulff barrier w_m(.; A, q) and the
/// supersolution phi_m = B t + w_m. Requires m > 4/q.
struct BarrierSpec {
  double A = 1.0;  ///< spatial rescaling
  double q = 1.0;  ///< slope cap
  double B = 0.0;  ///< vertical speed; 0 lets the check size it as max |F|
  double m = 100.0;

  void validate() const;
};

/// Samples w_m(x) = integral_0^|x| theta_q(|grad W_m^*|(A s)) ds about the
/// torus midpoint (the radial profile is nondecreasing, so the lattice
/// periodization reduces to composing with the torus distance).
ScalarField build_barrier(const BarrierSpec& spec, const PeriodicGrid& grid);

struct BarrierCheckResult {
  double min_residual = 0.0;  ///< min over nodes of B + F(grad phi, -d0 E_m(w))
  double B = 0.0;             ///< speed used (sizing rule B = max |F| when spec.B = 0)
  double C = 0.0;             ///< measured radial bound of |-d0 E_m(w_m)|
  long worst_node = -1;
};

/// Pointwise supersolution residual of phi_m = B t + w_m for the given F.
BarrierCheckResult barrier_supersolution_check(const BarrierSpec& spec,
                                               const EllipticOperatorF& F,
                                               const PeriodicGrid& grid);

}  // namespace tvflow

#endif
