#ifndef TVFLOW_GRID_HPP
#define TVFLOW_GRID_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tvflow {

using Point = std::array<double, 3>;

/// Uniform periodic grid on the unit torus [0,1)^dim with N samples per axis.
/// The spacing h = 1/N is always derived from N, never stored separately.
class PeriodicGrid {
public:
  PeriodicGrid(int dim, long resolution);

  int dim() const { return dim_; }
  long resolution() const { return N_; }
  double spacing() const { return 1.0 / static_cast<double>(N_); }
  long size() const { return size_; }

  /// Extent of axis a (N for a < dim, 1 otherwise); flat layout is row-major
  /// with axis 0 slowest.
  long extent(int axis) const { return axis < dim_ ? N_ : 1; }
  long stride(int axis) const { return stride_[axis]; }

  long index(long i0, long i1 = 0, long i2 = 0) const {
    return (i0 * extent(1) + i1) * extent(2) + i2;
  }
  std::array<long, 3> coords(long flat) const;
  Point node_position(long flat) const;

  bool operator==(const PeriodicGrid& o) const {
    return dim_ == o.dim_ && N_ == o.N_;
  }

private:
  int dim_;
  long N_;
  long size_;
  std::array<long, 3> stride_;
};

/// Real-valued samples on the nodes of a PeriodicGrid, row-major.
struct ScalarField {
  ScalarField() : grid(1, 4), v(4, 0.0) {}
  explicit ScalarField(const PeriodicGrid& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.size()), fill) {}

  PeriodicGrid grid;
  std::vector<double> v;

  double& operator[](long k) { return v[static_cast<size_t>(k)]; }
  double operator[](long k) const { return v[static_cast<size_t>(k)]; }
  long size() const { return grid.size(); }
};

/// n scalar components; component i lives on the forward-staggered position
/// of axis i (node + h/2 e_i), which makes the forward-difference gradient and
/// backward-difference divergence an exact adjoint pair.
struct VectorField {
  VectorField() = default;
  explicit VectorField(const PeriodicGrid& g, double fill = 0.0);

  PeriodicGrid grid{1, 4};
  std::vector<ScalarField> comp;
};

// -- differential operators ------------------------------------------------

/// Forward-difference gradient: component i at node k is (u[k+e_i]-u[k])/h.
VectorField gradient_forward(const ScalarField& u);
void gradient_forward(const ScalarField& u, VectorField& out);

/// Backward-difference divergence, the exact negative adjoint of
/// gradient_forward under the h^n-weighted inner product.
ScalarField divergence_backward(const VectorField& z);
void divergence_backward(const VectorField& z, ScalarField& out);

/// sup of the discrete gradient: max over nodes and axes of
/// |u[k+e_i]-u[k]|/h.
double lipschitz_seminorm(const ScalarField& u);

// -- torus metric ------------------------------------------------------------

/// Geodesic distance on the unit torus: Euclidean distance minimized over the
/// 3^n nearest lattice translates. Points are taken in [0,1)^n.
double torus_distance(int dim, const Point& x, const Point& y);

/// Signed per-axis displacement x-y wrapped into [-1/2, 1/2).
double wrap_delta(double dx);

// -- reductions and algebra --------------------------------------------------

double mean(const ScalarField& u);
double min_value(const ScalarField& u);
double max_value(const ScalarField& u);
double norm_inf(const ScalarField& u);
/// h^n-weighted L2 norm and inner product.
double norm_l2(const ScalarField& u);
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double norm_l2(const VectorField& z);
double max_pointwise_norm(const VectorField& z);
bool all_finite(const ScalarField& u);

/// Cyclic shift by one node along an axis: out[k] = u[k - e_axis].
ScalarField shift(const ScalarField& u, int axis, long cells = 1);

// -- file formats ------------------------------------------------------------

/// "TVF1" field format: ASCII header line
///   TVF1 dim=<n> N=<N> kind=<scalar|vector>\n
/// followed by little-endian IEEE-754 doubles, row-major, vector components
/// concatenated.
void write_tvf1(const std::string& path, const ScalarField& u);
void write_tvf1(const std::string& path, const VectorField& z);
ScalarField read_tvf1_scalar(const std::string& path);
VectorField read_tvf1_vector(const std::string& path);

/// CSV export: index columns i0[,i1[,i2]] then value.
void write_csv(const std::string& path, const ScalarField& u);

}  // namespace tvflow

#endif
