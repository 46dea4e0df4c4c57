#include "tvflow/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvflow {

static_assert(std::endian::native == std::endian::little,
              "TVF1 writer assumes a little-endian host");

PeriodicGrid::PeriodicGrid(int dim, long resolution) : dim_(dim), N_(resolution) {
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("PeriodicGrid: dim must be 1, 2 or 3");
  if (resolution < 4)
    throw std::invalid_argument("PeriodicGrid: N must be at least 4");
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= N_;
  stride_ = {1, 1, 1};
  for (int a = dim_ - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * extent(a + 1);
}

std::array<long, 3> PeriodicGrid::coords(long flat) const {
  std::array<long, 3> c = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    c[a] = flat / stride_[a];
    flat -= c[a] * stride_[a];
  }
  return c;
}

Point PeriodicGrid::node_position(long flat) const {
  const auto c = coords(flat);
  const double h = spacing();
  return {c[0] * h, c[1] * h, c[2] * h};
}

VectorField::VectorField(const PeriodicGrid& g, double fill) : grid(g) {
  comp.reserve(g.dim());
  for (int a = 0; a < g.dim(); ++a) comp.emplace_back(g, fill);
}

// Nested-loop kernel shared by gradient/divergence: axes beyond dim collapse
// to a single iteration, so the same code covers n = 1, 2, 3.
void gradient_forward(const ScalarField& u, VectorField& out) {
  const PeriodicGrid& g = u.grid;
  if (!(out.grid == g)) out = VectorField(g);
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  const long s0 = g.stride(0), s1 = g.stride(1), s2 = g.stride(2);
  const double invh = static_cast<double>(g.resolution());
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
          dst[k] = (src[kp] - src[k]) * invh;
        }
  }
  (void)s0; (void)s1; (void)s2;
}

VectorField gradient_forward(const ScalarField& u) {
  VectorField out(u.grid);
  gradient_forward(u, out);
  return out;
}

void divergence_backward(const VectorField& z, ScalarField& out) {
  const PeriodicGrid& g = z.grid;
  if (!(out.grid == g)) out = ScalarField(g);
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  const double invh = static_cast<double>(g.resolution());
  std::fill(out.v.begin(), out.v.end(), 0.0);
  double* dst = out.v.data();
  for (int a = 0; a < g.dim(); ++a) {
    const double* src = z.comp[a].v.data();
    const long sa = g.stride(a);
    const long na = g.extent(a);
    long k = 0;
    for (long i0 = 0; i0 < n0; ++i0)
      for (long i1 = 0; i1 < n1; ++i1)
        for (long i2 = 0; i2 < n2; ++i2, ++k) {
          const long ia = (a == 0 ? i0 : (a == 1 ? i1 : i2));
          const long km = (ia == 0) ? k + (na - 1) * sa : k - sa;
          dst[k] += (src[k] - src[km]) * invh;
        }
  }
}

ScalarField divergence_backward(const VectorField& z) {
  ScalarField out(z.grid);
  divergence_backward(z, out);
  return out;
}

double lipschitz_seminorm(const ScalarField& u) {
  const PeriodicGrid& g = u.grid;
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  const double invh = static_cast<double>(g.resolution());
  const double* src = u.v.data();
  double best = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const long sa = g.stride(a);
    const long na = g.extent(a);
    long k = 0;
    for (long i0 = 0; i0 < n0; ++i0)
      for (long i1 = 0; i1 < n1; ++i1)
        for (long i2 = 0; i2 < n2; ++i2, ++k) {
          const long ia = (a == 0 ? i0 : (a == 1 ? i1 : i2));
          const long kp = (ia + 1 == na) ? k - (na - 1) * sa : k + sa;
          best = std::max(best, std::abs(src[kp] - src[k]));
        }
  }
  return best * invh;
}

double wrap_delta(double dx) {
  dx -= std::floor(dx + 0.5);
  return dx;
}

double torus_distance(int dim, const Point& x, const Point& y) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double d = wrap_delta(x[a] - y[a]);
    s += d * d;
  }
  return std::sqrt(s);
}

double mean(const ScalarField& u) {
  double s = 0.0;
  for (double x : u.v) s += x;
  return s / static_cast<double>(u.v.size());
}

double min_value(const ScalarField& u) {
  return *std::min_element(u.v.begin(), u.v.end());
}

double max_value(const ScalarField& u) {
  return *std::max_element(u.v.begin(), u.v.end());
}

double norm_inf(const ScalarField& u) {
  double s = 0.0;
  for (double x : u.v) s = std::max(s, std::abs(x));
  return s;
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("inner: grid mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  double hn = 1.0;
  for (int d = 0; d < a.grid.dim(); ++d) hn *= a.grid.spacing();
  return s * hn;
}

double norm_l2(const ScalarField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }

double inner(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (size_t c = 0; c < a.comp.size(); ++c) s += inner(a.comp[c], b.comp[c]);
  return s;
}

double norm_l2(const VectorField& z) { return std::sqrt(std::max(0.0, inner(z, z))); }

double max_pointwise_norm(const VectorField& z) {
  const long n = z.grid.size();
  double best = 0.0;
  for (long k = 0; k < n; ++k) {
    double s = 0.0;
    for (const auto& c : z.comp) s += c[k] * c[k];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

bool all_finite(const ScalarField& u) {
  for (double x : u.v)
    if (!std::isfinite(x)) return false;
  return true;
}

ScalarField shift(const ScalarField& u, int axis, long cells) {
  const PeriodicGrid& g = u.grid;
  ScalarField out(g);
  const long na = g.extent(axis);
  const long sa = g.stride(axis);
  cells = ((cells % na) + na) % na;
  const long n0 = g.extent(0), n1 = g.extent(1), n2 = g.extent(2);
  long k = 0;
  for (long i0 = 0; i0 < n0; ++i0)
    for (long i1 = 0; i1 < n1; ++i1)
      for (long i2 = 0; i2 < n2; ++i2, ++k) {
        const long ia = (axis == 0 ? i0 : (axis == 1 ? i1 : i2));
        const long js = (ia - cells + na) % na;
        out[k] = u[k + (js - ia) * sa];
      }
  return out;
}

// -- I/O ----------------------------------------------------------------------

static void write_header(std::ofstream& f, const PeriodicGrid& g, const char* kind) {
  f << "TVF1 dim=" << g.dim() << " N=" << g.resolution() << " kind=" << kind << "\n";
}

void write_tvf1(const std::string& path, const ScalarField& u) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_tvf1: cannot open " + path);
  write_header(f, u.grid, "scalar");
  f.write(reinterpret_cast<const char*>(u.v.data()),
          static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write_tvf1: write failed for " + path);
}

void write_tvf1(const std::string& path, const VectorField& z) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_tvf1: cannot open " + path);
  write_header(f, z.grid, "vector");
  for (const auto& c : z.comp)
    f.write(reinterpret_cast<const char*>(c.v.data()),
            static_cast<std::streamsize>(c.v.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write_tvf1: write failed for " + path);
}

static PeriodicGrid parse_header(std::istream& f, const std::string& path,
                                 std::string& kind) {
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("TVF1: empty file " + path);
  std::istringstream ss(line);
  std::string magic, dimtok, ntok, kindtok;
  ss >> magic >> dimtok >> ntok >> kindtok;
  if (magic != "TVF1" || dimtok.rfind("dim=", 0) != 0 || ntok.rfind("N=", 0) != 0 ||
      kindtok.rfind("kind=", 0) != 0)
    throw std::runtime_error("TVF1: malformed header in " + path + ": " + line);
  const int dim = std::stoi(dimtok.substr(4));
  const long N = std::stol(ntok.substr(2));
  kind = kindtok.substr(5);
  return PeriodicGrid(dim, N);
}

ScalarField read_tvf1_scalar(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_tvf1: cannot open " + path);
  std::string kind;
  PeriodicGrid g = parse_header(f, path, kind);
  if (kind != "scalar") throw std::runtime_error("TVF1: expected scalar field in " + path);
  ScalarField u(g);
  f.read(reinterpret_cast<char*>(u.v.data()),
         static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(u.v.size() * sizeof(double)))
    throw std::runtime_error("TVF1: truncated data in " + path);
  return u;
}

VectorField read_tvf1_vector(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_tvf1: cannot open " + path);
  std::string kind;
  PeriodicGrid g = parse_header(f, path, kind);
  if (kind != "vector") throw std::runtime_error("TVF1: expected vector field in " + path);
  VectorField z(g);
  for (auto& c : z.comp) {
    f.read(reinterpret_cast<char*>(c.v.data()),
           static_cast<std::streamsize>(c.v.size() * sizeof(double)));
    if (f.gcount() != static_cast<std::streamsize>(c.v.size() * sizeof(double)))
      throw std::runtime_error("TVF1: truncated data in " + path);
  }
  return z;
}

void write_csv(const std::string& path, const ScalarField& u) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  const PeriodicGrid& g = u.grid;
  for (int a = 0; a < g.dim(); ++a) f << "i" << a << ",";
  f << "value\n";
  char buf[64];
  for (long k = 0; k < g.size(); ++k) {
    const auto c = g.coords(k);
    for (int a = 0; a < g.dim(); ++a) f << c[a] << ",";
    std::snprintf(buf, sizeof buf, "%.17g", u[k]);
    f << buf << "\n";
  }
}

}  // namespace tvflow
