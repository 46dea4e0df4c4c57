#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "tvflow/grid.hpp"

using namespace tvflow;

namespace {

ScalarField random_field(const PeriodicGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.v) v = u(rng);
  return f;
}

VectorField random_vector(const PeriodicGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField z(g);
  for (auto& c : z.comp)
    for (auto& v : c.v) v = u(rng);
  return z;
}

}  // namespace

TEST_CASE("gradient of a constant vanishes") {
  PeriodicGrid g(2, 16);
  ScalarField u(g, 3.0);
  VectorField grad = gradient_forward(u);
  for (const auto& c : grad.comp)
    for (double v : c.v) CHECK(v == 0.0);
}

TEST_CASE("1D forward difference hand values") {
  PeriodicGrid g(1, 4);
  ScalarField u(g);
  u.v = {0.0, 1.0, 0.0, 1.0};
  VectorField grad = gradient_forward(u);
  CHECK(grad.comp[0][0] == doctest::Approx(4.0));
  CHECK(grad.comp[0][1] == doctest::Approx(-4.0));
  CHECK(grad.comp[0][2] == doctest::Approx(4.0));
  CHECK(grad.comp[0][3] == doctest::Approx(-4.0));
}

TEST_CASE("gradient of sin(2 pi x) approximates the derivative") {
  const long N = 256;
  PeriodicGrid g(1, N);
  ScalarField u(g);
  for (long k = 0; k < N; ++k) u[k] = std::sin(2.0 * M_PI * k / N);
  VectorField grad = gradient_forward(u);
  const double tol = 3.0 * g.spacing() * (2.0 * M_PI) * (2.0 * M_PI);
  for (long k = 0; k < N; ++k) {
    const double exact = 2.0 * M_PI * std::cos(2.0 * M_PI * k / N);
    CHECK(std::abs(grad.comp[0][k] - exact) <= tol);
  }
}

TEST_CASE("1D backward divergence hand values") {
  PeriodicGrid g(1, 4);
  VectorField z(g);
  z.comp[0].v = {1.0, -1.0, 1.0, -1.0};
  ScalarField div = divergence_backward(z);
  CHECK(div[0] == doctest::Approx(8.0));
  CHECK(div[1] == doctest::Approx(-8.0));
  CHECK(div[2] == doctest::Approx(8.0));
  CHECK(div[3] == doctest::Approx(-8.0));
}

TEST_CASE("zero vector field has zero divergence") {
  PeriodicGrid g(3, 8);
  VectorField z(g);
  ScalarField div = divergence_backward(z);
  for (double v : div.v) CHECK(v == 0.0);
}

TEST_CASE("gradient and divergence are exact negative adjoints") {
  for (int dim : {1, 2, 3}) {
    PeriodicGrid g(dim, dim == 3 ? 12 : 32);
    ScalarField u = random_field(g, 7u + dim);
    VectorField z = random_vector(g, 99u + dim);
    const double lhs = inner(gradient_forward(u), z) + inner(u, divergence_backward(z));
    CHECK(std::abs(lhs) <= 1e-12 * norm_l2(u) * norm_l2(z) +
                               1e-14);  // h^n-weighted inner products
  }
}

TEST_CASE("translation equivariance is exact") {
  PeriodicGrid g(2, 16);
  ScalarField u = random_field(g, 3);
  ScalarField us = shift(u, 0, 1);
  VectorField a = gradient_forward(us);
  VectorField b = gradient_forward(u);
  for (int c = 0; c < 2; ++c) {
    ScalarField bs = shift(b.comp[c], 0, 1);
    for (long k = 0; k < g.size(); ++k) CHECK(a.comp[c][k] == bs[k]);
  }
}

TEST_CASE("lipschitz seminorm") {
  PeriodicGrid g(1, 64);
  SUBCASE("constant") {
    ScalarField u(g, 5.0);
    CHECK(lipschitz_seminorm(u) == 0.0);
  }
  SUBCASE("distance sawtooth has slope exactly one") {
    ScalarField u(g);
    for (long k = 0; k < 64; ++k) {
      const double x = g.node_position(k)[0];
      u[k] = std::min(x, 1.0 - x);
    }
    CHECK(lipschitz_seminorm(u) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sine slope approaches 2 pi") {
    PeriodicGrid gf(1, 512);
    ScalarField u(gf);
    for (long k = 0; k < 512; ++k) u[k] = std::sin(2.0 * M_PI * k / 512.0);
    const double tol = 3.0 * gf.spacing() * (2.0 * M_PI) * (2.0 * M_PI);
    CHECK(std::abs(lipschitz_seminorm(u) - 2.0 * M_PI) <= tol);
  }
}

TEST_CASE("torus distance basics and metric properties") {
  CHECK(torus_distance(2, {0.3, 0.4, 0}, {0.3, 0.4, 0}) == 0.0);
  CHECK(torus_distance(1, {0.1, 0, 0}, {0.9, 0, 0}) == doctest::Approx(0.2));
  CHECK(torus_distance(2, {0.0, 0.0, 0}, {0.5, 0.5, 0}) ==
        doctest::Approx(std::sqrt(0.5)));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int dim : {1, 2, 3}) {
    for (int trial = 0; trial < 200; ++trial) {
      Point x = {u(rng), u(rng), u(rng)};
      Point y = {u(rng), u(rng), u(rng)};
      Point z = {u(rng), u(rng), u(rng)};
      const double dxy = torus_distance(dim, x, y);
      CHECK(dxy == doctest::Approx(torus_distance(dim, y, x)));
      CHECK(dxy <= torus_distance(dim, x, z) + torus_distance(dim, z, y) + 1e-12);
      CHECK(dxy <= 0.5 * std::sqrt(static_cast<double>(dim)) + 1e-12);
    }
  }
}

TEST_CASE("TVF1 round trip and header validation") {
  PeriodicGrid g(2, 8);
  ScalarField u = random_field(g, 21);
  write_tvf1("/tmp/tvf1_test_scalar.tvf1", u);
  ScalarField v = read_tvf1_scalar("/tmp/tvf1_test_scalar.tvf1");
  CHECK(v.grid.dim() == 2);
  CHECK(v.grid.resolution() == 8);
  for (long k = 0; k < g.size(); ++k) CHECK(u[k] == v[k]);

  VectorField z = random_vector(g, 22);
  write_tvf1("/tmp/tvf1_test_vector.tvf1", z);
  VectorField w = read_tvf1_vector("/tmp/tvf1_test_vector.tvf1");
  for (int c = 0; c < 2; ++c)
    for (long k = 0; k < g.size(); ++k) CHECK(z.comp[c][k] == w.comp[c][k]);

  CHECK_THROWS(read_tvf1_vector("/tmp/tvf1_test_scalar.tvf1"));
  {
    std::FILE* f = std::fopen("/tmp/tvf1_test_bad.tvf1", "wb");
    std::fputs("BOGUS header\n", f);
    std::fclose(f);
  }
  CHECK_THROWS(read_tvf1_scalar("/tmp/tvf1_test_bad.tvf1"));
}

TEST_CASE("grid invariants are enforced") {
  CHECK_THROWS(PeriodicGrid(0, 16));
  CHECK_THROWS(PeriodicGrid(4, 16));
  CHECK_THROWS(PeriodicGrid(2, 3));
  PeriodicGrid g(2, 16);
  CHECK(g.spacing() * g.resolution() == 1.0);
}
