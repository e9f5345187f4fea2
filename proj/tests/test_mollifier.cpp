#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "elastoslab/mollifier.hpp"

using namespace elastoslab;

namespace {
constexpr double kPi = M_PI;
}

TEST_CASE("kernel construction: mass, dc gain, resolvability") {
  Grid g(64, 64, 8);
  auto k = make_kernel(0.1, g);
  double mass = 0.0;
  for (double v : k.samples()) mass += v;
  mass *= g.h1 * g.h2;
  CHECK(mass == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(k.multiplier(0, 0) == Catch::Approx(1.0).epsilon(1e-13));
  CHECK(k.spectrum_max_abs() <= 1.0 + 1e-8);

  CHECK_THROWS_AS(make_kernel(0.3, g), ValidationError);
  CHECK_THROWS_AS(make_kernel(0.02, g), KernelUnresolved);  // 2*h = 0.03125
}

TEST_CASE("kernel spectrum tightens toward 1 as kappa shrinks") {
  Grid g(64, 64, 8);
  // Quadrature oracle: the multiplier at mode (1,0) is the plain cosine sum
  // of the sampled kernel.
  double prev = -1.0;
  for (double kap : {0.2, 0.1, 0.05}) {
    auto k = make_kernel(kap, g);
    double direct = 0.0;
    for (int i1 = 0; i1 < g.n1; ++i1)
      for (int i2 = 0; i2 < g.n2; ++i2)
        direct += k.samples()[std::size_t(i1) * g.n2 + i2] *
                  std::cos(2.0 * kPi * g.x1(i1));
    direct *= g.h1 * g.h2;
    CHECK(k.multiplier(1, 0) == Catch::Approx(direct).margin(1e-12));
    CHECK(k.multiplier(1, 0) > prev);
    prev = k.multiplier(1, 0);
  }
  CHECK(prev < 1.0);
}

TEST_CASE("mollify preserves constants exactly") {
  Grid g(32, 32, 8);
  auto k = make_kernel(0.1, g);
  ScalarField f(g, 3.7);
  auto m = mollify(f, k);
  CHECK((m - f).max_abs() < 1e-13);
}

TEST_CASE("mollify of a single mode scales by the multiplier") {
  Grid g(32, 32, 8);
  auto k = make_kernel(0.1, g);
  auto f = BoundaryScalarField::sample(g, Face::bottom,
                                       [](double x, double) { return std::cos(2 * kPi * x); });
  auto m = mollify(f, k);
  auto expect = k.multiplier(1, 0) * f;
  CHECK((m - expect).max_abs() < 1e-13);
}

TEST_CASE("spectral path matches direct quadrature convolution") {
  Grid g(32, 32, 8);
  auto k = make_kernel(0.12, g);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist;
  BoundaryScalarField f(g, Face::top);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = dist(rng);
  auto a = mollify(f, k);
  auto b = mollify_direct(f, k);
  CHECK((a - b).max_abs() < 1e-10 * f.max_abs());
}

TEST_CASE("mollifier commutes with tangential derivatives exactly") {
  Grid g(32, 32, 8);
  auto k = make_kernel(0.1, g);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist;
  BoundaryScalarField f(g, Face::top);
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = dist(rng);
  auto a = boundary_derivative(mollify(f, k), 1);
  auto b = mollify(boundary_derivative(f, 1), k);
  CHECK((a - b).max_abs() < 1e-9 * std::max(1.0, f.max_abs()));
}

TEST_CASE("operator norm bound |Lambda h|_s <= |h|_s") {
  Grid g(64, 64, 8);
  auto k = make_kernel(0.1, g);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> dist;
  for (double s : {0.0, 0.5, 1.0, 2.0}) {
    BoundaryScalarField h(g, Face::bottom);
    for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = dist(rng);
    const double ratio = boundary_norm(mollify(h, k), s) / boundary_norm(h, s);
    CHECK(ratio <= 1.0 + 1e-8);
  }
}

TEST_CASE("commutator with a constant multiplier vanishes") {
  Grid g(32, 32, 8);
  auto k = make_kernel(0.1, g);
  BoundaryScalarField h(g, Face::bottom, 2.0);
  auto gfield = BoundaryScalarField::sample(g, Face::bottom, [](double x, double y) {
    return std::sin(2 * kPi * (x + 2 * y));
  });
  CHECK(commutator(k, h, gfield).max_abs() < 1e-13);
  BoundaryScalarField zero(g, Face::bottom, 0.0);
  auto hfield = BoundaryScalarField::sample(g, Face::bottom,
                                            [](double x, double) { return std::sin(2 * kPi * x); });
  CHECK(commutator(k, hfield, zero).max_abs() == 0.0);
}

TEST_CASE("smooth commutator ratio bounded over the kappa sweep") {
  Grid g(64, 64, 8);
  auto h = BoundaryScalarField::sample(g, Face::bottom,
                                       [](double x, double) { return std::sin(2 * kPi * x); });
  auto gf = BoundaryScalarField::sample(g, Face::bottom,
                                        [](double, double y) { return std::cos(2 * kPi * y); });
  auto dg = boundary_derivative(gf, 2);
  const double denom = w1inf_norm(h) * boundary_norm(gf, 0.0);
  for (double kap : {0.2, 0.1, 0.05}) {
    auto k = make_kernel(kap, g);
    const double ratio = boundary_norm(commutator(k, h, dg), 0.0) / denom;
    CHECK(ratio < 2.0);  // kappa-independent bound, smooth data
  }
}
