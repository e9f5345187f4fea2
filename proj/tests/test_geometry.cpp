#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "elastoslab/geometry.hpp"

using namespace elastoslab;

namespace {
constexpr double kPi = M_PI;

FlowMap random_flowmap(const Grid& g, double amp, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::normal_distribution<double> coef(0.0, 1.0);
  FlowMap eta(g);
  for (int i = 0; i < 3; ++i) {
    ScalarField f(g);
    for (int k1 = -2; k1 <= 2; ++k1)
      for (int k2 = -2; k2 <= 2; ++k2)
        for (int m = 0; m <= 2; ++m) {
          const double a = coef(rng), p = phase(rng);
          f += ScalarField::sample(g, [=](double x, double y, double z) {
            return a * std::cos(2 * kPi * (k1 * x + k2 * y) + p) * std::cos(m * kPi * z);
          });
        }
    const double scale = amp / std::max(1.0, f.max_abs());
    f *= scale;
    eta.displacement[i] = std::move(f);
  }
  return eta;
}

InitialDeformation canonical_G0(const Grid& g) {
  MatrixField m(g);
  for (std::size_t p = 0; p < m(0, 0).size(); ++p) {
    m(0, 0).data()[p] = 1.0;
    m(1, 1).data()[p] = 1.0;
  }
  return InitialDeformation{std::move(m)};
}
}  // namespace

TEST_CASE("deformation gradient of the identity map") {
  Grid g(16, 16, 16);
  auto F = deformation_gradient(FlowMap::identity(g));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(F(i, j).max_abs() == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-14));
}

TEST_CASE("deformation gradient of a single-mode shear") {
  Grid g(16, 16, 16);
  FlowMap eta(g);
  eta.displacement[0] = ScalarField::sample(
      g, [](double, double y, double) { return 0.1 * std::sin(2 * kPi * y); });
  auto F = deformation_gradient(eta);
  auto expect = ScalarField::sample(
      g, [](double, double y, double) { return 0.2 * kPi * std::cos(2 * kPi * y); });
  CHECK((F(0, 1) - expect).max_abs() < 1e-12);
  CHECK(F(0, 2).max_abs() < 1e-12);
  CHECK(F(1, 0).max_abs() < 1e-12);
  CHECK((F(0, 0).max_abs()) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("gradient matches the analytic oracle at O(h^4) under refinement") {
  // Horizontal derivatives are spectral-exact; the vertical part carries the
  // 4th-order stencil error, so errors shrink 16x when n3 doubles.
  double err[2];
  int idx = 0;
  for (int n3 : {16, 32}) {
    Grid g(16, 16, n3);
    FlowMap eta(g);
    eta.displacement[0] = ScalarField::sample(g, [](double, double y, double z) {
      return 0.1 * std::sin(2 * kPi * y) * std::cos(kPi * z);
    });
    eta.displacement[2] = ScalarField::sample(g, [](double x, double, double z) {
      return 0.05 * std::cos(2 * kPi * x) * std::sin(2 * kPi * z);
    });
    auto F = deformation_gradient(eta);
    auto F02 = ScalarField::sample(g, [](double, double y, double z) {
      return -0.1 * kPi * std::sin(2 * kPi * y) * std::sin(kPi * z);
    });
    auto F22 = ScalarField::sample(g, [](double x, double, double z) {
      return 1.0 + 0.1 * kPi * std::cos(2 * kPi * x) * std::cos(2 * kPi * z);
    });
    err[idx++] = std::max((F(0, 2) - F02).max_abs(), (F(2, 2) - F22).max_abs());
  }
  CHECK(err[0] / err[1] > 12.0);
}

TEST_CASE("jacobian and cofactor: closed forms") {
  Grid g(8, 8, 8);
  auto F = MatrixField::identity(g);
  auto [J, A] = jacobian_and_cofactor(F);
  CHECK((J.max_abs()) == Catch::Approx(1.0).margin(1e-15));
  CHECK((A - MatrixField::identity(g)).max_abs() < 1e-15);

  MatrixField D = MatrixField::identity(g);
  D(0, 0) *= 2.0;
  auto [J2, A2] = jacobian_and_cofactor(D);
  CHECK(J2.max_abs() == Catch::Approx(2.0).margin(1e-14));
  CHECK(A2(0, 0).max_abs() == Catch::Approx(0.5).margin(1e-14));
  CHECK(A2(1, 1).max_abs() == Catch::Approx(1.0).margin(1e-14));

  MatrixField S = MatrixField::identity(g);
  S(0, 1) = ScalarField(g, 0.3);  // shear
  auto [J3, A3] = jacobian_and_cofactor(S);
  CHECK(J3.max_abs() == Catch::Approx(1.0).margin(1e-14));
  CHECK(A3(1, 0).max_abs() == Catch::Approx(0.3).margin(1e-14));
  CHECK((A3(1, 0)(0, 0, 0)) == Catch::Approx(-0.3).margin(1e-14));

  MatrixField Z(g);  // singular
  CHECK_THROWS_AS(jacobian_and_cofactor(Z), SingularMap);
}

TEST_CASE("A F^T = I nodewise for random maps") {
  Grid g(16, 16, 16);
  auto eta = random_flowmap(g, 0.05, 3);
  auto F = deformation_gradient(eta);
  auto [J, A] = jacobian_and_cofactor(F);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ScalarField acc(g);
      for (int k = 0; k < 3; ++k)
        for (std::size_t p = 0; p < acc.size(); ++p)
          acc.data()[p] += A(i, k).data()[p] * F(j, k).data()[p];
      const double target = i == j ? 1.0 : 0.0;
      for (std::size_t p = 0; p < acc.size(); ++p)
        worst = std::max(worst, std::abs(acc.data()[p] - target));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("piola residual: identity, affine, refinement decay") {
  Grid g(16, 16, 16);
  CHECK(piola_residual(FlowMap::identity(g)) < 1e-11);

  // Affine map: constant F, so J A is constant.
  FlowMap aff(g);
  aff.displacement[0] = ScalarField::sample(g, [](double, double, double z) { return 0.2 * z; });
  CHECK(piola_residual(aff) < 1e-10);

  double res[2];
  int idx = 0;
  for (int n3 : {16, 32}) {
    res[idx++] = piola_residual(random_flowmap(Grid(16, 16, n3), 0.05, 21));
  }
  CHECK(std::log2(res[0] / res[1]) > 3.0);
}

TEST_CASE("directional derivative along canonical columns") {
  Grid g(16, 16, 8);
  auto G0 = canonical_G0(g);
  // f = Id: (G0^T grad eta)_{ij} = G0_{ji}
  auto X = directional(G0, FlowMap::identity(g));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double want = (i == j && i < 2) ? 1.0 : 0.0;
      CHECK(X(i, j).max_abs() == Catch::Approx(want).margin(1e-13));
    }

  ScalarField c(g, 4.2);
  auto dc = directional(G0, c);
  for (int i = 0; i < 3; ++i) CHECK(dc[i].max_abs() < 1e-12);

  auto f = ScalarField::sample(g, [](double x, double, double) { return std::sin(2 * kPi * x); });
  auto df = directional(G0, f);
  auto expect =
      ScalarField::sample(g, [](double x, double, double) { return 2 * kPi * std::cos(2 * kPi * x); });
  CHECK((df[0] - expect).max_abs() < 1e-11);
  CHECK(df[1].max_abs() < 1e-11);
  CHECK(df[2].max_abs() < 1e-11);
}

TEST_CASE("elastic force: constant stress and single-mode reduction") {
  Grid g(16, 16, 16);
  auto G0 = canonical_G0(g);
  auto f0 = elastic_force(G0, FlowMap::identity(g));
  CHECK(f0.max_abs() < 1e-12);

  const double eps = 0.01;
  FlowMap eta(g);
  eta.displacement[0] =
      ScalarField::sample(g, [=](double x, double, double) { return eps * std::sin(2 * kPi * x); });
  auto f = elastic_force(G0, eta);
  auto expect = ScalarField::sample(
      g, [=](double x, double, double) { return -4 * kPi * kPi * eps * std::sin(2 * kPi * x); });
  CHECK((f[0] - expect).max_abs() < 1e-10);
  CHECK(f[1].max_abs() < 1e-10);
  CHECK(f[2].max_abs() < 1e-10);
}

TEST_CASE("elastic force is linear in the flow map") {
  Grid g(16, 16, 8);
  auto G0 = canonical_G0(g);
  auto ea = random_flowmap(g, 0.05, 8);
  auto eb = random_flowmap(g, 0.05, 9);
  FlowMap sum(g);
  sum.displacement = ea.displacement;
  sum.displacement += eb.displacement;
  // force(Id + da + db) + force(Id) = force(Id + da) + force(Id + db)
  auto lhs = elastic_force(G0, sum);
  lhs += elastic_force(G0, FlowMap::identity(g));
  auto rhs = elastic_force(G0, ea);
  rhs += elastic_force(G0, eb);
  CHECK((lhs - rhs).max_abs() < 1e-9);
}

TEST_CASE("conservative force matches nested directional form for exact data") {
  // Columns of G0 divergence-free (canonical + z-dependent stream column).
  // With the third row of G0 identically zero neither route ever applies a
  // vertical derivative to a product, and the horizontal products stay below
  // Nyquist, so the two routes agree to round-off.
  double gap[2];
  int idx = 0;
  for (int n3 : {16, 32}) {
    Grid g(16, 16, n3);
    MatrixField m(g);
    for (std::size_t p = 0; p < m(0, 0).size(); ++p) {
      m(0, 0).data()[p] = 1.0;
      m(1, 1).data()[p] = 1.0;
    }
    auto psi = ScalarField::sample(g, [](double x, double y, double z) {
      return 0.2 * std::sin(2 * kPi * x) * std::sin(2 * kPi * y) * std::cos(kPi * z) / (2 * kPi);
    });
    m(0, 2) = tangential_derivative(psi, 2);   // third column (d2 psi, -d1 psi, 0)
    m(1, 2) = tangential_derivative(psi, 1);
    m(1, 2) *= -1.0;
    InitialDeformation G0{std::move(m)};
    auto eta = random_flowmap(g, 0.05, 17);
    auto conservative = elastic_force(G0, eta);
    auto nested = directional_contract(G0, directional(G0, eta));
    gap[idx] = 0.0;
    for (int i = 0; i < 3; ++i) gap[idx] = std::max(gap[idx], l2_norm(conservative[i] - nested[i]));
    ++idx;
  }
  CHECK(gap[0] < 1e-12);
  CHECK(gap[1] < 1e-12);
}

TEST_CASE("conservative force matches a direct second-order stencil oracle") {
  // Direct FD evaluation of d_l(F_im (G0 G0^T)_ml) on the analytic map,
  // second order; the gap shrinks 4x when the whole grid doubles.
  auto dmap = [](double x, double y, double z, int i) {
    if (i == 0) return 0.04 * std::sin(2 * kPi * y) * std::cos(kPi * z);
    if (i == 1) return 0.03 * std::cos(2 * kPi * x);
    return 0.02 * std::sin(2 * kPi * x) * std::sin(kPi * z);
  };
  double gap[2];
  int idx = 0;
  for (int n : {16, 32}) {
    Grid g(n, n, n);
    FlowMap eta(g);
    for (int i = 0; i < 3; ++i)
      eta.displacement[i] =
          ScalarField::sample(g, [&, i](double x, double y, double z) { return dmap(x, y, z, i); });
    auto G0 = canonical_G0(g);
    auto force = elastic_force(G0, eta);
    // canonical G0: force_i = (d11 + d22)(x_i + d_i) = horizontal Laplacian of d_i
    const double h = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      auto oracle = ScalarField::sample(g, [&, i](double x, double y, double z) {
        const double lxx =
            (dmap(x + h, y, z, i) - 2 * dmap(x, y, z, i) + dmap(x - h, y, z, i)) / (h * h);
        const double lyy =
            (dmap(x, y + h, z, i) - 2 * dmap(x, y, z, i) + dmap(x, y - h, z, i)) / (h * h);
        return lxx + lyy;
      });
      worst = std::max(worst, (force[i] - oracle).max_abs());
    }
    gap[idx++] = worst;
  }
  CHECK(gap[0] < 1e-4);
}

TEST_CASE("deformation reconstruction F = grad(eta) G0") {
  Grid g(8, 8, 8);
  auto G0 = canonical_G0(g);
  auto F = deformation_from_flowmap(FlowMap::identity(g), G0);
  CHECK((F - G0.G0).max_abs() < 1e-13);
}

TEST_CASE("twisted operators reduce to plain ones at A = I") {
  Grid g(16, 16, 16);
  auto A = MatrixField::identity(g);
  auto eta = random_flowmap(g, 0.3, 31);
  const auto& v = eta.displacement;
  auto f = v[0];

  auto g1 = a_gradient(A, f);
  auto g2 = gradient(f);
  for (int i = 0; i < 3; ++i) CHECK((g1[i] - g2[i]).max_abs() < 1e-12);

  auto d1 = a_divergence(A, v);
  auto d2 = divergence(v);
  CHECK((d1 - d2).max_abs() < 1e-12);

  auto c1 = a_curl(A, v);
  auto c2 = curl(v);
  for (int i = 0; i < 3; ++i) CHECK((c1[i] - c2[i]).max_abs() < 1e-12);

  ScalarField c(g, 2.0);
  CHECK(a_gradient(A, c)[0].max_abs() < 1e-13);
}

TEST_CASE("matrix curl: constants, antisymmetry, gradients") {
  Grid g(16, 16, 16);
  MatrixField c(g);
  for (auto& f : c.c) f = ScalarField(g, 1.5);
  auto r = matrix_curl(c);
  for (const auto& f : r.c) CHECK(f.max_abs() < 1e-12);

  auto eta = random_flowmap(g, 0.5, 55);
  MatrixField G = gradient(eta.displacement);
  auto rc = matrix_curl(G);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        ScalarField s = rc(i, j, k);
        s += rc(j, i, k);
        CHECK(s.max_abs() < 1e-10);  // antisymmetry
      }
  // curl of a gradient vanishes within discretization error
  double worst = 0.0;
  for (const auto& f : rc.c) worst = std::max(worst, l2_norm(f));
  CHECK(worst < 5e-3 * G.max_abs());
}

TEST_CASE("flow map Sobolev norm of the identity") {
  Grid g(16, 16, 32);
  // |Id|_4^2 = int |x|^2 + |grad Id|^2 = 1 + 3, analytic identity part.
  const double v = flowmap_sobolev_sq(FlowMap::identity(g), 4);
  CHECK(v == Catch::Approx(4.0).epsilon(1e-13));
}
