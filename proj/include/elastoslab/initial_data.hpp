#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "elastoslab/elliptic.hpp"
#include "elastoslab/geometry.hpp"

namespace elastoslab {

/// Per-face stability regime: Rayleigh-Taylor sign condition or
/// non-collinearity of the first two rows of G0.
enum class Regime { rt, nc };

inline const char* regime_name(Regime r) { return r == Regime::rt ? "rt" : "nc"; }

struct BoundaryPartition {
  Regime bottom = Regime::nc;
  Regime top = Regime::nc;
  double lambda = 0.1;  // RT margin floor
  double delta = 0.1;   // non-collinearity floor

  Regime of(Face f) const { return f == Face::bottom ? bottom : top; }
  bool has_rt() const { return bottom == Regime::rt || top == Regime::rt; }
};

struct StabilityCheck {
  bool pass = false;
  double margin = 0.0;
};

/// Leray-type projection: v - grad(phi) with -Lap(phi) = -div v, phi = 0 on
/// the faces. The discrete Laplacian is div(grad .) exactly, so the
/// projected divergence sits at the solver residual.
inline VectorField project_divergence_free(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField rhs = divergence(v);
  rhs *= -1.0;
  BoundaryScalarField zb(g, Face::bottom), zt(g, Face::top);
  auto phi = solve_laplace_dirichlet(rhs, zb, zt);
  VectorField grad_phi = gradient(phi.field);
  VectorField out = v;
  out.axpy(-1.0, grad_phi);
  return out;
}

enum class DeformationRecipe { canonical, sheared, columnar };

inline DeformationRecipe deformation_recipe_from_name(const std::string& s) {
  if (s == "canonical") return DeformationRecipe::canonical;
  if (s == "sheared") return DeformationRecipe::sheared;
  if (s == "columnar") return DeformationRecipe::columnar;
  throw ValidationError("g0", "unknown deformation recipe '" + s + "'");
}

/// Builds the parameter matrix G0. All recipes keep the columns
/// divergence-free and the third row identically zero, so both constraints
/// hold to round-off:
///   canonical: rows (e1, e2, 0);
///   sheared:   canonical plus G0_{12} = amp sin(2 pi x2) cos(pi x3);
///   columnar:  canonical plus third column (d2 psi, -d1 psi, 0) from the
///              stream function psi = amp sin(2 pi x1) sin(2 pi x2)/(2 pi).
inline InitialDeformation make_G0(DeformationRecipe recipe, const Grid& g, double amp = 0.3) {
  MatrixField m(g);
  for (std::size_t p = 0; p < m(0, 0).size(); ++p) {
    m(0, 0).data()[p] = 1.0;
    m(1, 1).data()[p] = 1.0;
  }
  switch (recipe) {
    case DeformationRecipe::canonical:
      break;
    case DeformationRecipe::sheared:
      // Column 2 becomes (s(x2,x3), 1, 0); d1 s = 0 keeps it divergence-free.
      m(0, 1) = ScalarField::sample(g, [amp](double, double y, double z) {
        return amp * std::sin(2.0 * M_PI * y) * std::cos(M_PI * z);
      });
      break;
    case DeformationRecipe::columnar: {
      auto psi = ScalarField::sample(g, [amp](double x, double y, double) {
        return amp * std::sin(2.0 * M_PI * x) * std::sin(2.0 * M_PI * y) / (2.0 * M_PI);
      });
      m(0, 2) = tangential_derivative(psi, 2);
      m(1, 2) = tangential_derivative(psi, 1);
      m(1, 2) *= -1.0;
      break;
    }
  }
  InitialDeformation G0{std::move(m)};
  auto [div_res, face_res] = G0.constraint_residuals();
  if (div_res > kTauCon || face_res > kTauCon)
    throw InvalidRecipe("deformation recipe violates its constraints: div " +
                        std::to_string(div_res) + ", face " + std::to_string(face_res));
  return G0;
}

/// Initial pressure: -Lap q0 = dv_i/dx_j dv_j/dx_i - dG_ik/dx_j dG_jk/dx_i,
/// q0 = 0 on the faces.
inline ScalarField initial_pressure(const VectorField& v0, const InitialDeformation& G0) {
  const Grid& g = v0.grid();
  MatrixField dv = gradient(v0);  // dv(i,j) = d_j v_i
  ScalarField rhs(g);
  double* r = rhs.data();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double* a = dv(i, j).data();
      const double* b = dv(j, i).data();
      for (std::size_t p = 0; p < rhs.size(); ++p) r[p] += a[p] * b[p];
    }
  for (int k = 0; k < 3; ++k) {
    // column k as a vector field
    VectorField col(g);
    for (int i = 0; i < 3; ++i) col[i] = G0.G0(i, k);
    MatrixField dc = gradient(col);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double* a = dc(i, j).data();
        const double* b = dc(j, i).data();
        for (std::size_t p = 0; p < rhs.size(); ++p) r[p] -= a[p] * b[p];
      }
  }
  BoundaryScalarField zb(g, Face::bottom), zt(g, Face::top);
  return solve_laplace_dirichlet(rhs, zb, zt).field;
}

/// Outward normal pressure gradient margin: min over the face of -grad(q).N.
inline StabilityCheck check_rayleigh_taylor(const ScalarField& q, Face face, double lambda) {
  const double sign = face_normal_sign(face);
  BoundaryScalarField dq = trace(vertical_derivative(q, 1), face);
  double margin = 1e300;
  for (std::size_t i = 0; i < dq.size(); ++i)
    margin = std::min(margin, -sign * dq.data()[i]);
  return {margin >= lambda, margin};
}

/// Non-collinearity margin: min over the face of |row1(G0) x row2(G0)|.
inline StabilityCheck check_noncollinearity(const InitialDeformation& G0, Face face,
                                            double delta) {
  const Grid& g = G0.grid();
  BoundaryScalarField r1[3], r2[3];
  for (int j = 0; j < 3; ++j) {
    r1[j] = trace(G0.G0(0, j), face);
    r2[j] = trace(G0.G0(1, j), face);
  }
  double margin = 1e300;
  for (std::size_t p = 0; p < g.layer_size(); ++p) {
    const double a1 = r1[0].data()[p], a2 = r1[1].data()[p], a3 = r1[2].data()[p];
    const double b1 = r2[0].data()[p], b2 = r2[1].data()[p], b3 = r2[2].data()[p];
    const double c1 = a2 * b3 - a3 * b2;
    const double c2 = a3 * b1 - a1 * b3;
    const double c3 = a1 * b2 - a2 * b1;
    margin = std::min(margin, std::sqrt(c1 * c1 + c2 * c2 + c3 * c3));
  }
  return {margin >= delta, margin};
}

struct InitialData {
  VectorField v0;
  InitialDeformation G0;
  ScalarField q0;
  BoundaryPartition partition;
  double rt_margin[2] = {0.0, 0.0};  // measured, indexed by Face
  double nc_margin[2] = {0.0, 0.0};
};

/// Projects the velocity, builds G0, solves the initial pressure, measures
/// both margins on both faces and validates the requested per-face regime.
inline InitialData assemble_initial_data(const VectorField& v_raw, DeformationRecipe recipe,
                                         const BoundaryPartition& partition,
                                         double recipe_amp = 0.3) {
  InitialData d{project_divergence_free(v_raw), make_G0(recipe, v_raw.grid(), recipe_amp),
                ScalarField(), partition};
  const double div_res = l2_norm(divergence(d.v0));
  if (div_res > kTauCon)
    throw InvalidRecipe("projected velocity divergence " + std::to_string(div_res));
  d.q0 = initial_pressure(d.v0, d.G0);

  std::string failure;
  for (Face f : {Face::bottom, Face::top}) {
    const int i = int(f);
    auto rt = check_rayleigh_taylor(d.q0, f, partition.lambda);
    auto nc = check_noncollinearity(d.G0, f, partition.delta);
    d.rt_margin[i] = rt.margin;
    d.nc_margin[i] = nc.margin;
    const bool ok = partition.of(f) == Regime::rt ? rt.pass : nc.pass;
    if (!ok)
      failure += std::string(failure.empty() ? "" : "; ") + face_name(f) + " face requested " +
                 regime_name(partition.of(f)) + " but margins are rt=" +
                 std::to_string(rt.margin) + ", nc=" + std::to_string(nc.margin);
  }
  if (!failure.empty()) throw StabilityViolation(failure);
  return d;
}

}  // namespace elastoslab
