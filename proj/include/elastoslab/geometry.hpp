#pragma once

#include <cmath>

#include "elastoslab/calculus.hpp"
#include "elastoslab/grid.hpp"

namespace elastoslab {

inline constexpr double kDetFloor = 1e-8;   // nodewise Jacobian floor
inline constexpr double kTauCon = 1e-8;     // constraint tolerance on initial data

/// Flow map eta = x + displacement; the displacement is periodic
/// horizontally, so the affine identity part is differentiated analytically.
struct FlowMap {
  VectorField displacement;

  FlowMap() = default;
  explicit FlowMap(const Grid& g) : displacement(g) {}
  explicit FlowMap(VectorField d) : displacement(std::move(d)) {}

  const Grid& grid() const { return displacement.grid(); }

  static FlowMap identity(const Grid& g) { return FlowMap(g); }

  /// eta_i sampled nodewise (x_i + d_i).
  ScalarField component(int i) const {
    const Grid& g = grid();
    ScalarField out = displacement[i];
    for (int i3 = 0; i3 <= g.n3; ++i3) {
      double* lay = out.layer(i3);
      for (int i1 = 0; i1 < g.n1; ++i1)
        for (int i2 = 0; i2 < g.n2; ++i2) {
          const double xi = (i == 0) ? g.x1(i1) : (i == 1) ? g.x2(i2) : g.x3(i3);
          lay[std::size_t(i1) * g.n2 + i2] += xi;
        }
    }
    return out;
  }
};

/// F_ij = d_j eta_i = delta_ij + d_j(displacement_i).
inline MatrixField deformation_gradient(const FlowMap& eta) {
  const Grid& g = eta.grid();
  MatrixField F(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      F(i, j) = partial(eta.displacement[i], j + 1);
      if (i == j)
        for (std::size_t n = 0; n < F(i, j).size(); ++n) F(i, j).data()[n] += 1.0;
    }
  return F;
}

struct JacobianCofactor {
  ScalarField J;
  MatrixField A;  // inverse transpose of F
};

/// J = det F and A = F^{-T} via the adjugate, nodewise. Throws SingularMap
/// if the determinant falls below the floor anywhere.
inline JacobianCofactor jacobian_and_cofactor(const MatrixField& F) {
  const Grid& g = F.grid();
  JacobianCofactor out{ScalarField::uninitialized(g), MatrixField(g)};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.A(i, j) = ScalarField::uninitialized(g);
  const std::size_t n = out.J.size();
  const double* f[3][3];
  double* a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      f[i][j] = F(i, j).data();
      a[i][j] = out.A(i, j).data();
    }
  double* J = out.J.data();
  for (std::size_t p = 0; p < n; ++p) {
    const double m00 = f[0][0][p], m01 = f[0][1][p], m02 = f[0][2][p];
    const double m10 = f[1][0][p], m11 = f[1][1][p], m12 = f[1][2][p];
    const double m20 = f[2][0][p], m21 = f[2][1][p], m22 = f[2][2][p];
    const double c00 = m11 * m22 - m12 * m21;
    const double c01 = m12 * m20 - m10 * m22;
    const double c02 = m10 * m21 - m11 * m20;
    const double det = m00 * c00 + m01 * c01 + m02 * c02;
    if (!(det > kDetFloor)) throw SingularMap("deformation gradient determinant " +
                                              std::to_string(det) + " at node " +
                                              std::to_string(p));
    J[p] = det;
    const double inv = 1.0 / det;
    // A = F^{-T} = cof(F)/det, entrywise A_ij = (d det / d F_ij)/det.
    a[0][0][p] = c00 * inv;
    a[0][1][p] = c01 * inv;
    a[0][2][p] = c02 * inv;
    a[1][0][p] = (m02 * m21 - m01 * m22) * inv;
    a[1][1][p] = (m00 * m22 - m02 * m20) * inv;
    a[1][2][p] = (m01 * m20 - m00 * m21) * inv;
    a[2][0][p] = (m01 * m12 - m02 * m11) * inv;
    a[2][1][p] = (m02 * m10 - m00 * m12) * inv;
    a[2][2][p] = (m00 * m11 - m01 * m10) * inv;
  }
  return out;
}

/// max_i || d_j (J A_ij) ||_0 — the discrete commutation defect of the
/// cofactor divergence identity.
inline double piola_residual(const FlowMap& eta) {
  auto [J, A] = jacobian_and_cofactor(deformation_gradient(eta));
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    ScalarField acc(eta.grid());
    for (int j = 0; j < 3; ++j) {
      ScalarField ja = A(i, j);
      for (std::size_t p = 0; p < ja.size(); ++p) ja.data()[p] *= J.data()[p];
      acc += partial(ja, j + 1);
    }
    worst = std::max(worst, l2_norm(acc));
  }
  return worst;
}

/// Initial deformation tensor, the parameter matrix of the elastic forcing.
/// Columns are divergence-free; the third row vanishes on the faces.
struct InitialDeformation {
  MatrixField G0;

  const Grid& grid() const { return G0.grid(); }

  /// (||div columns||_0, max face |row-3 entry|) — the two constraint residuals.
  std::pair<double, double> constraint_residuals() const {
    const Grid& g = grid();
    double div2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      ScalarField d = partial(G0(0, i), 1);
      d += partial(G0(1, i), 2);
      d += partial(G0(2, i), 3);
      div2 += l2_norm_sq(d);
    }
    double face = 0.0;
    for (Face f : {Face::bottom, Face::top})
      for (int i = 0; i < 3; ++i) face = std::max(face, trace(G0(2, i), f).max_abs());
    return {std::sqrt(div2), face};
  }
};

/// (G0^T . grad f)_i = G0_ki d_k f — directional derivatives along the
/// columns of G0; output rank grows by the selector index.
inline VectorField directional(const InitialDeformation& G0, const ScalarField& f) {
  const Grid& g = f.grid();
  VectorField grad_f = gradient(f);
  VectorField out(g);
  for (int i = 0; i < 3; ++i) {
    ScalarField acc(g);
    for (int k = 0; k < 3; ++k) {
      const double* gk = G0.G0(k, i).data();
      const double* df = grad_f[k].data();
      double* o = acc.data();
      for (std::size_t p = 0; p < acc.size(); ++p) o[p] += gk[p] * df[p];
    }
    out[i] = std::move(acc);
  }
  return out;
}

/// (G0^T . grad v)_{ij} = G0_ki d_k v_j for a vector field.
inline MatrixField directional(const InitialDeformation& G0, const VectorField& v) {
  MatrixField out(v.grid());
  for (int j = 0; j < 3; ++j) {
    VectorField col = directional(G0, v[j]);
    for (int i = 0; i < 3; ++i) out(i, j) = std::move(col[i]);
  }
  return out;
}

/// Same for a flow map: (G0^T . grad eta)_{ij} = G0_ji + G0_ki d_k d_j,
/// identity part handled analytically.
inline MatrixField directional(const InitialDeformation& G0, const FlowMap& eta) {
  MatrixField out = directional(G0, eta.displacement);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) += G0.G0(j, i);
  return out;
}

/// Contracted second application: out_j = G0_{m l} d_m X_{l j}.
inline VectorField directional_contract(const InitialDeformation& G0, const MatrixField& X) {
  const Grid& g = X.grid();
  VectorField out(g);
  for (int j = 0; j < 3; ++j) {
    ScalarField acc(g);
    for (int l = 0; l < 3; ++l) {
      VectorField grad_x = gradient(X(l, j));
      for (int m = 0; m < 3; ++m) {
        const double* gm = G0.G0(m, l).data();
        const double* dx = grad_x[m].data();
        double* o = acc.data();
        for (std::size_t p = 0; p < acc.size(); ++p) o[p] += gm[p] * dx[p];
      }
    }
    out[j] = std::move(acc);
  }
  return out;
}

/// G0 G0^T, the (time-independent) quadratic stress factor.
inline MatrixField stress_factor(const InitialDeformation& G0) {
  MatrixField gg(G0.grid());
  const std::size_t n = gg(0, 0).size();
  for (int m = 0; m < 3; ++m)
    for (int l = 0; l < 3; ++l)
      for (int k = 0; k < 3; ++k)
        fma_acc(gg(m, l).data(), G0.G0(m, k).data(), G0.G0(l, k).data(), n);
  return gg;
}

/// Elastic forcing in conservative form: force_i = d_l ( d_m eta_i G0_mk G0_lk )
/// = d_l ( F_im (G0 G0^T)_ml ). Coincides with the nested directional form
/// when the columns of G0 are divergence-free. Pass the cached stress factor
/// when calling in a loop.
inline VectorField elastic_force(const InitialDeformation& G0, const FlowMap& eta,
                                 const MatrixField* gg_cached = nullptr) {
  const Grid& g = eta.grid();
  const MatrixField gg_local = gg_cached ? MatrixField() : stress_factor(G0);
  const MatrixField& gg = gg_cached ? *gg_cached : gg_local;
  MatrixField F = deformation_gradient(eta);
  const std::size_t n = F(0, 0).size();
  VectorField out(g);
  for (int i = 0; i < 3; ++i) {
    ScalarField acc(g);
    for (int l = 0; l < 3; ++l) {
      ScalarField S(g);
      for (int m = 0; m < 3; ++m) fma_acc(S.data(), F(i, m).data(), gg(m, l).data(), n);
      acc += partial(S, l + 1);
    }
    out[i] = std::move(acc);
  }
  return out;
}

/// F = (grad eta) G0, the reconstructed deformation tensor.
inline MatrixField deformation_from_flowmap(const FlowMap& eta, const InitialDeformation& G0) {
  MatrixField F = deformation_gradient(eta);
  MatrixField out(eta.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ScalarField acc(eta.grid());
      double* o = acc.data();
      for (int m = 0; m < 3; ++m) {
        const double* f = F(i, m).data();
        const double* g0 = G0.G0(m, j).data();
        for (std::size_t p = 0; p < acc.size(); ++p) o[p] += f[p] * g0[p];
      }
      out(i, j) = std::move(acc);
    }
  return out;
}

/// Twisted gradient (grad_A f)_i = A_ij d_j f.
inline VectorField a_gradient(const MatrixField& A, const ScalarField& f) {
  VectorField grad_f = gradient(f);
  VectorField out(f.grid());
  for (int i = 0; i < 3; ++i) {
    ScalarField acc(f.grid());
    double* o = acc.data();
    for (int j = 0; j < 3; ++j) {
      const double* a = A(i, j).data();
      const double* d = grad_f[j].data();
      for (std::size_t p = 0; p < acc.size(); ++p) o[p] += a[p] * d[p];
    }
    out[i] = std::move(acc);
  }
  return out;
}

/// div_A g = A_ij d_j g_i.
inline ScalarField a_divergence(const MatrixField& A, const VectorField& v) {
  ScalarField out(v.grid());
  double* o = out.data();
  for (int i = 0; i < 3; ++i) {
    VectorField grad_vi = gradient(v[i]);
    for (int j = 0; j < 3; ++j) {
      const double* a = A(i, j).data();
      const double* d = grad_vi[j].data();
      for (std::size_t p = 0; p < out.size(); ++p) o[p] += a[p] * d[p];
    }
  }
  return out;
}

/// (curl_A g)_i = eps_ijl A_jm d_m g_l.
inline VectorField a_curl(const MatrixField& A, const VectorField& v) {
  const Grid& g = v.grid();
  MatrixField dv = gradient(v);  // dv(i,j) = d_j v_i
  VectorField out(g);
  auto add_term = [&](int i, int j, int l, double sign) {
    double* o = out[i].data();
    for (int m = 0; m < 3; ++m) {
      const double* a = A(j, m).data();
      const double* d = dv(l, m).data();
      for (std::size_t p = 0; p < out[i].size(); ++p) o[p] += sign * a[p] * d[p];
    }
  };
  add_term(0, 1, 2, 1.0);
  add_term(0, 2, 1, -1.0);
  add_term(1, 2, 0, 1.0);
  add_term(1, 0, 2, -1.0);
  add_term(2, 0, 1, 1.0);
  add_term(2, 1, 0, -1.0);
  return out;
}

/// Matrix curl: (curl G)_{ijk} = d_i G_kj - d_j G_ki, antisymmetric in (i,j).
inline Rank3Field matrix_curl(const MatrixField& G) {
  Rank3Field out(G.grid());
  MatrixField d[3];
  for (int ax = 0; ax < 3; ++ax) d[ax] = MatrixField(G.grid());
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      VectorField grad_ab = gradient(G(a, b));
      for (int ax = 0; ax < 3; ++ax) d[ax](a, b) = std::move(grad_ab[ax]);
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        ScalarField f = d[i](k, j);
        f -= d[j](k, i);
        out(i, j, k) = std::move(f);
      }
  return out;
}

/// Twisted matrix curl: (curl_A G)_{ijk} = A_im d_m G_kj - A_jm d_m G_ki.
inline Rank3Field matrix_curl_a(const MatrixField& A, const MatrixField& G) {
  const Grid& g = G.grid();
  MatrixField d[3];
  for (int ax = 0; ax < 3; ++ax) d[ax] = MatrixField(g);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      VectorField grad_ab = gradient(G(a, b));
      for (int ax = 0; ax < 3; ++ax) d[ax](a, b) = std::move(grad_ab[ax]);
    }
  Rank3Field out(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        ScalarField f(g);
        double* o = f.data();
        for (int m = 0; m < 3; ++m) {
          const double* ai = A(i, m).data();
          const double* aj = A(j, m).data();
          const double* gkj = d[m](k, j).data();
          const double* gki = d[m](k, i).data();
          for (std::size_t p = 0; p < f.size(); ++p) o[p] += ai[p] * gkj[p] - aj[p] * gki[p];
        }
        out(i, j, k) = std::move(f);
      }
  return out;
}

/// H^s norm over the 27 rank-3 components.
inline double sobolev_norm(const Rank3Field& r, int s) {
  double t = 0.0;
  for (const auto& f : r.c) t += sobolev_norm_sq(f, s);
  return std::sqrt(t);
}

/// H^s norm of the flow map. The affine identity part is expanded
/// analytically (int |x|^2 = 1, int |grad x|^2 = 3 on the unit slab) so the
/// rest map scores exactly 4 at any resolution; cross terms with the
/// displacement use the grid quadrature.
inline double flowmap_sobolev_sq(const FlowMap& eta, int s) {
  const Grid& g = eta.grid();
  double total = 1.0;  // int |x|^2 over the unit slab
  for (int i = 0; i < 3; ++i) {
    // |x_i + d_i|^2 = int x_i^2 (analytic) + 2 int x_i d_i + |d_i|^2.
    ScalarField cross = eta.displacement[i];
    for (int i3 = 0; i3 <= g.n3; ++i3) {
      double* lay = cross.layer(i3);
      for (int i1 = 0; i1 < g.n1; ++i1)
        for (int i2 = 0; i2 < g.n2; ++i2) {
          const double xi = (i == 0) ? g.x1(i1) : (i == 1) ? g.x2(i2) : g.x3(i3);
          lay[std::size_t(i1) * g.n2 + i2] *= xi;
        }
    }
    total += 2.0 * integral(cross) + l2_norm_sq(eta.displacement[i]);
    for (int a1 = 0; a1 <= s; ++a1)
      for (int a2 = 0; a2 + a1 <= s; ++a2)
        for (int a3 = 0; a3 + a2 + a1 <= s; ++a3) {
          const int order = a1 + a2 + a3;
          if (order == 0) continue;
          ScalarField d = multi_derivative(eta.displacement[i], a1, a2, a3);
          if (order == 1) {
            const int axis = a1 == 1 ? 0 : (a2 == 1 ? 1 : 2);
            if (axis == i) {
              // |delta_ii + D d|^2 = 1 + 2 int D d + |D d|^2
              total += 1.0 + 2.0 * integral(d);
            }
          }
          total += l2_norm_sq(d);
        }
  }
  return total;
}

inline double flowmap_sobolev(const FlowMap& eta, int s) {
  return std::sqrt(flowmap_sobolev_sq(eta, s));
}

}  // namespace elastoslab
