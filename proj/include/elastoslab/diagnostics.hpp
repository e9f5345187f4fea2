#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "elastoslab/evolve.hpp"

namespace elastoslab {

// ---------------------------------------------------------------------------
// Energy functionals

struct EnergyParts {
  double v4 = 0.0;
  double eta4 = 0.0;
  double geta4 = 0.0;
  double boundary = 0.0;
  double total() const { return v4 + eta4 + geta4 + boundary; }
};

namespace detail {

/// Fourth tangential derivative of the map trace contracted against a
/// face weight w_i, integrated over the face: | sum_i T4(eta_i) w_i |^2.
inline double boundary_energy_term(const FlowMap& eta, Face f,
                                   const std::array<BoundaryScalarField, 3>& w,
                                   const MollifierKernel* kernel) {
  const Grid& g = eta.grid();
  BoundaryScalarField s(g, f);
  for (int i = 0; i < 3; ++i) {
    BoundaryScalarField ti = trace(eta.displacement[i], f);
    if (kernel) ti = mollify(ti, *kernel);
    BoundaryScalarField t4 = boundary_fourth_tangential(ti);
    for (std::size_t p = 0; p < s.size(); ++p) s.data()[p] += t4.data()[p] * w[i].data()[p];
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) acc += s.data()[p] * s.data()[p];
  return acc * g.h1 * g.h2;
}

}  // namespace detail

/// Limit energy: |v|_4^2 + |eta|_4^2 + |G0^T.grad eta|_4^2 plus the RT-face
/// term |T4 eta . n|^2 with the unit normal n = A N / |A N| of the
/// unsmoothed map.
inline EnergyParts energy_limit(const SimState& s, const InitialDeformation& G0,
                                const BoundaryPartition& partition) {
  EnergyParts e;
  e.v4 = sobolev_norm_sq(s.v, 4);
  e.eta4 = flowmap_sobolev_sq(s.eta, 4);
  e.geta4 = sobolev_norm_sq(directional(G0, s.eta), 4);
  if (partition.has_rt()) {
    auto jc = jacobian_and_cofactor(deformation_gradient(s.eta));
    for (Face f : {Face::bottom, Face::top}) {
      if (partition.of(f) != Regime::rt) continue;
      const double sign = face_normal_sign(f);
      std::array<BoundaryScalarField, 3> n;
      for (int i = 0; i < 3; ++i) {
        n[i] = trace(jc.A(i, 2), f);
        n[i] *= sign;
      }
      for (std::size_t p = 0; p < n[0].size(); ++p) {
        const double len = std::sqrt(n[0].data()[p] * n[0].data()[p] +
                                     n[1].data()[p] * n[1].data()[p] +
                                     n[2].data()[p] * n[2].data()[p]);
        for (int i = 0; i < 3; ++i) n[i].data()[p] /= len;
      }
      e.boundary += detail::boundary_energy_term(s.eta, f, n, nullptr);
    }
  }
  return e;
}

/// Regularized energy: same volume terms; the RT-face factor uses the singly
/// mollified map and the unnormalized smoothed cofactor column A^k_{i3}.
inline EnergyParts energy_kappa(const SimState& s, const InitialDeformation& G0,
                                const BoundaryPartition& partition, const MollifierKernel& kernel) {
  if (!s.cache.fresh) throw Error("energy_kappa needs a fresh cache");
  EnergyParts e;
  e.v4 = sobolev_norm_sq(s.v, 4);
  e.eta4 = flowmap_sobolev_sq(s.eta, 4);
  e.geta4 = sobolev_norm_sq(directional(G0, s.eta), 4);
  for (Face f : {Face::bottom, Face::top}) {
    if (partition.of(f) != Regime::rt) continue;
    std::array<BoundaryScalarField, 3> w;
    for (int i = 0; i < 3; ++i) w[i] = trace(s.cache.A_kappa(i, 2), f);
    e.boundary += detail::boundary_energy_term(s.eta, f, w, &kernel);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Per-snapshot record

struct EnergyRecord {
  double t = 0.0;
  EnergyParts kappa;   // E^k and its parts
  EnergyParts limit;   // E and its parts
  double div_a_v = 0.0;
  double j_minus_1 = 0.0;
  double piola = 0.0;
  double f_identity = 0.0;
  double div_g0t_eta = 0.0;
  double curl_v3 = 0.0;        // |curl_{A^k} v|_3
  double curl_geta3 = 0.0;     // |curl_{A^k}(G0^T.grad eta)|_3
  double curl_growth = 0.0;    // (curl_v3 + curl_geta3) minus its t=0 value
  double div_v3 = 0.0;
  double rt_margin[2] = {0.0, 0.0};
  double nc_margin[2] = {0.0, 0.0};
  double jk_dev = 0.0;
  double ak_dev = 0.0;
  bool apriori_ok = true;
  int pressure_iterations = 0;
};

/// All tracked residuals for one state (cache must be fresh).
inline EnergyRecord make_energy_record(const KappaSystem& sys, const SimState& s,
                                       double curl_baseline = 0.0) {
  if (!s.cache.fresh) throw Error("make_energy_record needs a fresh cache");
  const auto& G0 = sys.G0();
  const auto& part = sys.options().partition;
  EnergyRecord r;
  r.t = s.t;
  r.kappa = energy_kappa(s, G0, part, sys.kernel());
  r.limit = energy_limit(s, G0, part);
  r.div_a_v = l2_norm(a_divergence(s.cache.A_kappa, s.v));
  for (std::size_t p = 0; p < s.cache.J_kappa.size(); ++p)
    r.j_minus_1 = std::max(r.j_minus_1, std::abs(s.cache.J_kappa.data()[p] - 1.0));
  r.piola = piola_residual(s.eta);
  if (s.has_F) {
    MatrixField rec = deformation_from_flowmap(s.eta, G0);
    rec -= s.F;
    r.f_identity = l2_norm(rec);
  }
  MatrixField X = directional(G0, s.eta);
  {
    double acc = 0.0;
    for (int l = 0; l < 3; ++l) {
      ScalarField d(s.eta.grid());
      for (int j = 0; j < 3; ++j) d += partial(X(l, j), j + 1);
      acc += sobolev_norm_sq(d, 3);
    }
    r.div_g0t_eta = std::sqrt(acc);
  }
  r.div_v3 = sobolev_norm(divergence(s.v), 3);
  r.curl_v3 = sobolev_norm(a_curl(s.cache.A_kappa, s.v), 3);
  r.curl_geta3 = sobolev_norm(matrix_curl_a(s.cache.A_kappa, X), 3);
  r.curl_growth = r.curl_v3 + r.curl_geta3 - curl_baseline;
  for (Face f : {Face::bottom, Face::top}) {
    r.rt_margin[int(f)] = check_rayleigh_taylor(s.cache.q, f, part.lambda).margin;
    r.nc_margin[int(f)] = check_noncollinearity(G0, f, part.delta).margin;
  }
  r.jk_dev = s.cache.apriori.jk_dev;
  r.ak_dev = s.cache.apriori.ak_dev;
  r.apriori_ok = s.cache.apriori.ok;
  r.pressure_iterations = s.cache.pressure_iterations;
  return r;
}

// ---------------------------------------------------------------------------
// Lemma-shaped measurements

/// |w|_s / (|w|_0 + |curl w|_{s-1} + |div w|_{s-1} + |dbar w . N|_{s-3/2}).
inline double hodge_check(const VectorField& w, int s) {
  const double lhs = sobolev_norm(w, s);
  double rhs = sobolev_norm(w, 0) + sobolev_norm(curl(w), s - 1) +
               sobolev_norm(divergence(w), s - 1);
  double btrace = 0.0;
  for (Face f : {Face::bottom, Face::top}) {
    BoundaryScalarField w3 = trace(w[2], f);
    for (int axis : {1, 2})
      btrace += boundary_norm_sq(boundary_derivative(w3, axis), double(s) - 1.5);
  }
  rhs += std::sqrt(btrace);
  return lhs / rhs;
}

/// |dbar w . N|_{-1/2} / (|dbar w|_0 + |div w|_0).
inline double normal_trace_check(const VectorField& w) {
  double lhs = 0.0;
  for (Face f : {Face::bottom, Face::top}) {
    BoundaryScalarField w3 = trace(w[2], f);
    for (int axis : {1, 2}) lhs += boundary_norm_sq(boundary_derivative(w3, axis), -0.5);
  }
  double dbar = 0.0;
  for (int axis : {1, 2})
    for (int i = 0; i < 3; ++i) dbar += l2_norm_sq(tangential_derivative(w[i], axis));
  const double rhs = std::sqrt(dbar) + l2_norm(divergence(w));
  return std::sqrt(lhs) / rhs;
}

/// Face triple (G0^T grad eta)_{i.} used by the tangential reconstruction.
struct FaceReconstructionInput {
  std::array<BoundaryVectorField, 3> F;  // F[i][j] = (G0^T grad eta)_{ij} trace
};

/// Nodewise 2x2 solve recovering (d1 eta, d2 eta) on a face from the row
/// equations G0_{1a} d1 eta + G0_{2a} d2 eta = F_a, choosing per node the
/// equation pair with the largest |2x2 minor| (ties: (2,3), (1,3), (1,2)).
/// Throws DegenerateMinor when all squared minors sit below delta^2/3.
inline std::pair<BoundaryVectorField, BoundaryVectorField> reconstruct_tangential(
    const InitialDeformation& G0, Face face, const FaceReconstructionInput& in, double delta) {
  const Grid& g = G0.grid();
  BoundaryScalarField g1[3], g2[3];
  for (int a = 0; a < 3; ++a) {
    g1[a] = trace(G0.G0(0, a), face);
    g2[a] = trace(G0.G0(1, a), face);
  }
  BoundaryVectorField d1(g, face), d2(g, face);
  static constexpr int pair_a[3] = {1, 0, 0};  // (2,3), (1,3), (1,2) zero-based
  static constexpr int pair_b[3] = {2, 2, 1};
  for (std::size_t p = 0; p < g.layer_size(); ++p) {
    double best = -1.0;
    int pick = 0;
    for (int c = 0; c < 3; ++c) {
      const int a = pair_a[c], b = pair_b[c];
      const double det = g1[a].data()[p] * g2[b].data()[p] - g2[a].data()[p] * g1[b].data()[p];
      if (std::abs(det) > best) {
        best = std::abs(det);
        pick = c;
      }
    }
    if (best * best < delta * delta / 3.0)
      throw DegenerateMinor("all reconstruction minors below delta^2/3 at a face node");
    const int a = pair_a[pick], b = pair_b[pick];
    const double m11 = g1[a].data()[p], m12 = g2[a].data()[p];
    const double m21 = g1[b].data()[p], m22 = g2[b].data()[p];
    const double det = m11 * m22 - m12 * m21;
    for (int j = 0; j < 3; ++j) {
      const double fa = in.F[a][j].data()[p];
      const double fb = in.F[b][j].data()[p];
      d1[j].data()[p] = (m22 * fa - m12 * fb) / det;
      d2[j].data()[p] = (-m21 * fa + m11 * fb) / det;
    }
  }
  return {std::move(d1), std::move(d2)};
}

/// |T4 eta|_{1/2,face} / |G0^T.grad eta|_4 — the derivative gain bought by
/// non-collinearity.
inline double noncollinear_gain_check(const FlowMap& eta, const InitialDeformation& G0,
                                      Face face) {
  double num = 0.0;
  for (int i = 0; i < 3; ++i)
    num += boundary_norm_sq(boundary_fourth_tangential(trace(eta.displacement[i], face)), 0.5);
  const double den = sobolev_norm(directional(G0, eta), 4);
  return std::sqrt(num) / den;
}

// ---------------------------------------------------------------------------
// Good-unknown commutation identity

namespace detail {

/// Concrete fourth-order tangential operator d1^2 (d1^2 + d2^2) and its
/// third-order factor d1 (d1^2 + d2^2).
inline ScalarField t4(const ScalarField& f) {
  return apply_horizontal_multiplier(f, [&](int k1, int k2) {
    const double w1 = 4.0 * M_PI * M_PI * double(k1) * k1;
    const double w2 = 4.0 * M_PI * M_PI * double(k2) * k2;
    return w1 * (w1 + w2);
  });
}

inline ScalarField t3(const ScalarField& f) {
  const Grid& g = f.grid();
  return apply_horizontal_multiplier(f, [&](int k1, int k2) -> std::complex<double> {
    if (std::abs(k1) == g.n1 / 2) return {0.0, 0.0};
    const double w1 = 4.0 * M_PI * M_PI * double(k1) * k1;
    const double w2 = 4.0 * M_PI * M_PI * double(k2) * k2;
    return std::complex<double>(0.0, -2.0 * M_PI * k1 * (w1 + w2));
  });
}

inline ScalarField dbar1(const ScalarField& f) { return tangential_derivative(f, 1, 1); }

inline ScalarField pointwise(const ScalarField& a, const ScalarField& b) {
  ScalarField out = a;
  for (std::size_t p = 0; p < out.size(); ++p) out.data()[p] *= b.data()[p];
  return out;
}

}  // namespace detail

/// Discretization defect |LHS - RHS|_0 of the commutation identity
///   T4(dA_i f) = dA_i( T4 f - T4(eta^k) . grad_A f ) + C_i(f)
/// with T4 = d1^2 Lap_*, all terms expanded as printed.
inline double good_unknown_residual(const SimState& s, const ScalarField& f, int i) {
  using detail::dbar1;
  using detail::pointwise;
  using detail::t3;
  using detail::t4;
  if (!s.cache.fresh) throw Error("good_unknown_residual needs a fresh cache");
  const Grid& g = f.grid();
  const MatrixField& A = s.cache.A_kappa;
  const FlowMap& ek = s.cache.eta_kappa;

  VectorField grad_f = gradient(f);
  ScalarField dai_f(g);
  for (int j = 0; j < 3; ++j) {
    const double* a = A(i, j).data();
    const double* d = grad_f[j].data();
    for (std::size_t p = 0; p < dai_f.size(); ++p) dai_f.data()[p] += a[p] * d[p];
  }
  ScalarField lhs = t4(dai_f);

  ScalarField t4f = t4(f);
  ScalarField t4e[3];
  for (int m = 0; m < 3; ++m) t4e[m] = t4(ek.displacement[m]);  // T4 kills the affine part

  // T4 f - T4 eta^k . grad_A f
  ScalarField good = t4f;
  for (int m = 0; m < 3; ++m) {
    ScalarField gaf(g);
    for (int j = 0; j < 3; ++j) {
      const double* a = A(m, j).data();
      const double* d = grad_f[j].data();
      for (std::size_t p = 0; p < gaf.size(); ++p) gaf.data()[p] += a[p] * d[p];
    }
    good -= pointwise(t4e[m], gaf);
  }
  VectorField grad_good = gradient(good);
  ScalarField rhs(g);
  for (int j = 0; j < 3; ++j) {
    const double* a = A(i, j).data();
    const double* d = grad_good[j].data();
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs.data()[p] += a[p] * d[p];
  }

  // C_i(f), three pieces.
  // (1) symmetric commutator [T4, A_ij, d_j f]
  for (int j = 0; j < 3; ++j) {
    ScalarField prod = pointwise(A(i, j), grad_f[j]);
    ScalarField c = t4(prod);
    c -= pointwise(t4(A(i, j)), grad_f[j]);
    c -= pointwise(A(i, j), t4(grad_f[j]));
    rhs += c;
  }
  // (2) T4 eta^k . grad_A (dA_i f)
  VectorField grad_dai = gradient(dai_f);
  for (int m = 0; m < 3; ++m) {
    ScalarField gm(g);
    for (int j = 0; j < 3; ++j) {
      const double* a = A(m, j).data();
      const double* d = grad_dai[j].data();
      for (std::size_t p = 0; p < gm.size(); ++p) gm.data()[p] += a[p] * d[p];
    }
    rhs += pointwise(t4e[m], gm);
  }
  // (3) -[T3, A_il A_mj] (d1 d_l eta^k_m) d_j f
  for (int l = 0; l < 3; ++l) {
    // d_l eta^k_m includes the affine identity part; d1 removes it except
    // where it is constant, whose d1 is zero anyway.
    for (int m = 0; m < 3; ++m) {
      ScalarField w = dbar1(partial(ek.displacement[m], l + 1));
      for (int j = 0; j < 3; ++j) {
        ScalarField coef = pointwise(A(i, l), A(m, j));
        ScalarField c = t3(pointwise(coef, w));
        c -= pointwise(coef, t3(w));
        rhs -= pointwise(c, grad_f[j]);
      }
    }
  }

  lhs -= rhs;
  return l2_norm(lhs);
}

// ---------------------------------------------------------------------------
// Constraint report

struct ConstraintReport {
  double div_v3 = 0.0;
  double div_geta3 = 0.0;
  double curl_av3 = 0.0;
  double curl_ageta3 = 0.0;
  double div_a_v = 0.0;
  double j_minus_1 = 0.0;
  double piola = 0.0;
  double f_identity = 0.0;
};

inline ConstraintReport constraint_report(const KappaSystem& sys, const SimState& s) {
  if (!s.cache.fresh) throw Error("constraint_report needs a fresh cache");
  ConstraintReport r;
  const auto& G0 = sys.G0();
  r.div_v3 = sobolev_norm(divergence(s.v), 3);
  MatrixField X = directional(G0, s.eta);
  double acc = 0.0;
  for (int l = 0; l < 3; ++l) {
    ScalarField d(s.eta.grid());
    for (int j = 0; j < 3; ++j) d += partial(X(l, j), j + 1);
    acc += sobolev_norm_sq(d, 3);
  }
  r.div_geta3 = std::sqrt(acc);
  r.curl_av3 = sobolev_norm(a_curl(s.cache.A_kappa, s.v), 3);
  r.curl_ageta3 = sobolev_norm(matrix_curl_a(s.cache.A_kappa, X), 3);
  r.div_a_v = l2_norm(a_divergence(s.cache.A_kappa, s.v));
  for (std::size_t p = 0; p < s.cache.J_kappa.size(); ++p)
    r.j_minus_1 = std::max(r.j_minus_1, std::abs(s.cache.J_kappa.data()[p] - 1.0));
  r.piola = piola_residual(s.eta);
  if (s.has_F) {
    MatrixField rec = deformation_from_flowmap(s.eta, G0);
    rec -= s.F;
    r.f_identity = l2_norm(rec);
  }
  return r;
}

}  // namespace elastoslab
