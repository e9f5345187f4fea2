#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "elastoslab/calculus.hpp"
#include "elastoslab/fft.hpp"
#include "elastoslab/grid.hpp"
#include "elastoslab/stencils.hpp"

namespace elastoslab {

inline constexpr double kTauEll = 1e-10;     // relative residual target
inline constexpr int kMaxPressureIter = 500;
inline constexpr double kSpdFloor = 0.3;     // nodewise min-eigenvalue floor for E
inline constexpr double kResidualFloor = 1e-30;

struct EllipticSolution {
  ScalarField field;
  double residual_norm = 0.0;
  int iterations = 0;
};

struct VectorEllipticSolution {
  VectorField field;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Running record of relative residuals, one per thread. Lets long runs
/// report that every solve met its postcondition without re-deriving it.
struct EllipticStats {
  long solves = 0;
  double max_rel_residual = 0.0;
  void record(double rel) {
    ++solves;
    max_rel_residual = std::max(max_rel_residual, rel);
  }
};

inline EllipticStats& elliptic_stats() {
  thread_local EllipticStats s;
  return s;
}

namespace detail {

/// LU factors of M = lam*I - D1^2 restricted to the interior vertical nodes,
/// plus the two homogeneous-extension basis columns (boundary value 1 at one
/// face, 0 at the other). Keyed by (n3, q) where lam = 4 pi^2 q.
struct ModeFactor {
  int n = 0;  // interior size n3-1
  static constexpr int kl = 6, ku = 6;
  int ldab = 0;
  std::vector<double> ab;        // LAPACK banded LU storage
  std::vector<double> band;      // original band (for residual matvecs)
  std::vector<lapack_int> ipiv;
  std::vector<double> phi_b, phi_t;  // full-length n3+1 extension profiles

  // y = M x on the interior (band matvec against the unfactored band).
  void matvec(const double* x, double* y) const {
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      const int c0 = std::max(0, r - kl), c1 = std::min(n - 1, r + ku);
      for (int c = c0; c <= c1; ++c) s += band_at(r, c) * x[c];
      y[r] = s;
    }
  }
  double band_at(int r, int c) const { return band[std::size_t(c) * (kl + ku + 1) + (ku + r - c)]; }
  double& band_at(int r, int c) { return band[std::size_t(c) * (kl + ku + 1) + (ku + r - c)]; }

  void solve_inplace(double* rhs, int nrhs) const {
    lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, nrhs,
                                     ab.data(), ldab, ipiv.data(), rhs, n);
    if (info != 0) throw Error("dgbtrs failed");
  }
};

inline ModeFactor make_mode_factor(int n3, double lam) {
  const auto& d1sq = d1_squared_dense(n3);
  const int full = n3 + 1;
  ModeFactor f;
  f.n = n3 - 1;
  f.ldab = 2 * ModeFactor::kl + ModeFactor::ku + 1;
  f.ab.assign(std::size_t(f.ldab) * f.n, 0.0);
  f.band.assign(std::size_t(ModeFactor::kl + ModeFactor::ku + 1) * f.n, 0.0);
  for (int r = 0; r < f.n; ++r)
    for (int c = 0; c < f.n; ++c) {
      double m = -d1sq[std::size_t(r + 1) * full + (c + 1)];
      if (r == c) m += lam;
      if (m == 0.0) continue;
      if (std::abs(r - c) > ModeFactor::kl) throw Error("vertical operator exceeded band");
      f.band_at(r, c) = m;
      f.ab[std::size_t(c) * f.ldab + (ModeFactor::kl + ModeFactor::ku + r - c)] = m;
    }
  f.ipiv.resize(f.n);
  lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, f.n, f.n, ModeFactor::kl, ModeFactor::ku,
                                   f.ab.data(), f.ldab, f.ipiv.data());
  if (info != 0) throw Error("dgbtrf failed on mode system");

  // Extension profiles: interior solve with the boundary column moved right.
  auto extend = [&](bool bottom) {
    std::vector<double> rhs(f.n);
    const int bc = bottom ? 0 : n3;
    for (int r = 0; r < f.n; ++r) rhs[r] = d1sq[std::size_t(r + 1) * full + bc];
    f.solve_inplace(rhs.data(), 1);
    std::vector<double> profile(full, 0.0);
    profile[bc] = 1.0;
    for (int r = 0; r < f.n; ++r) profile[r + 1] = rhs[r];
    return profile;
  };
  f.phi_b = extend(true);
  f.phi_t = extend(false);
  return f;
}

inline const ModeFactor& mode_factor(int n3, long q) {
  thread_local std::map<std::pair<int, long>, ModeFactor> cache;
  auto key = std::make_pair(n3, q);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, make_mode_factor(n3, 4.0 * M_PI * M_PI * double(q))).first;
  return it->second;
}

/// Layer-by-layer forward transform of a volume field into mode lines:
/// lines[mode][node], complex.
struct SpectralLines {
  int n1 = 0, nc = 0, nn = 0;
  std::vector<std::complex<double>> a;  // (n1*nc) x (n3+1), line-major
  std::complex<double>* line(int i1, int j) { return a.data() + (std::size_t(i1) * nc + j) * nn; }
  const std::complex<double>* line(int i1, int j) const {
    return a.data() + (std::size_t(i1) * nc + j) * nn;
  }
};

inline SpectralLines to_lines(const ScalarField& f) {
  const Grid& g = f.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  SpectralLines L;
  L.n1 = g.n1;
  L.nc = fft.nc();
  L.nn = g.n3 + 1;
  L.a.resize(std::size_t(g.n1) * L.nc * L.nn);
  auto spec = make_spectrum(g);
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    fft.forward(f.layer(i3), spec.data());
    for (int i1 = 0; i1 < g.n1; ++i1)
      for (int j = 0; j < L.nc; ++j)
        L.line(i1, j)[i3] = spec[std::size_t(i1) * L.nc + j];
  }
  return L;
}

inline ScalarField from_lines(const Grid& g, const SpectralLines& L) {
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  ScalarField out = ScalarField::uninitialized(g);
  auto spec = make_spectrum(g);
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    for (int i1 = 0; i1 < g.n1; ++i1)
      for (int j = 0; j < L.nc; ++j)
        spec[std::size_t(i1) * L.nc + j] = L.line(i1, j)[i3];
    fft.inverse(spec.data(), out.layer(i3));
  }
  return out;
}

}  // namespace detail

/// Squared horizontal wavenumber entering the mode systems. The first
/// derivative zeroes the Nyquist column (its sign is ambiguous), so the
/// discrete div(grad .) does too; the solver must match it exactly for the
/// preconditioner to be the exact inverse of the E = I operator and for the
/// Leray projection to land at solver tolerance.
inline long effective_q(int k1, int j, const Grid& g) {
  const long a = std::abs(k1) == g.n1 / 2 ? 0 : long(k1) * k1;
  const long b = j == g.n2 / 2 ? 0 : long(j) * j;
  return a + b;
}

/// Discrete Laplacian matching div(grad .): spectral horizontal part with
/// the odd-derivative Nyquist convention plus the squared first-derivative
/// vertical operator.
inline ScalarField laplacian(const ScalarField& f) {
  const Grid& g = f.grid();
  ScalarField out = apply_horizontal_multiplier(f, [&](int k1, int k2) {
    return -4.0 * M_PI * M_PI * double(effective_q(k1, k2, g));
  });
  out += vertical_derivative(vertical_derivative(f, 1), 1);
  return out;
}

/// Solves -Laplace(u) = rhs, u = gb/gt on the faces. Horizontal modes
/// decouple into banded vertical systems solved directly; the residual is
/// re-checked per mode against the unfactored band.
inline EllipticSolution solve_laplace_dirichlet(const ScalarField& rhs,
                                                const BoundaryScalarField& gb,
                                                const BoundaryScalarField& gt) {
  const Grid& g = rhs.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  const auto& d1sq = d1_squared_dense(g.n3);
  const int full = g.n3 + 1;

  detail::SpectralLines R = detail::to_lines(rhs);
  auto gbs = make_spectrum(g), gts = make_spectrum(g);
  fft.forward(gb.data(), gbs.data());
  fft.forward(gt.data(), gts.data());

  double res2 = 0.0, rhs2 = 0.0;
  std::vector<double> work(std::size_t(2) * (g.n3 - 1));
  std::vector<double> check(std::size_t(2) * (g.n3 - 1));
  std::vector<double> rhs_copy(std::size_t(2) * (g.n3 - 1));
  for (int i1 = 0; i1 < g.n1; ++i1) {
    const int k1 = wavenumber(i1, g.n1);
    for (int j = 0; j < fft.nc(); ++j) {
      const auto& F = detail::mode_factor(g.n3, effective_q(k1, j, g));
      const std::complex<double> b0 = gbs[std::size_t(i1) * fft.nc() + j];
      const std::complex<double> b1 = gts[std::size_t(i1) * fft.nc() + j];
      std::complex<double>* line = R.line(i1, j);
      const double wk = spec_weight(j, g.n2);
      // Interior rhs with boundary columns moved across.
      for (int r = 0; r < F.n; ++r) {
        const std::complex<double> rr = line[r + 1] +
                                        d1sq[std::size_t(r + 1) * full + 0] * b0 +
                                        d1sq[std::size_t(r + 1) * full + g.n3] * b1;
        work[r] = rr.real();
        work[std::size_t(F.n) + r] = rr.imag();
        rhs2 += wk * std::norm(line[r + 1]) * g.h3;
      }
      std::copy(work.begin(), work.end(), rhs_copy.begin());
      F.solve_inplace(work.data(), 2);
      F.matvec(work.data(), check.data());
      F.matvec(work.data() + F.n, check.data() + F.n);
      for (int r = 0; r < 2 * F.n; ++r) {
        const double d = check[r] - rhs_copy[r];
        res2 += wk * d * d * g.h3;
      }
      line[0] = b0;
      line[g.n3] = b1;
      for (int r = 0; r < F.n; ++r)
        line[r + 1] = std::complex<double>(work[r], work[std::size_t(F.n) + r]);
    }
  }

  EllipticSolution sol;
  sol.field = detail::from_lines(g, R);
  sol.residual_norm = std::sqrt(res2);
  sol.iterations = 0;
  const double scale = std::sqrt(rhs2) + boundary_norm(gb, 0.0) + boundary_norm(gt, 0.0) +
                       kResidualFloor;
  elliptic_stats().record(sol.residual_norm / scale);
  if (sol.residual_norm > kTauEll * scale)
    throw NoConvergence("direct Dirichlet solve missed its residual target");
  return sol;
}

/// Discrete-harmonic extension of face data (zero rhs), via the cached
/// per-mode extension profiles.
inline ScalarField harmonic_extension(const BoundaryScalarField& gb,
                                      const BoundaryScalarField& gt) {
  const Grid& g = gb.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  auto gbs = make_spectrum(g), gts = make_spectrum(g);
  fft.forward(gb.data(), gbs.data());
  fft.forward(gt.data(), gts.data());
  detail::SpectralLines L;
  L.n1 = g.n1;
  L.nc = fft.nc();
  L.nn = g.n3 + 1;
  L.a.resize(std::size_t(g.n1) * L.nc * L.nn);
  for (int i1 = 0; i1 < g.n1; ++i1) {
    const int k1 = wavenumber(i1, g.n1);
    for (int j = 0; j < fft.nc(); ++j) {
      const auto& F = detail::mode_factor(g.n3, effective_q(k1, j, g));
      const std::complex<double> b0 = gbs[std::size_t(i1) * fft.nc() + j];
      const std::complex<double> b1 = gts[std::size_t(i1) * fft.nc() + j];
      std::complex<double>* line = L.line(i1, j);
      for (int r = 0; r <= g.n3; ++r) line[r] = b0 * F.phi_b[r] + b1 * F.phi_t[r];
    }
  }
  return detail::from_lines(g, L);
}

inline VectorField harmonic_extension(const BoundaryVectorField& gb,
                                      const BoundaryVectorField& gt) {
  VectorField out(gb.grid());
  for (int i = 0; i < 3; ++i) out[i] = harmonic_extension(gb[i], gt[i]);
  return out;
}

inline VectorEllipticSolution solve_laplace_dirichlet(const VectorField& rhs,
                                                      const BoundaryVectorField& gb,
                                                      const BoundaryVectorField& gt) {
  VectorEllipticSolution out;
  out.field = VectorField(rhs.grid());
  for (int i = 0; i < 3; ++i) {
    auto s = solve_laplace_dirichlet(rhs[i], gb[i], gt[i]);
    out.field[i] = std::move(s.field);
    out.residual_norm = std::max(out.residual_norm, s.residual_norm);
  }
  return out;
}

/// Smallest eigenvalue of a symmetric 3x3 (trigonometric closed form).
inline double min_eigenvalue_sym3(double a11, double a22, double a33, double a12, double a13,
                                  double a23) {
  const double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  const double q = (a11 + a22 + a33) / 3.0;
  if (p1 == 0.0) return std::min({a11, a22, a33});
  const double b11 = a11 - q, b22 = a22 - q, b33 = a33 - q;
  const double p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  // det(B/p) / 2
  const double c11 = b11 / p, c22 = b22 / p, c33 = b33 / p;
  const double c12 = a12 / p, c13 = a13 / p, c23 = a23 / p;
  double r = 0.5 * (c11 * (c22 * c33 - c23 * c23) - c12 * (c12 * c33 - c23 * c13) +
                    c13 * (c12 * c23 - c22 * c13));
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  // Smallest eigenvalue corresponds to phi + 2*pi/3.
  return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
}

namespace detail {

inline void zero_faces(ScalarField& f) {
  const Grid& g = f.grid();
  double* b = f.layer(0);
  double* t = f.layer(g.n3);
  for (std::size_t i = 0; i < g.layer_size(); ++i) b[i] = t[i] = 0.0;
}

inline double dot_interior(const ScalarField& a, const ScalarField& b) {
  const Grid& g = a.grid();
  double s = 0.0;
  for (int i3 = 1; i3 < g.n3; ++i3) {
    const double* la = a.layer(i3);
    const double* lb = b.layer(i3);
    for (std::size_t i = 0; i < g.layer_size(); ++i) s += la[i] * lb[i];
  }
  return s;
}

/// L q = -div(E grad q), faces pinned to zero.
inline ScalarField apply_pressure_operator(const MatrixField& E, const ScalarField& q) {
  VectorField grad_q = gradient(q);
  VectorField w(q.grid());
  for (int j = 0; j < 3; ++j) {
    ScalarField acc = E(j, 0);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc.data()[i] = E(j, 0).data()[i] * grad_q[0].data()[i] +
                      E(j, 1).data()[i] * grad_q[1].data()[i] +
                      E(j, 2).data()[i] * grad_q[2].data()[i];
    w[j] = std::move(acc);
  }
  ScalarField out = divergence(w);
  out *= -1.0;
  zero_faces(out);
  return out;
}

}  // namespace detail

/// Variable-coefficient pressure problem -div(E grad q) = G, q = 0 on the
/// faces, solved by preconditioned BiCGstab with the constant-coefficient
/// direct solver as preconditioner. E stays a small perturbation of the
/// identity in the monitored regime, so the preconditioned operator is close
/// to the identity; BiCGstab rather than plain CG because the one-sided
/// vertical closure rows make the high-order operator mildly non-symmetric,
/// which stalls CG around 1e-7 while the target is 1e-10. The returned
/// residual is the true one, recomputed after the loop.
inline EllipticSolution solve_pressure(const MatrixField& E, const ScalarField& G,
                                       const ScalarField* initial_guess = nullptr) {
  const Grid& g = G.grid();
  // SPD floor, nodewise.
  double min_eig = 1e300;
  for (std::size_t i = 0; i < G.size(); ++i) {
    const double e = min_eigenvalue_sym3(E(0, 0).data()[i], E(1, 1).data()[i], E(2, 2).data()[i],
                                         E(0, 1).data()[i], E(0, 2).data()[i], E(1, 2).data()[i]);
    min_eig = std::min(min_eig, e);
  }
  if (min_eig < kSpdFloor)
    throw NotSPD("pressure coefficient min eigenvalue " + std::to_string(min_eig) +
                 " below floor " + std::to_string(kSpdFloor));

  ScalarField rhs = G;
  detail::zero_faces(rhs);
  const double rhs_norm = std::sqrt(detail::dot_interior(rhs, rhs));
  const double target = kTauEll * (rhs_norm + kResidualFloor);

  BoundaryScalarField zb(g, Face::bottom), zt(g, Face::top);
  auto precond = [&](const ScalarField& r) {
    // Mode-exact inverse of the E = I operator.
    auto s = solve_laplace_dirichlet(r, zb, zt);
    return std::move(s.field);
  };

  ScalarField q(g, 0.0);
  if (initial_guess) {
    q = *initial_guess;
    detail::zero_faces(q);
  }
  ScalarField r = rhs;
  if (initial_guess) {
    r -= detail::apply_pressure_operator(E, q);
    detail::zero_faces(r);
  }

  int it = 0;
  double rnorm = std::sqrt(detail::dot_interior(r, r));
  if (rnorm > 0.5 * target) {
    ScalarField rhat = r;
    ScalarField p(g, 0.0), v(g, 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (it = 1; it <= kMaxPressureIter; ++it) {
      const double rho_new = detail::dot_interior(rhat, r);
      if (std::abs(rho_new) < 1e-60) {  // restart on breakdown
        rhat = r;
        p = ScalarField(g, 0.0);
        v = ScalarField(g, 0.0);
        rho = alpha = omega = 1.0;
        continue;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      p.axpy(-omega, v);
      p *= beta;
      p += r;
      ScalarField ph = precond(p);
      v = detail::apply_pressure_operator(E, ph);
      const double rv = detail::dot_interior(rhat, v);
      if (std::abs(rv) < 1e-60) throw NoConvergence("pressure BiCGstab breakdown");
      alpha = rho / rv;
      ScalarField s = r;
      s.axpy(-alpha, v);
      if (std::sqrt(detail::dot_interior(s, s)) <= 0.5 * target) {
        q.axpy(alpha, ph);
        break;
      }
      ScalarField sh = precond(s);
      ScalarField t = detail::apply_pressure_operator(E, sh);
      const double tt = detail::dot_interior(t, t);
      omega = detail::dot_interior(t, s) / (tt > 0.0 ? tt : 1.0);
      q.axpy(alpha, ph);
      q.axpy(omega, sh);
      r = s;
      r.axpy(-omega, t);
      rnorm = std::sqrt(detail::dot_interior(r, r));
      if (rnorm <= 0.5 * target) break;
    }
  }

  // True residual, never the recurrence.
  ScalarField true_r = rhs;
  true_r -= detail::apply_pressure_operator(E, q);
  detail::zero_faces(true_r);
  const double res = std::sqrt(detail::dot_interior(true_r, true_r));
  elliptic_stats().record(res / (rhs_norm + kResidualFloor));
  if (res > kTauEll * (rhs_norm + kResidualFloor))
    throw NoConvergence("pressure solve stalled at relative residual " +
                        std::to_string(res / (rhs_norm + kResidualFloor)) + " after " +
                        std::to_string(it) + " iterations");
  EllipticSolution sol;
  sol.field = std::move(q);
  sol.residual_norm = res;
  sol.iterations = std::min(it, kMaxPressureIter);
  return sol;
}

/// Zero-mean projection on a face: f - mean(f).
inline BoundaryScalarField mean_zero_project(const BoundaryScalarField& f) {
  const double m = boundary_mean(f);
  BoundaryScalarField out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= m;
  return out;
}

/// Inverse surface Laplacian with zero-mean projection: divides Fourier
/// coefficients by -4 pi^2 |k|^2 and kills the mean.
inline BoundaryScalarField surface_inverse_laplacian(const BoundaryScalarField& f) {
  return apply_boundary_multiplier(f, [](int k1, int k2) {
    const double k2q = double(k1) * k1 + double(k2) * k2;
    if (k2q == 0.0) return 0.0;
    return -1.0 / (4.0 * M_PI * M_PI * k2q);
  });
}

}  // namespace elastoslab
