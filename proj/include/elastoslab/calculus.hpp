#pragma once

#include <cmath>
#include <complex>

#include "elastoslab/fft.hpp"
#include "elastoslab/grid.hpp"
#include "elastoslab/stencils.hpp"

namespace elastoslab {

// ---------------------------------------------------------------------------
// Derivatives

/// Spectral tangential derivative of order `order` along horizontal axis 1/2.
inline ScalarField tangential_derivative(const ScalarField& f, int axis, int order = 1) {
  const Grid& g = f.grid();
  return apply_horizontal_multiplier(f, DerivativeMultiplier{axis, order, g.n1, g.n2});
}

/// Finite-difference vertical derivative (4th order, one-sided at the faces).
inline ScalarField vertical_derivative(const ScalarField& f, int order = 1) {
  const Grid& g = f.grid();
  const VerticalOperator& op = vertical_operator(g.n3, order);
  ScalarField out = ScalarField::uninitialized(g);
  const std::ptrdiff_t stride = std::ptrdiff_t(g.layer_size());
  for (std::size_t p = 0; p < g.layer_size(); ++p)
    op.apply_line(f.data() + p, out.data() + p, stride);
  return out;
}

/// D^a f for a 3D multi-index (spectral horizontally, stencil vertically).
inline ScalarField multi_derivative(const ScalarField& f, int a1, int a2, int a3) {
  ScalarField out = f;
  if (a3 > 0) out = vertical_derivative(out, a3);
  if (a1 > 0) out = tangential_derivative(out, 1, a1);
  if (a2 > 0) out = tangential_derivative(out, 2, a2);
  return out;
}

/// Partial derivative along axis 1..3 (axis 3 is vertical).
inline ScalarField partial(const ScalarField& f, int axis) {
  return axis == 3 ? vertical_derivative(f, 1) : tangential_derivative(f, axis, 1);
}

/// grad f, components (d1 f, d2 f, d3 f). One forward transform per layer
/// feeds both horizontal derivatives.
inline VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  VectorField out = VectorField::uninitialized(g);
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  thread_local std::vector<std::complex<double>> spec, work;
  spec.resize(spec_size(g.n1, g.n2));
  work.resize(spec.size());
  const DerivativeMultiplier d1{1, 1, g.n1, g.n2};
  const DerivativeMultiplier d2{2, 1, g.n1, g.n2};
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    fft.forward(f.layer(i3), spec.data());
    for (int axis = 0; axis < 2; ++axis) {
      const auto& m = axis == 0 ? d1 : d2;
      for (int i1 = 0; i1 < g.n1; ++i1) {
        const int k1 = wavenumber(i1, g.n1);
        for (int j = 0; j < fft.nc(); ++j)
          work[std::size_t(i1) * fft.nc() + j] = spec[std::size_t(i1) * fft.nc() + j] * m(k1, j);
      }
      fft.inverse(work.data(), out[axis].layer(i3));
    }
  }
  const VerticalOperator& op = vertical_operator(g.n3, 1);
  const std::ptrdiff_t stride = std::ptrdiff_t(g.layer_size());
  for (std::size_t p = 0; p < g.layer_size(); ++p)
    op.apply_line(f.data() + p, out[2].data() + p, stride);
  return out;
}

/// (grad v)_{ij} = d_j v_i.
inline MatrixField gradient(const VectorField& v) {
  MatrixField out(v.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = partial(v[i], j + 1);
  return out;
}

inline ScalarField divergence(const VectorField& v) {
  ScalarField out = partial(v[0], 1);
  out += partial(v[1], 2);
  out += partial(v[2], 3);
  return out;
}

inline VectorField curl(const VectorField& v) {
  VectorField out(v.grid());
  out[0] = partial(v[2], 2) - partial(v[1], 3);
  out[1] = partial(v[0], 3) - partial(v[2], 1);
  out[2] = partial(v[1], 1) - partial(v[0], 2);
  return out;
}

// ---------------------------------------------------------------------------
// Traces and boundary calculus

inline BoundaryScalarField trace(const ScalarField& f, Face face) {
  const Grid& g = f.grid();
  BoundaryScalarField out = BoundaryScalarField::uninitialized(g, face);
  const double* lay = f.layer(face == Face::bottom ? 0 : g.n3);
  for (std::size_t i = 0; i < g.layer_size(); ++i) out.data()[i] = lay[i];
  return out;
}

inline BoundaryVectorField trace(const VectorField& v, Face face) {
  BoundaryVectorField out(v.grid(), face);
  for (int i = 0; i < 3; ++i) out[i] = trace(v[i], face);
  return out;
}

/// Insert boundary values into the face layer of a volume field.
inline void set_face(ScalarField& f, const BoundaryScalarField& b) {
  const Grid& g = f.grid();
  double* lay = f.layer(b.face() == Face::bottom ? 0 : g.n3);
  for (std::size_t i = 0; i < g.layer_size(); ++i) lay[i] = b.data()[i];
}

inline BoundaryScalarField boundary_derivative(const BoundaryScalarField& f, int axis,
                                               int order = 1) {
  const Grid& g = f.grid();
  return apply_boundary_multiplier(f, DerivativeMultiplier{axis, order, g.n1, g.n2});
}

/// Surface Laplacian on the face (d1^2 + d2^2).
inline BoundaryScalarField boundary_laplacian(const BoundaryScalarField& f) {
  return apply_boundary_multiplier(f, [](int k1, int k2) {
    return -4.0 * M_PI * M_PI * double(k1 * k1 + k2 * k2);
  });
}

/// Fourth tangential derivative realized as the squared surface Laplacian
/// (multiplier (2*pi*|k|)^4); kills affine maps exactly.
inline BoundaryScalarField boundary_fourth_tangential(const BoundaryScalarField& f) {
  return apply_boundary_multiplier(f, [](int k1, int k2) {
    const double w = 4.0 * M_PI * M_PI * double(k1 * k1 + k2 * k2);
    return w * w;
  });
}

inline double boundary_mean(const BoundaryScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.data()[i];
  return s / double(f.size());
}

// ---------------------------------------------------------------------------
// Quadrature and norms

/// Integral over the slab: exact horizontal sums, trapezoidal vertically.
inline double integral(const ScalarField& f) {
  const Grid& g = f.grid();
  const double ha = g.h1 * g.h2;
  double s = 0.0;
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    const double* lay = f.layer(i3);
    double ls = 0.0;
    for (std::size_t i = 0; i < g.layer_size(); ++i) ls += lay[i];
    s += g.w3(i3) * ls * ha;
  }
  return s;
}

inline double l2_norm_sq(const ScalarField& f) {
  const Grid& g = f.grid();
  const double ha = g.h1 * g.h2;
  double s = 0.0;
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    const double* lay = f.layer(i3);
    double ls = 0.0;
    for (std::size_t i = 0; i < g.layer_size(); ++i) ls += lay[i] * lay[i];
    s += g.w3(i3) * ls * ha;
  }
  return s;
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(l2_norm_sq(f)); }

inline double l2_norm_sq(const VectorField& v) {
  return l2_norm_sq(v[0]) + l2_norm_sq(v[1]) + l2_norm_sq(v[2]);
}
inline double l2_norm(const VectorField& v) { return std::sqrt(l2_norm_sq(v)); }

inline double l2_norm_sq(const MatrixField& m) {
  double s = 0.0;
  for (const auto& f : m.c) s += l2_norm_sq(f);
  return s;
}
inline double l2_norm(const MatrixField& m) { return std::sqrt(l2_norm_sq(m)); }

namespace detail {

/// Sum over horizontal multi-indices a1+a2 <= r of the squared derivative
/// multipliers at mode (k1,k2), honoring the odd-order Nyquist convention.
inline double horizontal_multiplier_sum(int r, int k1, int k2, int n1, int n2) {
  auto t = [](int a, int k, int n) -> double {
    if (a == 0) return 1.0;
    if ((a & 1) && std::abs(k) == n / 2) return 0.0;
    return std::pow(4.0 * M_PI * M_PI * double(k) * double(k), a);
  };
  double s = 0.0;
  for (int a1 = 0; a1 <= r; ++a1)
    for (int a2 = 0; a2 + a1 <= r; ++a2) s += t(a1, k1, n1) * t(a2, k2, n2);
  return s;
}

}  // namespace detail

/// Squared H^s norm, s integer in 0..4: sum over |a| <= s of |D^a f|_0^2.
/// Horizontal factors are accumulated spectrally (exact for the nodal sums),
/// vertical derivatives by the 4th-order stencils, trapezoid in x3.
inline double sobolev_norm_sq(const ScalarField& f, int s) {
  if (s < 0 || s > 4) throw ValidationError("s", "sobolev_norm needs 0 <= s <= 4");
  const Grid& g = f.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  auto spec = make_spectrum(g);
  double total = 0.0;
  for (int a3 = 0; a3 <= s; ++a3) {
    const ScalarField d = (a3 == 0) ? f : vertical_derivative(f, a3);
    const int r = s - a3;
    for (int i3 = 0; i3 <= g.n3; ++i3) {
      fft.forward(d.layer(i3), spec.data());
      double ls = 0.0;
      for (int i1 = 0; i1 < g.n1; ++i1) {
        const int k1 = wavenumber(i1, g.n1);
        for (int j = 0; j < fft.nc(); ++j) {
          const double m = detail::horizontal_multiplier_sum(r, k1, j, g.n1, g.n2);
          ls += spec_weight(j, g.n2) * m * std::norm(spec[std::size_t(i1) * fft.nc() + j]);
        }
      }
      total += g.w3(i3) * ls;
    }
  }
  return total;
}

inline double sobolev_norm(const ScalarField& f, int s) { return std::sqrt(sobolev_norm_sq(f, s)); }

inline double sobolev_norm_sq(const VectorField& v, int s) {
  return sobolev_norm_sq(v[0], s) + sobolev_norm_sq(v[1], s) + sobolev_norm_sq(v[2], s);
}
inline double sobolev_norm(const VectorField& v, int s) { return std::sqrt(sobolev_norm_sq(v, s)); }

inline double sobolev_norm_sq(const MatrixField& m, int s) {
  double t = 0.0;
  for (const auto& f : m.c) t += sobolev_norm_sq(f, s);
  return t;
}
inline double sobolev_norm(const MatrixField& m, int s) { return std::sqrt(sobolev_norm_sq(m, s)); }

/// Fractional boundary norm |f|_s = ||(1+4 pi^2 |k|^2)^{s/2} fhat||_{l2},
/// s in [-1/2, 4]. s = 0 coincides with the L^2(face) norm.
inline double boundary_norm_sq(const BoundaryScalarField& f, double s) {
  if (s < -0.5 || s > 4.0) throw ValidationError("s", "boundary_norm needs -1/2 <= s <= 4");
  const Grid& g = f.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  auto spec = make_spectrum(g);
  fft.forward(f.data(), spec.data());
  double t = 0.0;
  for (int i1 = 0; i1 < g.n1; ++i1) {
    const int k1 = wavenumber(i1, g.n1);
    for (int j = 0; j < fft.nc(); ++j) {
      const double k2q = 1.0 + 4.0 * M_PI * M_PI * double(k1 * k1 + j * j);
      t += spec_weight(j, g.n2) * std::pow(k2q, s) * std::norm(spec[std::size_t(i1) * fft.nc() + j]);
    }
  }
  return t;
}

inline double boundary_norm(const BoundaryScalarField& f, double s) {
  return std::sqrt(boundary_norm_sq(f, s));
}

inline double boundary_norm_sq(const BoundaryVectorField& f, double s) {
  return boundary_norm_sq(f[0], s) + boundary_norm_sq(f[1], s) + boundary_norm_sq(f[2], s);
}
inline double boundary_norm(const BoundaryVectorField& f, double s) {
  return std::sqrt(boundary_norm_sq(f, s));
}

/// L^2 norm over one face (same as boundary_norm at s=0 up to round-off,
/// summed in physical space).
inline double boundary_l2(const BoundaryScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.data()[i] * f.data()[i];
  const Grid& g = f.grid();
  return std::sqrt(s * g.h1 * g.h2);
}

}  // namespace elastoslab
