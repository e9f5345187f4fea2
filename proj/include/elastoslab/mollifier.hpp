#pragma once

#include <cmath>
#include <vector>

#include "elastoslab/calculus.hpp"
#include "elastoslab/fft.hpp"
#include "elastoslab/grid.hpp"

namespace elastoslab {

/// Horizontal convolution-by-layers: the classical compactly supported bump
/// c*exp(-1/(1-|x|^2)) dilated to width kappa, sampled on the horizontal
/// grid with periodic wrap and renormalized to exact unit discrete mass.
/// Applied spectrally (the sampled kernel's DFT is a real multiplier).
class MollifierKernel {
 public:
  MollifierKernel() = default;

  double kappa() const { return kappa_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& samples() const { return samples_; }

  /// Real Fourier multiplier at half-spectrum entry (i1, j).
  double multiplier(int i1, int j) const { return spectrum_[std::size_t(i1) * nc_ + j]; }
  double spectrum_max_abs() const { return spectrum_max_; }

  friend MollifierKernel make_kernel(double kappa, const Grid& grid);

 private:
  double kappa_ = 0.0;
  Grid grid_;
  int nc_ = 0;
  std::vector<double> samples_;   // n1 x n2, wrapped
  std::vector<double> spectrum_;  // n1 x (n2/2+1), real
  double spectrum_max_ = 0.0;
};

/// Builds the dilated bump. Requires 0 < kappa < 1/4 (so the doubled support
/// still fits the unit cell and wrap-around equals planar convolution) and
/// kappa >= 2*max(h1,h2) (resolvable support).
inline MollifierKernel make_kernel(double kappa, const Grid& grid) {
  if (!(kappa > 0.0 && kappa < 0.25))
    throw ValidationError("kappa", "mollifier width must lie in (0, 1/4)");
  if (kappa < 2.0 * std::max(grid.h1, grid.h2))
    throw KernelUnresolved("kappa " + std::to_string(kappa) +
                           " below twice the horizontal spacing");

  MollifierKernel k;
  k.kappa_ = kappa;
  k.grid_ = grid;
  k.nc_ = spec_cols(grid.n2);
  k.samples_.assign(grid.layer_size(), 0.0);

  double mass = 0.0;
  for (int i1 = 0; i1 < grid.n1; ++i1) {
    const double d1 = std::min(i1, grid.n1 - i1) * grid.h1;
    for (int i2 = 0; i2 < grid.n2; ++i2) {
      const double d2 = std::min(i2, grid.n2 - i2) * grid.h2;
      const double r2 = (d1 * d1 + d2 * d2) / (kappa * kappa);
      double v = 0.0;
      if (r2 < 1.0) v = std::exp(-1.0 / (1.0 - r2));
      k.samples_[std::size_t(i1) * grid.n2 + i2] = v;
      mass += v;
    }
  }
  const double scale = 1.0 / (mass * grid.h1 * grid.h2);
  for (double& v : k.samples_) v *= scale;

  // Multiplier = normalized DFT of the samples (h1*h2*n1*n2 = 1). The kernel
  // is even under the wrap, so the transform is real; nonnegativity and unit
  // mass force |multiplier| <= 1 with equality at k = 0.
  const LayerFFT& fft = layer_fft(grid.n1, grid.n2);
  auto spec = make_spectrum(grid);
  fft.forward(k.samples_.data(), spec.data());
  k.spectrum_.resize(spec.size());
  double imag_max = 0.0, mmax = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    k.spectrum_[i] = spec[i].real();
    imag_max = std::max(imag_max, std::abs(spec[i].imag()));
    mmax = std::max(mmax, std::abs(k.spectrum_[i]));
  }
  k.spectrum_max_ = mmax;
  if (imag_max > 1e-12 || std::abs(k.spectrum_[0] - 1.0) > 1e-12 || mmax > 1.0 + 1e-8)
    throw Error("mollifier spectrum failed its invariants");
  return k;
}

inline void mollify_layer(const MollifierKernel& k, const double* in, double* out) {
  const Grid& g = k.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  auto spec = make_spectrum(g);
  fft.forward(in, spec.data());
  for (int i1 = 0; i1 < g.n1; ++i1)
    for (int j = 0; j < fft.nc(); ++j)
      spec[std::size_t(i1) * fft.nc() + j] *= k.multiplier(i1, j);
  fft.inverse(spec.data(), out);
}

inline ScalarField mollify(const ScalarField& f, const MollifierKernel& k) {
  ScalarField out = ScalarField::uninitialized(f.grid());
  for (int i3 = 0; i3 <= f.grid().n3; ++i3) mollify_layer(k, f.layer(i3), out.layer(i3));
  return out;
}

inline BoundaryScalarField mollify(const BoundaryScalarField& f, const MollifierKernel& k) {
  BoundaryScalarField out = BoundaryScalarField::uninitialized(f.grid(), f.face());
  mollify_layer(k, f.data(), out.data());
  return out;
}

inline VectorField mollify(const VectorField& f, const MollifierKernel& k) {
  VectorField out(f.grid());
  for (int i = 0; i < 3; ++i) out[i] = mollify(f[i], k);
  return out;
}

inline BoundaryVectorField mollify(const BoundaryVectorField& f, const MollifierKernel& k) {
  BoundaryVectorField out(f.grid(), f.face());
  for (int i = 0; i < 3; ++i) out[i] = mollify(f[i], k);
  return out;
}

template <class FieldLike>
FieldLike mollify_twice(const FieldLike& f, const MollifierKernel& k) {
  return mollify(mollify(f, k), k);
}

/// Direct wrap-around quadrature convolution; O(n^4) per layer, used as the
/// cross-validation oracle for the spectral path.
inline BoundaryScalarField mollify_direct(const BoundaryScalarField& f, const MollifierKernel& k) {
  const Grid& g = f.grid();
  BoundaryScalarField out(g, f.face());
  const double ha = g.h1 * g.h2;
  for (int i1 = 0; i1 < g.n1; ++i1)
    for (int i2 = 0; i2 < g.n2; ++i2) {
      double s = 0.0;
      for (int j1 = 0; j1 < g.n1; ++j1)
        for (int j2 = 0; j2 < g.n2; ++j2) {
          const int d1 = ((i1 - j1) % g.n1 + g.n1) % g.n1;
          const int d2 = ((i2 - j2) % g.n2 + g.n2) % g.n2;
          s += k.samples()[std::size_t(d1) * g.n2 + d2] * f(j1, j2);
        }
      out(i1, i2) = s * ha;
    }
  return out;
}

/// [Lambda_kappa, h] g = Lambda(h g) - h Lambda(g), on a face.
inline BoundaryScalarField commutator(const MollifierKernel& k, const BoundaryScalarField& h,
                                      const BoundaryScalarField& g) {
  BoundaryScalarField hg = h;
  for (std::size_t i = 0; i < hg.size(); ++i) hg.data()[i] *= g.data()[i];
  BoundaryScalarField a = mollify(hg, k);
  BoundaryScalarField b = mollify(g, k);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] -= h.data()[i] * b.data()[i];
  return a;
}

/// Same on one layer of the slab (fields restricted to a common layer).
inline ScalarField commutator(const MollifierKernel& k, const ScalarField& h,
                              const ScalarField& g) {
  ScalarField hg = h;
  for (std::size_t i = 0; i < hg.size(); ++i) hg.data()[i] *= g.data()[i];
  ScalarField a = mollify(hg, k);
  ScalarField b = mollify(g, k);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] -= h.data()[i] * b.data()[i];
  return a;
}

/// W^{1,inf} seminorm house rule: |h|_inf + max_axis |dh|_inf.
inline double w1inf_norm(const BoundaryScalarField& h) {
  return h.max_abs() + std::max(boundary_derivative(h, 1).max_abs(),
                                boundary_derivative(h, 2).max_abs());
}

}  // namespace elastoslab
