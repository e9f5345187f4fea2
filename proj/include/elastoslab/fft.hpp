#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "elastoslab/grid.hpp"

namespace elastoslab {

/// Half-spectrum size of an n1 x n2 real layer.
inline int spec_cols(int n2) { return n2 / 2 + 1; }
inline std::size_t spec_size(int n1, int n2) { return std::size_t(n1) * spec_cols(n2); }

/// Signed wavenumber of row index i1 (period-1 convention, so the physical
/// frequency is 2*pi*k1).
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real 2D FFT of one horizontal layer. Forward output is normalized so that
/// coef(k) = (1/(n1*n2)) sum f(x) exp(-2*pi*i k.x); inverse undoes it exactly.
/// Plans execute on internal buffers, so one instance per thread is safe.
class LayerFFT {
 public:
  LayerFFT(int n1, int n2) : n1_(n1), n2_(n2), nc_(spec_cols(n2)) {
    rbuf_ = fftw_alloc_real(std::size_t(n1) * n2);
    cbuf_ = fftw_alloc_complex(std::size_t(n1) * nc_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n1, n2, rbuf_, cbuf_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(n1, n2, cbuf_, rbuf_, FFTW_ESTIMATE);
  }
  ~LayerFFT() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(rbuf_);
    fftw_free(cbuf_);
  }
  LayerFFT(const LayerFFT&) = delete;
  LayerFFT& operator=(const LayerFFT&) = delete;

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int nc() const { return nc_; }

  void forward(const double* in, std::complex<double>* out) const {
    const std::size_t nr = std::size_t(n1_) * n2_;
    for (std::size_t i = 0; i < nr; ++i) rbuf_[i] = in[i];
    fftw_execute(fwd_);
    const double scale = 1.0 / double(nr);
    const std::size_t ns = std::size_t(n1_) * nc_;
    for (std::size_t i = 0; i < ns; ++i)
      out[i] = std::complex<double>(cbuf_[i][0] * scale, cbuf_[i][1] * scale);
  }

  void inverse(const std::complex<double>* in, double* out) const {
    const std::size_t ns = std::size_t(n1_) * nc_;
    for (std::size_t i = 0; i < ns; ++i) {
      cbuf_[i][0] = in[i].real();
      cbuf_[i][1] = in[i].imag();
    }
    fftw_execute(inv_);
    const std::size_t nr = std::size_t(n1_) * n2_;
    for (std::size_t i = 0; i < nr; ++i) out[i] = rbuf_[i];
  }

 private:
  int n1_, n2_, nc_;
  double* rbuf_;
  fftw_complex* cbuf_;
  fftw_plan fwd_, inv_;
};

/// Per-thread plan cache keyed by (n1,n2).
inline const LayerFFT& layer_fft(int n1, int n2) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<LayerFFT>> cache;
  auto& slot = cache[{n1, n2}];
  if (!slot) slot = std::make_unique<LayerFFT>(n1, n2);
  return *slot;
}

/// Scratch spectrum sized for a grid's layer.
inline std::vector<std::complex<double>> make_spectrum(const Grid& g) {
  return std::vector<std::complex<double>>(spec_size(g.n1, g.n2));
}

/// Parseval weight of half-spectrum column j (doubles the interior columns).
inline double spec_weight(int j, int n2) { return (j == 0 || j == n2 / 2) ? 1.0 : 2.0; }

/// Apply a complex Fourier multiplier m(k1,k2) to every layer of f.
template <class M>
ScalarField apply_horizontal_multiplier(const ScalarField& f, M&& m) {
  const Grid& g = f.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  ScalarField out = ScalarField::uninitialized(g);
  thread_local std::vector<std::complex<double>> spec;
  spec.resize(spec_size(g.n1, g.n2));
  for (int i3 = 0; i3 <= g.n3; ++i3) {
    fft.forward(f.layer(i3), spec.data());
    for (int i1 = 0; i1 < g.n1; ++i1) {
      const int k1 = wavenumber(i1, g.n1);
      for (int j = 0; j < fft.nc(); ++j)
        spec[std::size_t(i1) * fft.nc() + j] *= m(k1, j);
    }
    fft.inverse(spec.data(), out.layer(i3));
  }
  return out;
}

/// Same for a single boundary field.
template <class M>
BoundaryScalarField apply_boundary_multiplier(const BoundaryScalarField& f, M&& m) {
  const Grid& g = f.grid();
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  BoundaryScalarField out = BoundaryScalarField::uninitialized(g, f.face());
  thread_local std::vector<std::complex<double>> spec;
  spec.resize(spec_size(g.n1, g.n2));
  fft.forward(f.data(), spec.data());
  for (int i1 = 0; i1 < g.n1; ++i1) {
    const int k1 = wavenumber(i1, g.n1);
    for (int j = 0; j < fft.nc(); ++j)
      spec[std::size_t(i1) * fft.nc() + j] *= m(k1, j);
  }
  fft.inverse(spec.data(), out.data());
  return out;
}

/// Multiplier of the m-th tangential derivative along the given axis.
/// Nyquist rows/columns are zeroed for odd m (their sign is ambiguous).
struct DerivativeMultiplier {
  int axis;   // 1 or 2
  int order;  // >= 1
  int n1, n2;
  std::complex<double> operator()(int k1, int k2) const {
    const int k = axis == 1 ? k1 : k2;
    const int nyq = (axis == 1 ? n1 : n2) / 2;
    if ((order & 1) && std::abs(k) == nyq) return {0.0, 0.0};
    std::complex<double> iw(0.0, 2.0 * M_PI * k);
    std::complex<double> r(1.0, 0.0);
    for (int p = 0; p < order; ++p) r *= iw;
    return r;
  }
};

}  // namespace elastoslab
