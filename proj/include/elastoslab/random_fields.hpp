#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "elastoslab/calculus.hpp"
#include "elastoslab/fft.hpp"
#include "elastoslab/geometry.hpp"

namespace elastoslab {

/// Band-limited scalar: random horizontal modes |k| <= kmax with vertical
/// profiles cos(m pi x3), m <= mmax. Deterministic in the seed and
/// resolution-independent (same continuous function on finer grids).
inline ScalarField random_bandlimited_scalar(const Grid& g, int kmax, int mmax,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::normal_distribution<double> amp(0.0, 1.0);
  ScalarField f(g);
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int m = 0; m <= mmax; ++m) {
        const double a = amp(rng), p = phase(rng);
        f += ScalarField::sample(g, [=](double x, double y, double z) {
          return a * std::cos(2.0 * M_PI * (k1 * x + k2 * y) + p) * std::cos(m * M_PI * z);
        });
      }
  return f;
}

/// Sup-normalized displacement with the given amplitude.
inline FlowMap random_flowmap(const Grid& g, double amplitude, int kmax, int mmax,
                              std::uint64_t seed) {
  FlowMap eta(g);
  for (int i = 0; i < 3; ++i) {
    ScalarField f = random_bandlimited_scalar(g, kmax, mmax, seed + 97 * i);
    f *= amplitude / std::max(1e-30, f.max_abs());
    eta.displacement[i] = std::move(f);
  }
  return eta;
}

/// Divergence-free band-limited vector field: curl of a random potential.
/// Mixed discrete partials commute exactly, so the discrete divergence is
/// round-off.
inline VectorField random_divfree(const Grid& g, double amplitude, int kmax, int mmax,
                                  std::uint64_t seed) {
  VectorField psi(g);
  for (int i = 0; i < 3; ++i) psi[i] = random_bandlimited_scalar(g, kmax, mmax, seed + 31 * i);
  VectorField v = curl(psi);
  v *= amplitude / std::max(1e-30, v.max_abs());
  return v;
}

/// Boundary noise with spectrum |fhat(k)| ~ |k|^{-1} (1 + 4 pi^2 |k|^2)^{-s/2}
/// and random phases: equal energy per octave of the H^s budget, the field
/// family on which the mollifier loss-slope is sharp across a kappa sweep.
inline BoundaryScalarField scale_uniform_noise(const Grid& g, Face face, double s,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  const LayerFFT& fft = layer_fft(g.n1, g.n2);
  auto spec = make_spectrum(g);
  for (int i1 = 0; i1 < g.n1; ++i1) {
    const int k1 = wavenumber(i1, g.n1);
    for (int j = 0; j < fft.nc(); ++j) {
      const double k2q = double(k1) * k1 + double(j) * j;
      std::complex<double> c(dist(rng), dist(rng));
      if (k2q == 0.0) {
        c = 0.0;
      } else {
        c *= std::pow(k2q, -0.5) * std::pow(1.0 + 4.0 * M_PI * M_PI * k2q, -0.5 * s);
      }
      spec[std::size_t(i1) * fft.nc() + j] = c;
    }
  }
  BoundaryScalarField out(g, face);
  fft.inverse(spec.data(), out.data());
  return out;
}

/// Flat white noise on the face nodes.
inline BoundaryScalarField white_noise(const Grid& g, Face face, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  BoundaryScalarField out(g, face);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
  return out;
}

/// Smooth random boundary multiplier (modes <= 4), bounded W^{1,inf}.
inline BoundaryScalarField random_boundary_multiplier(const Grid& g, Face face,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::normal_distribution<double> amp(0.0, 1.0);
  BoundaryScalarField h(g, face, 0.0);
  for (int k1 = -4; k1 <= 4; ++k1)
    for (int k2 = 0; k2 <= 4; ++k2) {
      const double a = amp(rng), p = phase(rng);
      h += BoundaryScalarField::sample(g, face, [=](double x, double y) {
        return a * std::cos(2.0 * M_PI * (k1 * x + k2 * y) + p);
      });
    }
  h *= 1.0 / std::max(1e-30, h.max_abs());
  return h;
}

}  // namespace elastoslab
