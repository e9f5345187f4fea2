#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "elastoslab/diagnostics.hpp"
#include "elastoslab/random_fields.hpp"
#include "elastoslab/runner.hpp"

namespace elastoslab {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string note;
};

namespace verify_detail {

inline void add(std::vector<CheckResult>& out, const std::string& name, bool pass,
                double measured, double threshold, const std::string& note = "") {
  out.push_back({name, pass, measured, threshold, note});
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Mollifier lemma suite

inline void verify_mollifier(std::vector<CheckResult>& out, std::uint64_t seed) {
  using verify_detail::add;
  const std::vector<double> sweep = {0.2, 0.1, 0.05, 0.025};
  Grid g(256, 256, 8);

  // Operator norm |Lambda h|_s <= (1 + 1e-8) |h|_s, white-noise h.
  {
    double worst = 0.0;
    auto h = white_noise(g, Face::bottom, seed + 1);
    for (double kap : sweep) {
      auto k = make_kernel(kap, g);
      for (double s : {0.0, 0.5, 1.0, 2.0}) {
        const double r = boundary_norm(mollify(h, k), s) / boundary_norm(h, s);
        worst = std::max(worst, r);
      }
      worst = std::max(worst, k.spectrum_max_abs());
    }
    add(out, "mollifier/operator-norm", worst <= 1.0 + 1e-8, worst, 1.0 + 1e-8);
  }

  // Derivative-loss slope: |dbar Lambda_k h|_0 ~ kappa^{s-1} on fields with
  // per-octave-flat H^s energy (the family on which the bound is sharp).
  // The fit runs over kappa small enough that the kernel cutoff sits well
  // inside the resolved band; at kappa ~ 0.2 the cutoff is still near the
  // first mode and the rate has not set in.
  {
    Grid gf(512, 512, 8);
    const std::vector<double> fit_sweep = {0.1, 0.05, 0.025, 0.0125};
    for (double s : {0.0, 0.5, 1.0}) {
      // For s = 1 the sharp rate is flat; a genuinely-H^1 field (spectral
      // margin 1/2) makes the measured slope settle near zero.
      auto h = scale_uniform_noise(gf, Face::bottom, s == 1.0 ? 1.5 : s, seed + 7 + int(s * 2));
      std::vector<double> vals;
      for (double kap : fit_sweep) {
        auto k = make_kernel(kap, gf);
        auto m = mollify(h, k);
        const double d = std::sqrt(boundary_norm_sq(boundary_derivative(m, 1), 0.0) +
                                   boundary_norm_sq(boundary_derivative(m, 2), 0.0));
        vals.push_back(d);
      }
      const double slope = verify_detail::loglog_slope(fit_sweep, vals);
      const double target = s - 1.0;
      // "within 15%" on the unit slope scale; a relative band is empty at s=1.
      const double tol = 0.15 * std::max(1.0, std::abs(target));
      char note[128];
      std::snprintf(note, sizeof note, "slope %.3f target %.2f", slope, target);
      add(out, "mollifier/loss-slope-s" + std::to_string(s), std::abs(slope - target) <= tol,
          slope, target, note);
    }
  }

  // Commutator uniformity across the sweep, max/min <= 3. Each estimate is
  // exercised on the field family where it is sharp.
  {
    auto h = random_boundary_multiplier(g, Face::bottom, seed + 21);
    const double hw = w1inf_norm(h);
    auto g_white = white_noise(g, Face::bottom, seed + 22);
    auto g_half = scale_uniform_noise(g, Face::bottom, 0.5, seed + 23);
    auto g_zero = scale_uniform_noise(g, Face::bottom, 0.0, seed + 24);
    std::vector<double> r0, r1, r12;
    for (double kap : sweep) {
      auto k = make_kernel(kap, g);
      r0.push_back(boundary_norm(commutator(k, h, g_white), 0.0) /
                   (h.max_abs() * boundary_norm(g_white, 0.0)));
      auto dg = boundary_derivative(g_zero, 1);
      r1.push_back(boundary_norm(commutator(k, h, dg), 0.0) /
                   (hw * boundary_norm(g_zero, 0.0)));
      auto dgh = boundary_derivative(g_half, 1);
      r12.push_back(boundary_norm(commutator(k, h, dgh), 0.5) /
                    (hw * boundary_norm(g_half, 0.5)));
    }
    auto ratio = [](const std::vector<double>& v) {
      double lo = 1e300, hi = 0.0;
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      return hi / lo;
    };
    add(out, "mollifier/commutator-L2", ratio(r0) <= 3.0, ratio(r0), 3.0);
    add(out, "mollifier/commutator-dbar-L2", ratio(r1) <= 3.0, ratio(r1), 3.0);
    add(out, "mollifier/commutator-dbar-H12", ratio(r12) <= 3.0, ratio(r12), 3.0);
  }

  // Spectral path against the direct quadrature convolution.
  {
    Grid gc(32, 32, 8);
    auto k = make_kernel(0.12, gc);
    auto f = white_noise(gc, Face::top, seed + 31);
    auto a = mollify(f, k);
    auto b = mollify_direct(f, k);
    const double rel = (a - b).max_abs() / f.max_abs();
    add(out, "mollifier/dual-path", rel < 1e-10, rel, 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Elliptic manufactured solutions

inline void verify_elliptic(std::vector<CheckResult>& out) {
  using verify_detail::add;
  const double pi = M_PI;

  // Constant coefficients.
  {
    std::vector<double> errs, hs;
    for (int n3 : {16, 32, 64}) {
      Grid g(64, 64, n3);
      auto exact = ScalarField::sample(g, [&](double x, double, double z) {
        return std::sin(2 * pi * x) * std::sin(pi * z);
      });
      auto rhs = ScalarField::sample(g, [&](double x, double, double z) {
        return (4 * pi * pi + pi * pi) * std::sin(2 * pi * x) * std::sin(pi * z);
      });
      BoundaryScalarField zb(g, Face::bottom), zt(g, Face::top);
      auto s = solve_laplace_dirichlet(rhs, zb, zt);
      ScalarField d = s.field;
      d -= exact;
      errs.push_back(l2_norm(d) / l2_norm(exact));
      hs.push_back(1.0 / n3);
    }
    const double order = verify_detail::loglog_slope(hs, errs);
    add(out, "elliptic/constant-order", order >= 3.0, order, 3.0);
    add(out, "elliptic/constant-error-64", errs.back() <= 1e-5, errs.back(), 1e-5);
  }

  // Flow-map coefficients (unit-Jacobian shear), manufactured solution.
  {
    const double a = 0.02;
    auto gfun = [&](double z) { return std::sin(pi * z); };
    auto gp = [&](double z) { return pi * std::cos(pi * z); };
    auto pfun = [&](double x, double z) { return 2 * pi * a * std::cos(2 * pi * x) * gfun(z); };
    auto rfun = [&](double x, double z) { return a * std::sin(2 * pi * x) * gp(z); };
    auto qfun = [&](double x, double y, double z) {
      return std::sin(2 * pi * x) * std::cos(2 * pi * y) * std::sin(pi * z);
    };
    auto dq = [&](double x, double y, double z, int ax) {
      switch (ax) {
        case 0: return 2 * pi * std::cos(2 * pi * x) * std::cos(2 * pi * y) * std::sin(pi * z);
        case 1: return -2 * pi * std::sin(2 * pi * x) * std::sin(2 * pi * y) * std::sin(pi * z);
        default: return pi * std::sin(2 * pi * x) * std::cos(2 * pi * y) * std::cos(pi * z);
      }
    };
    auto Wc = [&](double x, double y, double z, int j) {
      const double p = pfun(x, z), r = rfun(x, z);
      const double g1 = dq(x, y, z, 0), g2 = dq(x, y, z, 1), g3 = dq(x, y, z, 2);
      switch (j) {
        case 0: return g1 - p * g2;
        case 1: return -p * g1 + (1 + p * p + r * r) * g2 - r * g3;
        default: return -r * g2 + g3;
      }
    };
    std::vector<double> errs, hs;
    int final_iters = 0;
    for (int n3 : {16, 32, 64}) {
      Grid g(64, 64, n3);
      FlowMap eta(g);
      eta.displacement[1] = ScalarField::sample(
          g, [&](double x, double, double z) { return a * std::sin(2 * pi * x) * gfun(z); });
      auto jc = jacobian_and_cofactor(deformation_gradient(eta));
      MatrixField E(g);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double* o = E(i, j).data();
          for (int mm = 0; mm < 3; ++mm) {
            const double* am = jc.A(mm, i).data();
            const double* an = jc.A(mm, j).data();
            const double* jj = jc.J.data();
            for (std::size_t p = 0; p < E(i, j).size(); ++p) o[p] += jj[p] * am[p] * an[p];
          }
        }
      const double h = 1e-5;
      auto rhs = ScalarField::sample(g, [&](double x, double y, double z) {
        const double d1 = (Wc(x + h, y, z, 0) - Wc(x - h, y, z, 0)) / (2 * h);
        const double d2 = (Wc(x, y + h, z, 1) - Wc(x, y - h, z, 1)) / (2 * h);
        const double d3 = (Wc(x, y, z + h, 2) - Wc(x, y, z - h, 2)) / (2 * h);
        return -(d1 + d2 + d3);
      });
      auto s = solve_pressure(E, rhs);
      final_iters = s.iterations;
      auto exact = ScalarField::sample(g, qfun);
      ScalarField d = s.field;
      d -= exact;
      errs.push_back(l2_norm(d) / l2_norm(exact));
      hs.push_back(1.0 / n3);
    }
    const double order = verify_detail::loglog_slope(hs, errs);
    add(out, "elliptic/flowmap-order", order >= 3.0, order, 3.0);
    add(out, "elliptic/flowmap-error-64", errs.back() <= 1e-5, errs.back(), 1e-5);
    add(out, "elliptic/flowmap-iterations", final_iters <= 50, final_iters, 50);
  }

  // Pressure solve with E = I against the direct path.
  {
    Grid g(16, 16, 16);
    auto rhs = ScalarField::sample(g, [&](double x, double y, double z) {
      return std::sin(2 * pi * x) * std::cos(2 * pi * y) * std::sin(pi * z);
    });
    auto E = MatrixField::identity(g);
    auto s = solve_pressure(E, rhs);
    ScalarField r2 = rhs;
    detail::zero_faces(r2);
    BoundaryScalarField zb(g, Face::bottom), zt(g, Face::top);
    auto d = solve_laplace_dirichlet(r2, zb, zt);
    ScalarField gap = s.field;
    gap -= d.field;
    const double rel = l2_norm(gap) / l2_norm(d.field);
    add(out, "elliptic/identity-agreement", rel <= kTauEll, rel, kTauEll);
  }

  // Discrete maximum principle with O(h) slack.
  {
    Grid g(16, 16, 16);
    ScalarField rhs(g);
    auto gb = BoundaryScalarField::sample(
        g, Face::bottom, [&](double x, double y) { return std::sin(2 * pi * (x + y)); });
    BoundaryScalarField gt(g, Face::top, 0.25);
    auto s = solve_laplace_dirichlet(rhs, gb, gt);
    add(out, "elliptic/max-principle", s.field.max_abs() <= 1.0 + g.h3, s.field.max_abs(),
        1.0 + g.h3);
  }

  // Surface inverse Laplacian round trip.
  {
    Grid g(32, 32, 8);
    auto f = white_noise(g, Face::bottom, 99);
    auto back = boundary_laplacian(surface_inverse_laplacian(f));
    auto proj = mean_zero_project(f);
    const double rel = (back - proj).max_abs() / f.max_abs();
    add(out, "elliptic/surface-roundtrip", rel < 1e-10, rel, 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Geometry identities

inline void verify_geometry(std::vector<CheckResult>& out, std::uint64_t seed) {
  using verify_detail::add;
  // Piola residual decays at the discretization order.
  {
    std::vector<double> res, hs;
    for (int n3 : {16, 32}) {
      res.push_back(piola_residual(random_flowmap(Grid(16, 16, n3), 0.05, 2, 2, seed + 3)));
      hs.push_back(1.0 / n3);
    }
    const double order = verify_detail::loglog_slope(hs, res);
    add(out, "geometry/piola-order", order >= 3.0, order, 3.0);
  }
  // A F^T = I nodewise.
  {
    Grid g(16, 16, 16);
    auto eta = random_flowmap(g, 0.05, 2, 2, seed + 5);
    auto F = deformation_gradient(eta);
    auto jc = jacobian_and_cofactor(F);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double target = i == j ? 1.0 : 0.0;
        for (std::size_t p = 0; p < jc.J.size(); ++p) {
          double acc = 0.0;
          for (int k = 0; k < 3; ++k) acc += jc.A(i, k).data()[p] * F(j, k).data()[p];
          worst = std::max(worst, std::abs(acc - target));
        }
      }
    add(out, "geometry/cofactor-inverse", worst < 1e-12, worst, 1e-12);
  }
  // Matrix curl of a gradient field: mixed discrete partials commute
  // exactly (different axes act on disjoint indices), so this vanishes to
  // round-off, not merely at discretization order.
  {
    double worst = 0.0;
    for (int n3 : {16, 32}) {
      Grid g(16, 16, n3);
      auto eta = random_flowmap(g, 0.5, 2, 2, seed + 7);
      auto rc = matrix_curl(gradient(eta.displacement));
      for (const auto& f : rc.c) worst = std::max(worst, l2_norm(f));
    }
    add(out, "geometry/curl-of-gradient", worst < 1e-10, worst, 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Stability gate

inline void verify_stability_gate(std::vector<CheckResult>& out) {
  using verify_detail::add;
  Grid g(32, 32, 16);

  // Canonical equilibrium with both faces NC: valid; margins (rt=0, nc=1).
  {
    RunConfig c;
    c.initial = VelocityRecipe::equilibrium;
    BoundaryPartition part;  // nc/nc
    auto d = assemble_initial_data(make_initial_velocity(c, g), DeformationRecipe::canonical,
                                   part);
    const bool ok = std::abs(d.nc_margin[0] - 1.0) < 1e-12 &&
                    std::abs(d.nc_margin[1] - 1.0) < 1e-12 &&
                    std::abs(d.rt_margin[0]) < 1e-9 && std::abs(d.rt_margin[1]) < 1e-9;
    add(out, "stability/nc-only-equilibrium", ok, d.nc_margin[0], 1.0);
  }

  // Mixed datum: bottom RT with measured margin >= lambda, top NC.
  {
    RunConfig c;
    c.initial = VelocityRecipe::mixed_rt;
    c.amplitude = 0.15;
    BoundaryPartition part;
    part.bottom = Regime::rt;
    part.top = Regime::nc;
    auto d = assemble_initial_data(make_initial_velocity(c, g), DeformationRecipe::canonical,
                                   part);
    const bool ok = d.rt_margin[0] >= part.lambda && d.nc_margin[1] >= part.delta;
    char note[96];
    std::snprintf(note, sizeof note, "rt_bottom %.4f nc_top %.4f", d.rt_margin[0],
                  d.nc_margin[1]);
    add(out, "stability/mixed-gate", ok, d.rt_margin[0], part.lambda, note);
  }

  // Requesting RT on a zero-pressure face must fail loudly.
  {
    RunConfig c;
    c.initial = VelocityRecipe::equilibrium;
    BoundaryPartition part;
    part.bottom = Regime::rt;
    part.top = Regime::rt;
    bool threw = false;
    try {
      assemble_initial_data(make_initial_velocity(c, g), DeformationRecipe::canonical, part);
    } catch (const StabilityViolation&) {
      threw = true;
    }
    add(out, "stability/rt-rejection", threw, threw ? 1.0 : 0.0, 1.0);
  }

  // Columnar recipe meets its constraints; sheared too.
  {
    auto col = make_G0(DeformationRecipe::columnar, g, 0.3);
    auto [dres, fres] = col.constraint_residuals();
    add(out, "stability/columnar-constraints", dres <= kTauCon && fres <= kTauCon,
        std::max(dres, fres), kTauCon);
    auto sh = make_G0(DeformationRecipe::sheared, g, 0.3);
    auto [dres2, fres2] = sh.constraint_residuals();
    add(out, "stability/sheared-constraints", dres2 <= kTauCon && fres2 <= kTauCon,
        std::max(dres2, fres2), kTauCon);
  }

  // Analytic sign-condition margins: the quadratic profile is stencil-exact;
  // the sine profile carries the 4th-order derivative error.
  {
    Grid gf(8, 8, 64);
    auto q1 = ScalarField::sample(gf, [](double, double, double z) { return std::sin(M_PI * z); });
    auto c1 = check_rayleigh_taylor(q1, Face::bottom, 0.1);
    auto q2 = ScalarField::sample(gf, [](double, double, double z) { return z * (1.0 - z); });
    auto c2 = check_rayleigh_taylor(q2, Face::top, 0.1);
    const bool ok = std::abs(c1.margin - M_PI) < 1e-4 && std::abs(c2.margin - 1.0) < 1e-10;
    add(out, "stability/rt-analytic-margins", ok, c1.margin, M_PI);
  }
}

// ---------------------------------------------------------------------------
// Evolution sanity

inline void verify_evolution(std::vector<CheckResult>& out, std::uint64_t seed) {
  using verify_detail::add;

  // Equilibrium is an exact fixed point (short horizon; the acceptance suite
  // runs the full one).
  {
    Grid g(16, 16, 16);
    RunConfig c;
    c.initial = VelocityRecipe::equilibrium;
    auto data = assemble_initial_data(make_initial_velocity(c, g),
                                      DeformationRecipe::canonical, BoundaryPartition{});
    SystemOptions opt;
    KappaSystem sys(data.G0, make_kernel(0.15, g), opt);
    SimState s = sys.initial_state(data);
    for (int i = 0; i < 20; ++i) s = sys.step(s, 2e-3);
    const double drift = sobolev_norm(s.eta.displacement, 4) + sobolev_norm(s.v, 4);
    add(out, "evolve/equilibrium-fixed-point", drift <= 10 * kTauEll, drift, 10 * kTauEll);
  }

  // Path equivalence: with eta = Id the smoothed map velocity equals the
  // flow-map smoother applied to the velocity field.
  {
    Grid g(32, 32, 16);
    auto kernel = make_kernel(0.1, g);
    VectorField v = random_divfree(g, 0.1, 2, 2, seed + 11);
    VectorField a = smoothed_time_derivative(v, VectorField(g), kernel);
    FlowMap vmap(g);
    vmap.displacement = v;
    VectorField b = smooth_flowmap(vmap, kernel).displacement;
    VectorField d = a;
    d -= b;
    add(out, "evolve/smoother-path-equivalence", d.max_abs() < 1e-12, d.max_abs(), 1e-12);
  }

  // Frozen-trajectory difference quotient: the smoother is linear in the
  // displacement, so (m(d + delta w) - m(d))/delta equals m(w) exactly.
  {
    Grid g(32, 32, 16);
    auto kernel = make_kernel(0.1, g);
    FlowMap eta = random_flowmap(g, 0.05, 2, 2, seed + 13);
    VectorField w = random_divfree(g, 0.1, 2, 2, seed + 14);
    const double delta = 1e-6;
    FlowMap shifted = eta;
    shifted.displacement.axpy(delta, w);
    VectorField diff = smooth_flowmap(shifted, kernel).displacement;
    diff -= smooth_flowmap(eta, kernel).displacement;
    diff *= 1.0 / delta;
    FlowMap wmap(g);
    wmap.displacement = w;
    diff -= smooth_flowmap(wmap, kernel).displacement;
    add(out, "evolve/smoother-time-difference", diff.max_abs() < 1e-8, diff.max_abs(), 1e-8);
  }

  // Reversibility smoke: +dt then -dt returns within O(dt^5) per pair.
  {
    Grid g(16, 16, 16);
    RunConfig c;
    c.initial = VelocityRecipe::standard;
    c.amplitude = 0.02;
    auto data = assemble_initial_data(make_initial_velocity(c, g),
                                      DeformationRecipe::canonical, BoundaryPartition{});
    SystemOptions opt;
    KappaSystem sys(data.G0, make_kernel(0.15, g), opt);
    SimState s0 = sys.initial_state(data);
    const double dt = 1e-3;
    SimState s1 = sys.step(s0, dt);
    SimState s2 = sys.step(s1, -dt);
    double gap = (s2.eta.displacement - s0.eta.displacement).max_abs() +
                 (s2.v - s0.v).max_abs();
    add(out, "evolve/reversibility", gap < 1e-11, gap, 1e-11);
  }

  // Modification-term smallness: |dbar psi|_inf / sqrt(kappa) carries no
  // growth trend as kappa -> 0 on frozen representative states.
  {
    Grid g(128, 128, 16);
    FlowMap eta = random_flowmap(g, 0.05, 2, 1, seed + 17);
    VectorField v = random_divfree(g, 0.05, 2, 1, seed + 18);
    std::vector<double> inv_sqrt, ratio;
    for (double kap : {0.2, 0.1, 0.05, 0.025}) {
      auto kernel = make_kernel(kap, g);
      auto jc = jacobian_and_cofactor(deformation_gradient(smooth_flowmap(eta, kernel)));
      VectorField psi = modification_term(eta, v, jc.A, kernel);
      double dpsi = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int axis : {1, 2})
          dpsi = std::max(dpsi, tangential_derivative(psi[i], axis).max_abs());
      ratio.push_back(dpsi / std::sqrt(kap));
      inv_sqrt.push_back(1.0 / std::sqrt(kap));
    }
    double mean = 0.0, mean_x = 0.0;
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      mean += ratio[i];
      mean_x += inv_sqrt[i];
    }
    mean /= ratio.size();
    mean_x /= inv_sqrt.size();
    const double slope = verify_detail::linear_slope(inv_sqrt, ratio);
    // "<= 0 within noise": the fitted increase across the sweep must stay
    // under 5% of the mean level.
    const double allowed = 0.05 * mean / mean_x;
    char note[96];
    std::snprintf(note, sizeof note, "slope %.3e allowed %.3e mean %.3e", slope, allowed, mean);
    add(out, "evolve/psi-smallness", slope <= allowed, slope, allowed, note);
  }
}

// ---------------------------------------------------------------------------
// Diagnostics lemmas

inline void verify_diagnostics(std::vector<CheckResult>& out, std::uint64_t seed) {
  using verify_detail::add;

  // Equilibrium energy value: 1 + 3 + 2 = 6 with canonical G0, empty RT set.
  {
    Grid g(32, 32, 32);
    RunConfig c;
    c.initial = VelocityRecipe::equilibrium;
    auto data = assemble_initial_data(make_initial_velocity(c, g),
                                      DeformationRecipe::canonical, BoundaryPartition{});
    KappaSystem sys(data.G0, make_kernel(0.1, g), SystemOptions{});
    SimState s = sys.initial_state(data);
    sys.refresh_cache(s);
    auto e = energy_limit(s, sys.G0(), BoundaryPartition{});
    auto ek = energy_kappa(s, sys.G0(), BoundaryPartition{}, sys.kernel());
    const bool ok = std::abs(e.total() - 6.0) < 1e-10 && std::abs(ek.total() - 6.0) < 1e-10 &&
                    e.boundary == 0.0 && ek.boundary == 0.0;
    add(out, "diagnostics/equilibrium-energy", ok, e.total(), 6.0);
  }

  // Hodge constants: bounded and stable under one refinement.
  for (int s = 1; s <= 4; ++s) {
    double worst[2] = {0.0, 0.0};
    int gi = 0;
    for (int n : {16, 32}) {
      Grid g(n, n, n);
      for (int trial = 0; trial < 12; ++trial) {
        VectorField w(g);
        for (int i = 0; i < 3; ++i)
          w[i] = random_bandlimited_scalar(g, 2, 2, seed + 100 * s + 10 * trial + i);
        worst[gi] = std::max(worst[gi], hodge_check(w, s));
      }
      ++gi;
    }
    const double rel = std::abs(worst[0] - worst[1]) / std::max(worst[0], worst[1]);
    char note[96];
    std::snprintf(note, sizeof note, "max ratio %.3f -> %.3f", worst[0], worst[1]);
    add(out, "diagnostics/hodge-s" + std::to_string(s), rel <= 0.2 && worst[1] < 1e3, rel, 0.2,
        note);
  }

  // Normal trace: single-mode closed form and randomized stability.
  {
    Grid g(32, 32, 32);
    VectorField w(g);
    w[2] = ScalarField::sample(g, [](double x, double, double) { return std::sin(2 * M_PI * x); });
    // per-face |dbar w . N|_{-1/2} contribution for the mode cos(2 pi x):
    const double per_face = 2 * M_PI * std::pow(1.0 + 4 * M_PI * M_PI, -0.25) / std::sqrt(2.0);
    double lhs = 0.0;
    for (Face f : {Face::bottom, Face::top}) {
      BoundaryScalarField w3 = trace(w[2], f);
      for (int axis : {1, 2}) lhs += boundary_norm_sq(boundary_derivative(w3, axis), -0.5);
    }
    lhs = std::sqrt(lhs);
    const double expect = per_face * std::sqrt(2.0);
    add(out, "diagnostics/normal-trace-analytic", std::abs(lhs - expect) < 1e-6,
        std::abs(lhs - expect), 1e-6);

    double worst[2] = {0.0, 0.0};
    int gi = 0;
    for (int n : {16, 32}) {
      Grid gg(n, n, n);
      for (int trial = 0; trial < 12; ++trial) {
        VectorField ww(gg);
        for (int i = 0; i < 3; ++i)
          ww[i] = random_bandlimited_scalar(gg, 2, 2, seed + 500 + 10 * trial + i);
        worst[gi] = std::max(worst[gi], normal_trace_check(ww));
      }
      ++gi;
    }
    const double rel = std::abs(worst[0] - worst[1]) / std::max(worst[0], worst[1]);
    add(out, "diagnostics/normal-trace-stability", rel <= 0.2, rel, 0.2);
  }

  // Tangential reconstruction: exact round trip and minor bookkeeping.
  {
    Grid g(32, 32, 8);
    std::mt19937_64 rng(seed + 700);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      MatrixField m(g);
      for (std::size_t p = 0; p < m(0, 0).size(); ++p) {
        m(0, 0).data()[p] = 1.0;
        m(1, 1).data()[p] = 1.0;
      }
      // smooth row perturbations, third row stays zero
      for (int r = 0; r < 2; ++r)
        for (int cidx = 0; cidx < 3; ++cidx) {
          auto pert = random_bandlimited_scalar(g, 2, 0, rng());
          pert *= 0.25 / std::max(1.0, pert.max_abs());
          m(r, cidx) += pert;
        }
      InitialDeformation G0{std::move(m)};
      auto nc = check_noncollinearity(G0, Face::top, 0.1);
      if (!nc.pass) continue;
      FlowMap eta = random_flowmap(g, 0.3, 2, 1, rng());
      // forward: F_a = G0_{1a} d1 eta + G0_{2a} d2 eta on the face
      BoundaryVectorField d1t(g, Face::top), d2t(g, Face::top);
      for (int j = 0; j < 3; ++j) {
        d1t[j] = trace(tangential_derivative(eta.displacement[j], 1), Face::top);
        d2t[j] = trace(tangential_derivative(eta.displacement[j], 2), Face::top);
        if (j == 0)
          for (std::size_t p = 0; p < d1t[j].size(); ++p) d1t[j].data()[p] += 1.0;
        if (j == 1)
          for (std::size_t p = 0; p < d2t[j].size(); ++p) d2t[j].data()[p] += 1.0;
      }
      FaceReconstructionInput in{{BoundaryVectorField(g, Face::top),
                                  BoundaryVectorField(g, Face::top),
                                  BoundaryVectorField(g, Face::top)}};
      for (int a = 0; a < 3; ++a) {
        BoundaryScalarField g1 = trace(G0.G0(0, a), Face::top);
        BoundaryScalarField g2 = trace(G0.G0(1, a), Face::top);
        for (int j = 0; j < 3; ++j)
          for (std::size_t p = 0; p < g1.size(); ++p)
            in.F[a][j].data()[p] =
                g1.data()[p] * d1t[j].data()[p] + g2.data()[p] * d2t[j].data()[p];
      }
      auto [r1, r2] = reconstruct_tangential(G0, Face::top, in, 0.1);
      for (int j = 0; j < 3; ++j) {
        worst = std::max(worst, (r1[j] - d1t[j]).max_abs());
        worst = std::max(worst, (r2[j] - d2t[j]).max_abs());
      }
    }
    add(out, "diagnostics/reconstruction-roundtrip", worst < 1e-12, worst, 1e-12);
  }

  // Degenerate-minor handling: all minors below the floor must throw; the
  // (2,3) pair from the closed-form example must be picked and solve exactly.
  {
    Grid g(16, 16, 8);
    MatrixField m(g);  // rows (0,1,0) and (0,0,1): only the (2,3) minor is 1
    for (std::size_t p = 0; p < m(0, 0).size(); ++p) {
      m(0, 1).data()[p] = 1.0;
      m(1, 2).data()[p] = 1.0;
    }
    InitialDeformation G0{std::move(m)};
    FaceReconstructionInput in{{BoundaryVectorField(g, Face::top),
                                BoundaryVectorField(g, Face::top),
                                BoundaryVectorField(g, Face::top)}};
    auto f1 = BoundaryScalarField::sample(g, Face::top,
                                          [](double x, double) { return std::cos(2 * M_PI * x); });
    auto f2 = BoundaryScalarField::sample(g, Face::top,
                                          [](double, double y) { return std::sin(2 * M_PI * y); });
    in.F[1][0] = f1;  // row-2 equation: 1 * d1 eta = f1
    in.F[2][0] = f2;  // row-3 equation: 1 * d2 eta = f2
    auto [r1, r2] = reconstruct_tangential(G0, Face::top, in, 0.1);
    const bool exact = (r1[0] - f1).max_abs() < 1e-14 && (r2[0] - f2).max_abs() < 1e-14;
    add(out, "diagnostics/minor-selection", exact, exact ? 0.0 : 1.0, 0.0);

    MatrixField z(g);
    z(0, 0) = ScalarField(g, 1.0);
    z(1, 0) = ScalarField(g, 1.0);  // rows parallel: all minors vanish
    InitialDeformation G0z{std::move(z)};
    bool threw = false;
    try {
      reconstruct_tangential(G0z, Face::top, in, 0.1);
    } catch (const DegenerateMinor&) {
      threw = true;
    }
    add(out, "diagnostics/degenerate-minor", threw, threw ? 1.0 : 0.0, 1.0);
  }

  // Non-collinearity gain ratio stable under refinement.
  {
    double worst[2] = {0.0, 0.0};
    int gi = 0;
    for (int n3 : {16, 32}) {
      Grid g(32, 32, n3);
      auto G0 = make_G0(DeformationRecipe::canonical, g);
      for (int trial = 0; trial < 8; ++trial) {
        FlowMap eta = random_flowmap(g, 0.1, 2, 2, seed + 900 + trial);
        worst[gi] = std::max(worst[gi], noncollinear_gain_check(eta, G0, Face::top));
      }
      ++gi;
    }
    const double rel = std::abs(worst[0] - worst[1]) / std::max(worst[0], worst[1]);
    add(out, "diagnostics/noncollinear-gain-stability", rel <= 0.2, rel, 0.2);
  }

  // Good-unknown commutation identity: round-off at the rest map, decay at
  // order >= 2 under refinement for random states.
  {
    Grid g(16, 16, 16);
    RunConfig c;
    c.initial = VelocityRecipe::equilibrium;
    auto data = assemble_initial_data(make_initial_velocity(c, g),
                                      DeformationRecipe::canonical, BoundaryPartition{});
    KappaSystem sys(data.G0, make_kernel(0.15, g), SystemOptions{});
    SimState s = sys.initial_state(data);
    sys.refresh_cache(s);
    auto f = random_bandlimited_scalar(g, 2, 2, seed + 41);
    f *= 1.0 / f.max_abs();
    const double rid = good_unknown_residual(s, f, 0);
    add(out, "diagnostics/good-unknown-identity-rest", rid < 1e-8, rid, 1e-8);

    double res[2];
    int gi = 0;
    for (int n : {16, 32}) {
      Grid gg(n, n, n);
      auto kernel = make_kernel(0.15, gg);
      auto dd = assemble_initial_data(VectorField(gg), DeformationRecipe::canonical,
                                      BoundaryPartition{});
      SystemOptions frozen_opt;
      frozen_opt.enforce_apriori = false;  // synthetic frozen states
      KappaSystem sys2(dd.G0, kernel, frozen_opt);
      SimState st = sys2.initial_state(dd);
      st.eta = random_flowmap(gg, 0.01, 2, 2, seed + 43);
      st.v = random_divfree(gg, 0.02, 2, 2, seed + 44);
      sys2.refresh_cache(st);
      auto ff = random_bandlimited_scalar(gg, 2, 2, seed + 45);
      ff *= 1.0 / ff.max_abs();
      res[gi++] = good_unknown_residual(st, ff, 1);
    }
    const double order = std::log2(res[0] / res[1]);
    char note[96];
    std::snprintf(note, sizeof note, "residuals %.3e -> %.3e", res[0], res[1]);
    add(out, "diagnostics/good-unknown-order", order >= 2.0, order, 2.0, note);
  }
}

/// The full property suite.  Returns all check results; the CLI prints them
/// and fails if any did not pass.
inline std::vector<CheckResult> run_verify(std::uint64_t seed) {
  std::vector<CheckResult> out;
  verify_mollifier(out, seed);
  verify_elliptic(out);
  verify_geometry(out, seed);
  verify_stability_gate(out);
  verify_evolution(out, seed);
  verify_diagnostics(out, seed);
  return out;
}

inline int print_checks(const std::vector<CheckResult>& checks) {
  int failures = 0;
  for (const auto& c : checks) {
    std::printf("[%s] %-45s measured %.6g (threshold %.6g)%s%s\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.measured, c.threshold, c.note.empty() ? "" : "  ",
                c.note.c_str());
    if (!c.pass) ++failures;
  }
  std::printf("%d/%zu checks passed\n", int(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace elastoslab
