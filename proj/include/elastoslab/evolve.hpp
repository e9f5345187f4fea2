#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elastoslab/elliptic.hpp"
#include "elastoslab/geometry.hpp"
#include "elastoslab/initial_data.hpp"
#include "elastoslab/mollifier.hpp"

namespace elastoslab {

inline constexpr double kJkThreshold = 0.125;  // |J^kappa - 1| ceiling
inline constexpr double kAkThreshold = 0.125;  // |A^kappa - I| ceiling

struct AprioriStatus {
  double jk_dev = 0.0;
  double ak_dev = 0.0;
  double rt_margin = std::numeric_limits<double>::infinity();  // min over RT faces
  bool ok = true;
};

/// Everything the right side derives from (t, eta, v) for one kappa.
/// Rebuilt atomically per evaluation.
struct KappaCache {
  bool fresh = false;
  FlowMap eta_kappa;
  ScalarField J_kappa;
  MatrixField A_kappa;
  MatrixField E;
  VectorField psi;             // modification term
  VectorField deta_kappa_dt;   // smoothed time derivative of the map
  MatrixField dA_kappa_dt;
  ScalarField q;
  ScalarField pressure_rhs;    // forcing fed to -div(E grad q) = rhs
  int pressure_iterations = 0;
  AprioriStatus apriori;
};

struct SimState {
  double t = 0.0;
  FlowMap eta;
  VectorField v;
  double kappa = 0.0;
  MatrixField F;     // co-evolved deformation tensor (oracle for F = grad(eta) G0)
  bool has_F = false;
  KappaCache cache;
};

/// Boundary smoother: solves -Lap(m) = -Lap(eta), m = Lambda^2 eta on the
/// faces. Implemented as eta plus the discrete-harmonic extension of the
/// mollification defect of the boundary trace, which is the same solution.
inline FlowMap smooth_flowmap(const FlowMap& eta, const MollifierKernel& kernel) {
  FlowMap out = eta;
  for (int i = 0; i < 3; ++i) {
    BoundaryScalarField db = trace(eta.displacement[i], Face::bottom);
    BoundaryScalarField dt = trace(eta.displacement[i], Face::top);
    BoundaryScalarField gb = mollify_twice(db, kernel);
    BoundaryScalarField gt = mollify_twice(dt, kernel);
    gb -= db;
    gt -= dt;
    out.displacement[i] += harmonic_extension(gb, gt);
  }
  return out;
}

/// Same smoothing applied to a velocity-like field (zero identity part).
inline VectorField smooth_velocity(const VectorField& w, const MollifierKernel& kernel) {
  VectorField out = w;
  for (int i = 0; i < 3; ++i) {
    BoundaryScalarField db = trace(w[i], Face::bottom);
    BoundaryScalarField dt = trace(w[i], Face::top);
    BoundaryScalarField gb = mollify_twice(db, kernel);
    BoundaryScalarField gt = mollify_twice(dt, kernel);
    gb -= db;
    gt -= dt;
    out[i] += harmonic_extension(gb, gt);
  }
  return out;
}

/// Modification term psi: on each face
///   psi_i = invLap P( Lap_* eta_j A_{j a} d_a Lambda^2 v_i
///                    - Lap_* Lambda^2 eta_j A_{j a} d_a v_i ),  a = 1,2,
/// harmonic inside. A is the smoothed-map cofactor.
inline VectorField modification_term(const FlowMap& eta, const VectorField& v,
                                     const MatrixField& A_kappa, const MollifierKernel& kernel) {
  const Grid& g = eta.grid();
  BoundaryVectorField face_data[2] = {BoundaryVectorField(g, Face::bottom),
                                      BoundaryVectorField(g, Face::top)};
  for (Face f : {Face::bottom, Face::top}) {
    BoundaryScalarField lap_eta[3], lap_eta_m[3], a_tr[3][2];
    for (int j = 0; j < 3; ++j) {
      BoundaryScalarField dj = trace(eta.displacement[j], f);
      lap_eta[j] = boundary_laplacian(dj);                        // Lap_* of x_j is 0
      lap_eta_m[j] = boundary_laplacian(mollify_twice(dj, kernel));
      for (int a = 0; a < 2; ++a) a_tr[j][a] = trace(A_kappa(j, a), f);
    }
    for (int i = 0; i < 3; ++i) {
      BoundaryScalarField vi = trace(v[i], f);
      BoundaryScalarField dv[2] = {boundary_derivative(vi, 1), boundary_derivative(vi, 2)};
      BoundaryScalarField vm = mollify_twice(vi, kernel);
      BoundaryScalarField dvm[2] = {boundary_derivative(vm, 1), boundary_derivative(vm, 2)};
      BoundaryScalarField bc(g, f);
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 2; ++a)
          for (std::size_t p = 0; p < bc.size(); ++p)
            bc.data()[p] += a_tr[j][a].data()[p] * (lap_eta[j].data()[p] * dvm[a].data()[p] -
                                                    lap_eta_m[j].data()[p] * dv[a].data()[p]);
      face_data[int(f)][i] = surface_inverse_laplacian(mean_zero_project(bc));
    }
  }
  return harmonic_extension(face_data[0], face_data[1]);
}

/// d/dt of the boundary smoother: solve -Lap(w) = -Lap(v + psi) with trace
/// Lambda^2 (v + psi); same structure as the smoother itself.
inline VectorField smoothed_time_derivative(const VectorField& v, const VectorField& psi,
                                            const MollifierKernel& kernel) {
  VectorField w = v;
  w += psi;
  return smooth_velocity(w, kernel);
}

struct SystemOptions {
  BoundaryPartition partition;
  double cfl_factor = 0.3;
  bool track_deformation = true;
  bool enforce_apriori = true;
  // Scales the elastic force in the momentum equation. 1.0 is the physical
  // system; the sensitivity/mutation smoke tests set -1.0.
  double elastic_force_scale = 1.0;
};

struct StateDerivative {
  VectorField deta;
  VectorField dv;
  MatrixField dF;
};

/// The kappa-regularized dynamical system on (eta, v).
class KappaSystem {
 public:
  KappaSystem(InitialDeformation G0, MollifierKernel kernel, SystemOptions opt)
      : G0_(std::move(G0)), kernel_(std::move(kernel)), opt_(opt),
        stress_factor_(stress_factor(G0_)) {}

  const InitialDeformation& G0() const { return G0_; }
  const MollifierKernel& kernel() const { return kernel_; }
  const SystemOptions& options() const { return opt_; }

  SimState initial_state(const InitialData& data) const {
    SimState s;
    s.eta = FlowMap::identity(data.v0.grid());
    s.v = data.v0;
    s.kappa = kernel_.kappa();
    if (opt_.track_deformation) {
      s.F = G0_.G0;
      s.has_F = true;
    }
    return s;
  }

  /// Rebuilds every cached quantity from (eta, v): smoothed map, cofactors,
  /// modification term, smoothed map velocity, pressure right side and the
  /// pressure itself. Throws AprioriViolation when the monitored regime is
  /// left (unless disabled).
  void refresh_cache(SimState& s) const {
    KappaCache& c = s.cache;
    c.fresh = false;
    c.eta_kappa = smooth_flowmap(s.eta, kernel_);
    MatrixField Fk = deformation_gradient(c.eta_kappa);
    auto jc = jacobian_and_cofactor(Fk);
    c.J_kappa = std::move(jc.J);
    c.A_kappa = std::move(jc.A);

    AprioriStatus st;
    for (std::size_t p = 0; p < c.J_kappa.size(); ++p)
      st.jk_dev = std::max(st.jk_dev, std::abs(c.J_kappa.data()[p] - 1.0));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double target = i == j ? 1.0 : 0.0;
        const double* a = c.A_kappa(i, j).data();
        for (std::size_t p = 0; p < c.J_kappa.size(); ++p)
          st.ak_dev = std::max(st.ak_dev, std::abs(a[p] - target));
      }

    c.psi = modification_term(s.eta, s.v, c.A_kappa, kernel_);
    c.deta_kappa_dt = smoothed_time_derivative(s.v, c.psi, kernel_);

    // dA/dt = -A (grad deta_kappa_dt) A in the cofactor-derivative sense,
    // factored through T(i,m) = A_il W_ml.
    const std::size_t nn = c.J_kappa.size();
    MatrixField W = gradient(c.deta_kappa_dt);  // W(m,l) = d_l w_m
    MatrixField T(s.eta.grid());
    for (int i = 0; i < 3; ++i)
      for (int m = 0; m < 3; ++m)
        for (int l = 0; l < 3; ++l)
          fma_acc(T(i, m).data(), c.A_kappa(i, l).data(), W(m, l).data(), nn);
    c.dA_kappa_dt = MatrixField(s.eta.grid());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        for (int m = 0; m < 3; ++m)
          fma_acc(c.dA_kappa_dt(i, j).data(), T(i, m).data(), c.A_kappa(m, j).data(), nn);
        c.dA_kappa_dt(i, j) *= -1.0;
      }

    // E = J A^T A
    c.E = MatrixField(s.eta.grid());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double* o = c.E(i, j).data();
        for (int m = 0; m < 3; ++m)
          fma_acc(o, c.A_kappa(m, i).data(), c.A_kappa(m, j).data(), nn);
        for (std::size_t p = 0; p < nn; ++p) o[p] *= c.J_kappa.data()[p];
      }

    c.pressure_rhs = pressure_forcing(s, c);
    auto sol = solve_pressure(c.E, c.pressure_rhs, c.q.size() ? &c.q : nullptr);
    c.q = std::move(sol.field);
    c.pressure_iterations = sol.iterations;

    if (opt_.partition.has_rt()) {
      double rt = std::numeric_limits<double>::infinity();
      ScalarField dq = vertical_derivative(c.q, 1);
      for (Face f : {Face::bottom, Face::top}) {
        if (opt_.partition.of(f) != Regime::rt) continue;
        BoundaryScalarField tr = trace(dq, f);
        const double sign = face_normal_sign(f);
        for (std::size_t p = 0; p < tr.size(); ++p) rt = std::min(rt, -sign * tr.data()[p]);
      }
      st.rt_margin = rt;
    }
    st.ok = st.jk_dev <= kJkThreshold && st.ak_dev <= kAkThreshold &&
            (!opt_.partition.has_rt() || st.rt_margin >= 0.5 * opt_.partition.lambda);
    c.apriori = st;
    if (opt_.enforce_apriori && !st.ok)
      throw AprioriViolation("left the monitored regime at t = " + std::to_string(s.t) +
                                 ": |J-1| = " + std::to_string(st.jk_dev) +
                                 ", |A-I| = " + std::to_string(st.ak_dev) +
                                 ", rt margin = " + std::to_string(st.rt_margin),
                             st.jk_dev, st.ak_dev, st.rt_margin);
    c.fresh = true;
  }

  AprioriStatus monitor_apriori(const SimState& s) const {
    if (!s.cache.fresh) throw Error("monitor_apriori needs a fresh cache");
    return s.cache.apriori;
  }

  /// Time derivatives of the full state; rebuilds the cache.
  StateDerivative right_side(SimState& s) const {
    refresh_cache(s);
    StateDerivative d;
    d.deta = s.v;
    d.deta += s.cache.psi;

    d.dv = elastic_force(G0_, s.eta, &stress_factor_);
    if (opt_.elastic_force_scale != 1.0) d.dv *= opt_.elastic_force_scale;
    d.dv.axpy(-1.0, a_gradient(s.cache.A_kappa, s.cache.q));

    if (s.has_F) {
      // dF = (grad_A w) F with the unsmoothed map's cofactor, w = d(eta)/dt;
      // keeps F = grad(eta) G0 an exact invariant of the semi-discrete flow.
      const std::size_t nn = s.v[0].size();
      auto jc = jacobian_and_cofactor(deformation_gradient(s.eta));
      MatrixField W = gradient(d.deta);  // W(i,l) = d_l w_i
      MatrixField U(s.eta.grid());      // U(i,k) = W_il A_kl
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            fma_acc(U(i, k).data(), W(i, l).data(), jc.A(k, l).data(), nn);
      d.dF = MatrixField(s.eta.grid());
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k)
            fma_acc(d.dF(i, j).data(), U(i, k).data(), s.F(k, j).data(), nn);
    }
    return d;
  }

  double cfl_dt(const SimState& s) const {
    const Grid& g = s.eta.grid();
    const double h = std::min({g.h1, g.h2, g.h3});
    const double speed = s.v.max_abs() + G0_.G0.max_abs() + 1e-12;
    return opt_.cfl_factor * h / speed;
  }

  /// Classic 4-stage Runge-Kutta step; every stage re-solves the elliptic
  /// subproblems. AprioriViolation and CFL breaches surface as StepRejected.
  SimState step(const SimState& s, double dt) const {
    if (dt > cfl_dt(s) * (1.0 + 1e-12))
      throw StepRejected("dt " + std::to_string(dt) + " above the CFL bound " +
                         std::to_string(cfl_dt(s)));
    try {
      SimState work = s;
      StateDerivative k1 = right_side(work);
      SimState stage = advanced(s, k1, 0.5 * dt, work.cache.q);
      StateDerivative k2 = right_side(stage);
      stage = advanced(s, k2, 0.5 * dt, stage.cache.q);
      StateDerivative k3 = right_side(stage);
      stage = advanced(s, k3, dt, stage.cache.q);
      StateDerivative k4 = right_side(stage);

      SimState out = s;
      out.t = s.t + dt;
      out.cache = std::move(stage.cache);  // warm start + fresh-enough diagnostics
      out.cache.fresh = false;
      auto accumulate = [&](auto& target, const auto& a, const auto& b, const auto& c,
                            const auto& e) {
        target.axpy(dt / 6.0, a);
        target.axpy(dt / 3.0, b);
        target.axpy(dt / 3.0, c);
        target.axpy(dt / 6.0, e);
      };
      accumulate(out.eta.displacement, k1.deta, k2.deta, k3.deta, k4.deta);
      accumulate(out.v, k1.dv, k2.dv, k3.dv, k4.dv);
      if (s.has_F) accumulate(out.F, k1.dF, k2.dF, k3.dF, k4.dF);
      return out;
    } catch (const AprioriViolation& v) {
      throw StepRejected(std::string("stage rejected: ") + v.what());
    }
  }

 private:
  SimState advanced(const SimState& base, const StateDerivative& k, double dt,
                    const ScalarField& q_guess) const {
    SimState s;
    s.t = base.t + dt;
    s.eta = base.eta;
    s.eta.displacement.axpy(dt, k.deta);
    s.v = base.v;
    s.v.axpy(dt, k.dv);
    s.kappa = base.kappa;
    s.has_F = base.has_F;
    if (base.has_F) {
      s.F = base.F;
      s.F.axpy(dt, k.dF);
    }
    s.cache.q = q_guess;  // warm start only
    return s;
  }

  /// Forcing of -div(E grad q) = G chosen so that d/dt (J^k div_{A^k} v) = 0
  /// along the semi-discrete flow:
  ///   G = -( J dA/dt : grad v + [J A_ij d_j, G0^T.grad] (G0^T.grad eta)
  ///          + G0^T.grad (J A_ij d_j (G0^T.grad eta)_i) ).
  ScalarField pressure_forcing(const SimState& s, const KappaCache& c) const {
    const Grid& g = s.eta.grid();
    const std::size_t nn = c.J_kappa.size();
    MatrixField dv = gradient(s.v);
    ScalarField G(g);
    double* out = G.data();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double* at = c.dA_kappa_dt(i, j).data();
        const double* dvp = dv(i, j).data();
        const double* jj = c.J_kappa.data();
        for (std::size_t p = 0; p < nn; ++p) out[p] += jj[p] * at[p] * dvp[p];
      }

    MatrixField X = directional(G0_, s.eta);  // X(l,i) = (G0^T grad eta)_{li}
    // W_i = G0_{ml} d_m X_{li}: the elastic force written as a first-order
    // directional derivative of X. The decomposition into a commutator plus
    // a second directional term cancels exactly at the discrete level
    // (identical operators on both pieces), leaving J A_ij d_j W_i.
    VectorField W(g);
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i) {
        VectorField dx = gradient(X(l, i));
        for (int m = 0; m < 3; ++m) fma_acc(W[i].data(), G0_.G0(m, l).data(), dx[m].data(), nn);
      }
    ScalarField term1 = a_divergence(c.A_kappa, W);
    for (std::size_t p = 0; p < nn; ++p) term1.data()[p] *= c.J_kappa.data()[p];
    // The sign flip below makes the pressure enforce the divergence
    // constraint instead of doubling its drift.
    G += term1;
    G *= -1.0;
    return G;
  }

  InitialDeformation G0_;
  MollifierKernel kernel_;
  SystemOptions opt_;
  MatrixField stress_factor_;
};

struct TrajectoryPoint {
  double t = 0.0;
  int step_index = 0;
};

struct RunResult {
  bool completed = false;
  bool apriori_violation = false;
  std::string violation_message;
  double t_end = 0.0;
  int steps_taken = 0;
  // Running maxima of the cheap per-step residuals.
  double max_jk_dev = 0.0;
  double max_div_av = 0.0;
  double max_f_identity = 0.0;
};

/// Fixed-step loop to time T. The observer runs on the initial state and
/// after every accepted step (cache fresh at each call); a monitor breach
/// truncates the run and is reported as data, not failure.
template <class Observer>
RunResult run(const KappaSystem& sys, SimState& state, double T, double dt, Observer&& observe) {
  RunResult r;
  auto track = [&](SimState& s) {
    if (!s.cache.fresh) sys.refresh_cache(s);
    r.max_jk_dev = std::max(r.max_jk_dev, s.cache.apriori.jk_dev);
    ScalarField div_av = a_divergence(s.cache.A_kappa, s.v);
    r.max_div_av = std::max(r.max_div_av, l2_norm(div_av));
    if (s.has_F) {
      MatrixField rec = deformation_from_flowmap(s.eta, sys.G0());
      rec -= s.F;
      r.max_f_identity = std::max(r.max_f_identity, l2_norm(rec));
    }
  };
  try {
    track(state);
    observe(state, 0);
    const int n_steps = int(std::llround(T / dt));
    for (int i = 1; i <= n_steps; ++i) {
      state = sys.step(state, dt);
      track(state);
      observe(state, i);
    }
    r.completed = true;
  } catch (const StepRejected& e) {
    r.apriori_violation = true;
    r.violation_message = e.what();
  } catch (const AprioriViolation& e) {
    r.apriori_violation = true;
    r.violation_message = e.what();
  }
  r.t_end = state.t;
  r.steps_taken = int(std::llround(state.t / dt));
  return r;
}

}  // namespace elastoslab
