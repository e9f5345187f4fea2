#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "elastoslab/diagnostics.hpp"
#include "elastoslab/random_fields.hpp"
#include "elastoslab/runner.hpp"

using namespace elastoslab;

TEST_CASE("boundary smoother: trace defect shrinks at rate kappa^2") {
  Grid g(128, 128, 8);
  FlowMap eta = random_flowmap(g, 0.05, 2, 1, 3);
  std::vector<double> kappas = {0.1, 0.05, 0.025};
  std::vector<double> defects;
  for (double kap : kappas) {
    auto kernel = make_kernel(kap, g);
    FlowMap ek = smooth_flowmap(eta, kernel);
    double d = 0.0;
    for (int i = 0; i < 3; ++i)
      for (Face f : {Face::bottom, Face::top}) {
        auto gap = trace(ek.displacement[i], f) - trace(eta.displacement[i], f);
        d = std::max(d, boundary_norm(gap, 0.0));
      }
    defects.push_back(d);
  }
  // log-log slope across the halvings
  const double s1 = std::log2(defects[0] / defects[1]);
  const double s2 = std::log2(defects[1] / defects[2]);
  CHECK(s1 > 1.6);
  CHECK(s2 > 1.6);
  CHECK(s1 < 2.6);
}

TEST_CASE("boundary smoother: H4 norm bounded by the unsmoothed map") {
  // High-frequency displacement supported near the faces; the smoothed map
  // must not grow in H4.
  Grid g(32, 32, 32);
  FlowMap eta(g);
  eta.displacement[0] = ScalarField::sample(g, [](double x, double y, double z) {
    const double bump = std::exp(-20.0 * z) + std::exp(-20.0 * (1.0 - z));
    return 0.02 * std::sin(2 * M_PI * 6 * x) * std::cos(2 * M_PI * 5 * y) * bump;
  });
  // The estimate carries a constant; measure it across the sweep and
  // require it to stay O(1) uniformly (observed ~1.24).
  for (double kap : {0.2, 0.1, 0.0625}) {
    auto kernel = make_kernel(kap, g);
    FlowMap ek = smooth_flowmap(eta, kernel);
    const double c = std::sqrt(flowmap_sobolev_sq(ek, 4) / flowmap_sobolev_sq(eta, 4));
    CHECK(c < 2.0);
  }
}

TEST_CASE("regularized energy approaches the limit energy as kappa -> 0") {
  Grid g(64, 64, 16);
  RunConfig c;
  c.initial = VelocityRecipe::standard;
  c.amplitude = 0.02;
  auto data = assemble_initial_data(make_initial_velocity(c, g), DeformationRecipe::canonical,
                                    BoundaryPartition{});
  BoundaryPartition part;
  part.bottom = Regime::rt;  // turn the boundary terms on
  double prev_gap = 1e300;
  for (double kap : {0.2, 0.1, 0.05}) {
    SystemOptions opt;
    opt.partition = part;
    opt.enforce_apriori = false;  // frozen state, sign condition not needed
    KappaSystem sys(data.G0, make_kernel(kap, g), opt);
    SimState s = sys.initial_state(data);
    s.eta = random_flowmap(g, 0.01, 2, 1, 17);
    s.F = deformation_from_flowmap(s.eta, sys.G0());
    sys.refresh_cache(s);
    auto ek = energy_kappa(s, sys.G0(), part, sys.kernel());
    auto el = energy_limit(s, sys.G0(), part);
    const double gap = std::abs(ek.boundary - el.boundary);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("regression: Jacobian drift per unit time on the short standard run") {
  // Baseline frozen from the first green full-length run at 32^3, dt = 1e-3,
  // kappa = 0.1: sup |J^kappa - 1| = 3.35e-6 over T = 0.5. The short-horizon
  // bound below carries ~3x headroom on the same trajectory.
  Grid g(32, 32, 32);
  RunConfig c;
  c.initial = VelocityRecipe::standard;
  c.amplitude = 0.02;
  auto data = make_initial_data(c, g);
  KappaSystem sys(data.G0, make_kernel(0.1, g), SystemOptions{});
  SimState s = sys.initial_state(data);
  auto res = run(sys, s, 0.05, 1e-3, [](SimState&, int) {});
  REQUIRE(res.completed);
  CHECK(res.max_jk_dev <= 5e-6);
  CHECK(res.max_div_av <= 1e-6);
}

TEST_CASE("plain divergence grows at most linearly along the standard run") {
  Grid g(16, 16, 16);
  RunConfig c;
  c.initial = VelocityRecipe::standard;
  c.amplitude = 0.02;
  auto data = make_initial_data(c, g);
  KappaSystem sys(data.G0, make_kernel(0.15, g), SystemOptions{});
  SimState s = sys.initial_state(data);
  std::vector<double> div3;
  auto res = run(sys, s, 0.1, 2e-3, [&](SimState& st, int step) {
    if (step % 10 == 0) div3.push_back(sobolev_norm(divergence(st.v), 3));
  });
  REQUIRE(res.completed);
  CHECK(div3.front() < 1e-8);
  // |div v(t)|_3 <= C t at fixed resolution; C recorded here as regression.
  for (std::size_t i = 1; i < div3.size(); ++i) {
    const double t = 0.02 * double(i);
    CHECK(div3[i] <= 40.0 * t);
  }
}
