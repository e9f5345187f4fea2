// Acceptance suite: every gate except the kappa sweep (which has its own
// binary, acceptance_sweep). One pass/fail line per criterion; nonzero exit
// if any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "elastoslab/diagnostics.hpp"
#include "elastoslab/runner.hpp"
#include "elastoslab/verify.hpp"

using namespace elastoslab;

namespace {

int g_failures = 0;

void criterion(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s  --  %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

bool check_named(const std::vector<CheckResult>& checks, const std::string& name,
                 std::string& detail) {
  for (const auto& c : checks)
    if (c.name == name) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s=%.4g", name.c_str(), c.measured);
      detail += std::string(detail.empty() ? "" : ", ") + buf;
      return c.pass;
    }
  detail += " missing:" + name;
  return false;
}

RunConfig standard_config() {
  RunConfig c;
  c.n1 = c.n2 = c.n3 = 32;
  c.kappa = {0.1};
  c.T = 0.5;
  c.dt = 1e-3;
  c.initial = VelocityRecipe::standard;
  c.amplitude = 0.02;
  c.g0 = DeformationRecipe::canonical;
  return c;
}

struct RunOutcome {
  RunResult result;
  SimState final_state;
};

RunOutcome evolve_plain(const KappaSystem& sys, const InitialData& data, double T, double dt) {
  RunOutcome out;
  out.final_state = sys.initial_state(data);
  out.result = run(sys, out.final_state, T, dt, [](SimState&, int) {});
  return out;
}

// --------------------------------------------------------------------------

void criterion_1_equilibrium() {
  Grid g(32, 32, 32);
  auto data = assemble_initial_data(VectorField(g), DeformationRecipe::canonical,
                                    BoundaryPartition{});
  KappaSystem sys(data.G0, make_kernel(0.1, g), SystemOptions{});
  SimState s = sys.initial_state(data);
  const double dt = 5e-3;
  auto res = run(sys, s, 1.0, dt, [](SimState&, int) {});
  const double drift = sobolev_norm(s.eta.displacement, 4) + sobolev_norm(s.v, 4);
  char d[160];
  std::snprintf(d, sizeof d, "T=1 drift |eta-Id|_4+|v|_4 = %.3e (allowed %.1e)", drift,
                10 * kTauEll);
  criterion("criterion 1: equilibrium fixed point", res.completed && drift <= 10 * kTauEll, d);
}

void criterion_2_conserved() {
  RunConfig c = standard_config();
  Grid g(c.n1, c.n2, c.n3);
  auto data = make_initial_data(c, g);
  KappaSystem sys(data.G0, make_kernel(0.1, g), SystemOptions{});

  auto full = evolve_plain(sys, data, c.T, c.dt);
  const bool bounds = full.result.completed && full.result.max_jk_dev <= 1e-4 &&
                      full.result.max_div_av <= 1e-4 && full.result.max_f_identity <= 1e-6;

  // Convergence order of the time-integration error. The raw quantities sit
  // on a kappa-intrinsic floor (the continuous regularized flow does not
  // conserve them exactly for kappa > 0), so the order is measured on the
  // deviation from a reference trajectory at dt/8; quantities already at
  // round-off trivially satisfy the order claim and are floor-guarded.
  const double T_ord = 0.1;
  auto advance = [&](double dt) {
    SimState s = sys.initial_state(data);
    const int n = int(std::llround(T_ord / dt));
    for (int i = 0; i < n; ++i) s = sys.step(s, dt);
    sys.refresh_cache(s);
    return s;
  };
  SimState ref = advance(5e-4);
  ScalarField dav_ref = a_divergence(ref.cache.A_kappa, ref.v);
  double dj[2], dd[2], df[2];
  int idx = 0;
  for (double dt : {4e-3, 2e-3}) {
    SimState s = advance(dt);
    ScalarField jd = s.cache.J_kappa;
    jd -= ref.cache.J_kappa;
    dj[idx] = jd.max_abs();
    ScalarField dav = a_divergence(s.cache.A_kappa, s.v);
    dav -= dav_ref;
    dd[idx] = l2_norm(dav);
    MatrixField rec = deformation_from_flowmap(s.eta, sys.G0());
    rec -= s.F;
    df[idx] = l2_norm(rec);
    ++idx;
  }
  const double floor = 1e-13;
  auto order_ok = [&](const double* v) {
    if (v[0] <= floor && v[1] <= floor) return true;  // structurally exact
    return v[0] / v[1] >= 8.0;                        // 2^3 for order >= 3
  };
  const bool orders = order_ok(dj) && order_ok(dd) && order_ok(df);
  char d[300];
  std::snprintf(d, sizeof d,
                "sup|J-1|=%.2e sup|div_A v|=%.2e sup|FG0-F|=%.2e; halving ratios J=%.1f "
                "div=%.1f F=(%.1e,%.1e)",
                full.result.max_jk_dev, full.result.max_div_av, full.result.max_f_identity,
                dj[0] / dj[1], dd[0] / dd[1], df[0], df[1]);
  criterion("criterion 2: conserved-quantity suite", bounds && orders, d);
}

void criterion_7_good_unknown(std::uint64_t seed) {
  double worst32 = 0.0, worst_order = 1e300;
  for (int trial = 0; trial < 10; ++trial) {
    double res[2];
    int gi = 0;
    for (int n : {32, 64}) {
      Grid g(n, n, n);
      auto data = assemble_initial_data(VectorField(g), DeformationRecipe::canonical,
                                        BoundaryPartition{});
      SystemOptions opt;
      opt.enforce_apriori = false;  // frozen synthetic states
      KappaSystem sys(data.G0, make_kernel(0.1, g), opt);
      SimState s = sys.initial_state(data);
      s.eta = random_flowmap(g, 0.02, 2, 2, seed + 1000 + 7 * trial);
      s.v = random_divfree(g, 0.02, 2, 2, seed + 2000 + 7 * trial);
      sys.refresh_cache(s);
      ScalarField f = random_bandlimited_scalar(g, 2, 2, seed + 3000 + 7 * trial);
      f *= 1.0 / sobolev_norm(f, 4);  // unit H^4 normalization
      res[gi++] = good_unknown_residual(s, f, trial % 3);
    }
    worst32 = std::max(worst32, res[0]);
    worst_order = std::min(worst_order, std::log2(res[0] / res[1]));
  }
  char d[160];
  std::snprintf(d, sizeof d, "max residual at 32^3 = %.3e (<= 1e-3), min order = %.2f (>= 2)",
                worst32, worst_order);
  criterion("criterion 7: commutation identity", worst32 <= 1e-3 && worst_order >= 2.0, d);
}

void criterion_11_determinism_mutation(std::uint64_t seed) {
  namespace fs = std::filesystem;
  // Determinism: identical config+seed reproduce energy.csv numerically.
  RunConfig c = standard_config();
  c.T = 0.02;
  c.snapshot_every = 5;
  c.seed = seed;
  const std::string base = fs::temp_directory_path() / "eslb_acceptance";
  fs::remove_all(base);
  c.out = base + "/a";
  cmd_run(c);
  c.out = base + "/b";
  cmd_run(c);
  auto ra = read_csv_rows(base + "/a/kappa_0.1/energy.csv");
  auto rb = read_csv_rows(base + "/b/kappa_0.1/energy.csv");
  bool identical = ra.size() == rb.size() && !ra.empty();
  for (std::size_t i = 0; identical && i < ra.size(); ++i) {
    identical = ra[i].size() == rb[i].size();
    for (std::size_t j = 0; identical && j < ra[i].size(); ++j)
      identical = ra[i][j] == rb[i][j];
  }
  fs::remove_all(base);

  // Mutation smoke: a sign-flipped elastic force must fail the criterion-1
  // and criterion-2 style checks.
  Grid g(32, 32, 32);
  SystemOptions bad;
  bad.elastic_force_scale = -1.0;

  // criterion-1 style: equilibrium plus a round-off-scale seed. The healthy
  // system keeps the seed oscillating below the drift allowance; the flipped
  // force amplifies it exponentially.
  auto eq = assemble_initial_data(VectorField(g), DeformationRecipe::canonical,
                                  BoundaryPartition{});
  auto seeded_drift = [&](const SystemOptions& opt) {
    KappaSystem sys(eq.G0, make_kernel(0.1, g), opt);
    SimState s = sys.initial_state(eq);
    s.eta.displacement[0] = ScalarField::sample(g, [](double x, double y, double) {
      return 1e-14 * std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y);
    });
    s.F = deformation_from_flowmap(s.eta, sys.G0());
    auto res = run(sys, s, 1.0, 5e-3, [](SimState&, int) {});
    if (!res.completed) return 1e300;
    return sobolev_norm(s.eta.displacement, 4) + sobolev_norm(s.v, 4);
  };
  const double healthy = seeded_drift(SystemOptions{});
  const double mutated = seeded_drift(bad);
  const bool c1_detects = healthy <= 10 * kTauEll && mutated > 10 * kTauEll;

  // criterion-2 style: the standard perturbed run must leave the monitored
  // regime (or blow the conservation bounds) under the flipped force.
  RunConfig sc = standard_config();
  auto data = make_initial_data(sc, g);
  KappaSystem msys(data.G0, make_kernel(0.1, g), bad);
  auto mres = evolve_plain(msys, data, sc.T, sc.dt);
  const bool c2_detects = !mres.result.completed || mres.result.max_jk_dev > 1e-4 ||
                          mres.result.max_div_av > 1e-4;

  char d[240];
  std::snprintf(d, sizeof d,
                "csv identical=%d; seeded drift healthy %.2e vs mutated %.2e; mutated standard "
                "run %s",
                identical ? 1 : 0, healthy, mutated,
                mres.result.apriori_violation ? "left the regime" : "completed");
  criterion("criterion 11: determinism and mutation", identical && c1_detects && c2_detects, d);
}

}  // namespace

int main() {
  const std::uint64_t seed = 1;
  elliptic_stats() = EllipticStats{};

  criterion_1_equilibrium();
  criterion_2_conserved();

  // Property-suite-backed criteria (4, 5, 6, 8, 9, 10). The suite re-runs
  // the mollifier sweeps, elliptic manufactured solutions, reconstruction
  // machinery, Hodge/normal-trace studies and the stability gate.
  auto checks = run_verify(seed);
  const double max_rel = elliptic_stats().max_rel_residual;
  {
    std::string d;
    bool ok = check_named(checks, "evolve/psi-smallness", d);
    criterion("criterion 4: modification-term smallness", ok, d);
  }
  {
    std::string d;
    bool ok = check_named(checks, "mollifier/operator-norm", d);
    for (const char* n : {"mollifier/loss-slope-s0.000000", "mollifier/loss-slope-s0.500000",
                          "mollifier/loss-slope-s1.000000", "mollifier/commutator-L2",
                          "mollifier/commutator-dbar-L2", "mollifier/commutator-dbar-H12"})
      ok = check_named(checks, n, d) && ok;
    criterion("criterion 5: mollifier lemma suite", ok, d);
  }
  {
    std::string d;
    bool ok = true;
    for (const char* n : {"elliptic/constant-order", "elliptic/constant-error-64",
                          "elliptic/flowmap-order", "elliptic/flowmap-error-64",
                          "elliptic/flowmap-iterations"})
      ok = check_named(checks, n, d) && ok;
    char buf[96];
    std::snprintf(buf, sizeof buf, ", max rel residual over criteria 1-4 solves %.2e", max_rel);
    d += buf;
    ok = ok && max_rel <= kTauEll;
    criterion("criterion 6: elliptic manufactured solutions", ok, d);
  }
  criterion_7_good_unknown(seed);
  {
    std::string d;
    bool ok = true;
    for (const char* n :
         {"diagnostics/reconstruction-roundtrip", "diagnostics/minor-selection",
          "diagnostics/degenerate-minor", "diagnostics/noncollinear-gain-stability"})
      ok = check_named(checks, n, d) && ok;
    criterion("criterion 8: tangential reconstruction machinery", ok, d);
  }
  {
    std::string d;
    bool ok = true;
    for (const char* n : {"diagnostics/hodge-s1", "diagnostics/hodge-s2", "diagnostics/hodge-s3",
                          "diagnostics/hodge-s4", "diagnostics/normal-trace-analytic",
                          "diagnostics/normal-trace-stability"})
      ok = check_named(checks, n, d) && ok;
    criterion("criterion 9: Hodge and normal-trace constants", ok, d);
  }
  {
    std::string d;
    bool ok = true;
    for (const char* n :
         {"stability/nc-only-equilibrium", "stability/mixed-gate", "stability/rt-rejection"})
      ok = check_named(checks, n, d) && ok;
    criterion("criterion 10: mixed-stability gate", ok, d);
  }
  criterion_11_determinism_mutation(seed);

  std::printf("criterion 3 (kappa uniformity) runs in acceptance_sweep\n");
  if (g_failures == 0) {
    std::printf("acceptance core: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance core: %d criteria FAILED\n", g_failures);
  return 1;
}
