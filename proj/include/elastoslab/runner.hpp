#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "elastoslab/diagnostics.hpp"
#include "elastoslab/io.hpp"
#include "elastoslab/random_fields.hpp"

namespace elastoslab {

inline constexpr const char* kVersion = "0.1.0";

inline VectorField make_initial_velocity(const RunConfig& c, const Grid& g) {
  switch (c.initial) {
    case VelocityRecipe::equilibrium:
      return VectorField(g);
    case VelocityRecipe::standard:
      // curl of a three-component potential: two transverse shear waves on
      // perpendicular horizontal modes plus a vertical-velocity cell. Taking
      // the discrete curl makes the discrete divergence round-off at every
      // node (mixed partials commute exactly); the vertical profiles keep
      // the traces on both faces quiet. Genuinely three-dimensional and
      // pressure-active.
      {
        const double pi = M_PI;
        VectorField psi(g);
        psi[0] = ScalarField::sample(g, [&](double x, double, double z) {
          return -0.4 * std::cos(2 * pi * x) * std::cos(2 * pi * z) / (2 * pi);
        });
        psi[1] = ScalarField::sample(g, [&](double x, double, double z) {
          const double s = std::sin(pi * z);
          return 0.3 * std::sin(2 * pi * x) * s * s / (2 * pi);
        });
        psi[2] = ScalarField::sample(g, [&](double, double y, double z) {
          return -std::cos(2 * pi * y) * std::sin(pi * z) / (2 * pi);
        });
        VectorField v = curl(psi);
        v *= c.amplitude / v.max_abs();
        return v;
      }
    case VelocityRecipe::mixed_rt:
      // Divergence-free with rhs = 2 |d1 v1|^2 >= 0 in the initial pressure
      // problem, so both faces acquire a positive sign-condition margin.
      {
        VectorField v(g);
        v[0] = ScalarField::sample(
            g, [&](double x, double, double) { return c.amplitude * std::sin(2.0 * M_PI * x); });
        v[2] = ScalarField::sample(g, [&](double x, double, double z) {
          return -2.0 * M_PI * c.amplitude * z * std::cos(2.0 * M_PI * x);
        });
        return v;
      }
    case VelocityRecipe::random:
    default:
      return random_divfree(g, c.amplitude, 2, 2, c.seed);
  }
}

inline InitialData make_initial_data(const RunConfig& c, const Grid& g) {
  return assemble_initial_data(make_initial_velocity(c, g), c.g0, c.partition(),
                               c.g0_amplitude);
}

inline std::string kappa_dir_name(double kappa) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "kappa_%g", kappa);
  return buf;
}

inline double effective_dt(const RunConfig& c, const KappaSystem& sys, const SimState& s) {
  if (c.dt > 0.0) return c.dt;
  const double cfl = sys.cfl_dt(s);
  const int n = std::max(1, int(std::ceil(c.T / cfl)));
  return c.T / n;
}

/// One run for one kappa: writes energy.csv, manifest.json and field
/// snapshots under dir. A monitor violation is recorded data (the manifest
/// carries the flag), not a failure.
inline RunManifest run_one_kappa(const RunConfig& c, double kappa, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  elliptic_stats() = EllipticStats{};

  Grid g(c.n1, c.n2, c.n3);
  auto kernel = make_kernel(kappa, g);
  InitialData data = make_initial_data(c, g);
  SystemOptions opt;
  opt.partition = c.partition();
  opt.cfl_factor = c.cfl_factor;
  opt.track_deformation = c.track_deformation;
  KappaSystem sys(data.G0, std::move(kernel), opt);
  SimState state = sys.initial_state(data);

  std::vector<EnergyRecord> records;
  double curl_baseline = 0.0;
  const int cadence = std::max(1, c.snapshot_every);
  auto observer = [&](SimState& s, int step_index) {
    if (step_index % cadence != 0 && s.t < c.T) return;
    EnergyRecord r = make_energy_record(sys, s, curl_baseline);
    if (records.empty()) {
      curl_baseline = r.curl_v3 + r.curl_geta3;
      r.curl_growth = 0.0;
    }
    records.push_back(r);
    if (c.snapshot_every > 0) {
      Snapshot snap;
      snap.t = s.t;
      snap.grid = s.eta.grid();
      for (int i = 0; i < 3; ++i)
        snap.fields.emplace_back("eta_displacement_" + std::to_string(i + 1),
                                 s.eta.displacement[i]);
      for (int i = 0; i < 3; ++i)
        snap.fields.emplace_back("v_" + std::to_string(i + 1), s.v[i]);
      snap.fields.emplace_back("q", s.cache.q);
      char name[64];
      std::snprintf(name, sizeof name, "snap_%06d.bin", step_index);
      write_snapshot(dir + "/" + name, snap);
    }
  };

  const double dt = effective_dt(c, sys, state);
  RunResult res = run(sys, state, c.T, dt, observer);

  write_energy_csv(dir + "/energy.csv", records);
  RunManifest m;
  m.config = c;
  m.kappa = kappa;
  m.seed = c.seed;
  m.version = kVersion;
  m.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.completed = res.completed;
  m.apriori_violation = res.apriori_violation;
  m.violation_message = res.violation_message;
  m.t_end = res.t_end;
  m.steps_taken = res.steps_taken;
  m.elliptic_solves = elliptic_stats().solves;
  m.max_rel_residual = elliptic_stats().max_rel_residual;
  write_manifest(dir + "/manifest.json", m);
  return m;
}

/// `run` verb: one subdirectory per kappa, sweep members in parallel workers.
inline int cmd_run(const RunConfig& c) {
  namespace fs = std::filesystem;
  fs::create_directories(c.out);
  std::vector<std::string> dirs;
  for (double k : c.kappa) dirs.push_back(c.out + "/" + kappa_dir_name(k));

  std::vector<std::exception_ptr> errors(c.kappa.size());
  const int jobs = std::max(1, c.jobs);
  std::vector<std::thread> pool;
  std::size_t next = 0;
  std::mutex mtx;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (next >= c.kappa.size()) return;
        i = next++;
      }
      try {
        RunManifest m = run_one_kappa(c, c.kappa[i], dirs[i]);
        std::lock_guard<std::mutex> lock(mtx);
        std::printf("kappa=%g: %s, t_end=%g, steps=%d, wall=%.1fs\n", c.kappa[i],
                    m.apriori_violation ? "monitor violation" : "completed", m.t_end,
                    m.steps_taken, m.wall_time_s);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "kappa=%g failed: %s\n", c.kappa[i], e.what());
        return 1;
      }
    }
  return 0;
}

// ---------------------------------------------------------------------------
// Sweep report

struct SweepEntry {
  double kappa = 0.0;
  double sup_e_kappa = 0.0;
  double e_kappa_0 = 0.0;   // E^kappa at t = 0
  double t_run = 0.0;
  bool completed = false;
  bool violation = false;
  double growth() const { return e_kappa_0 > 0 ? sup_e_kappa / e_kappa_0 : 0.0; }
};

struct SweepReport {
  std::vector<SweepEntry> entries;       // sorted by descending kappa
  std::vector<double> pairwise_gap;      // sup_t |eta_i - eta_{i+1}|_2
  bool uniform = false;
  double band_ratio = 0.0;               // max/min of sup E^kappa
  bool gaps_monotone = false;
};

inline SweepReport sweep_report(const std::vector<std::string>& run_dirs) {
  if (run_dirs.size() < 2) throw MissingRun("sweep report needs at least two runs");
  SweepReport rep;
  std::vector<RunManifest> manifests;
  for (const auto& dir : run_dirs) {
    if (!std::filesystem::exists(dir + "/manifest.json"))
      throw MissingRun("no manifest in " + dir);
    manifests.push_back(read_manifest(dir + "/manifest.json"));
    auto rows = read_csv_rows(dir + "/energy.csv");
    SweepEntry e;
    e.kappa = manifests.back().kappa;
    e.t_run = manifests.back().t_end;
    e.completed = manifests.back().completed;
    e.violation = manifests.back().apriori_violation;
    for (const auto& r : rows) e.sup_e_kappa = std::max(e.sup_e_kappa, r[1]);
    if (!rows.empty()) e.e_kappa_0 = rows.front()[1];
    rep.entries.push_back(e);
  }

  // Pairwise trajectory gaps from the displacement snapshots.
  for (std::size_t i = 0; i + 1 < run_dirs.size(); ++i) {
    double gap = 0.0;
    for (const auto& entry : std::filesystem::directory_iterator(run_dirs[i])) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("snap_", 0) != 0) continue;
      const std::string other = run_dirs[i + 1] + "/" + name;
      if (!std::filesystem::exists(other)) continue;
      Snapshot a = read_snapshot(entry.path().string());
      Snapshot b = read_snapshot(other);
      VectorField d(a.grid);
      for (int comp = 0; comp < 3; ++comp) {
        d[comp] = a.fields[comp].second;
        d[comp] -= b.fields[comp].second;
      }
      gap = std::max(gap, sobolev_norm(d, 2));
    }
    rep.pairwise_gap.push_back(gap);
  }

  double emax = 0.0, emin = 1e300, tmax = 0.0, tmin = 1e300;
  bool all_completed = true;
  for (const auto& e : rep.entries) {
    emax = std::max(emax, e.sup_e_kappa);
    emin = std::min(emin, e.sup_e_kappa);
    tmax = std::max(tmax, e.t_run);
    tmin = std::min(tmin, e.t_run);
    all_completed = all_completed && e.completed && !e.violation;
  }
  rep.band_ratio = emax / std::max(emin, 1e-300);
  rep.gaps_monotone = true;
  for (std::size_t i = 0; i + 1 < rep.pairwise_gap.size(); ++i)
    rep.gaps_monotone = rep.gaps_monotone && rep.pairwise_gap[i] > rep.pairwise_gap[i + 1];
  rep.uniform = all_completed && rep.band_ratio <= 1.1 && tmax - tmin < 1e-9;
  return rep;
}

inline int cmd_sweep_report(const std::vector<std::string>& run_dirs) {
  SweepReport rep = sweep_report(run_dirs);
  std::printf("%-10s %-14s %-10s %-8s %s\n", "kappa", "sup E^kappa", "sup/E(0)", "T_run",
              "status");
  for (const auto& e : rep.entries)
    std::printf("%-10g %-14.8g %-10.6f %-8g %s\n", e.kappa, e.sup_e_kappa, e.growth(), e.t_run,
                e.violation ? "violation" : (e.completed ? "completed" : "incomplete"));
  for (std::size_t i = 0; i < rep.pairwise_gap.size(); ++i)
    std::printf("gap(%g -> %g) = %.6g\n", rep.entries[i].kappa, rep.entries[i + 1].kappa,
                rep.pairwise_gap[i]);
  std::printf("band ratio (max/min sup E^kappa) = %.6g\n", rep.band_ratio);
  std::printf("gaps monotone: %s\n", rep.gaps_monotone ? "yes" : "no");
  std::printf("kappa-uniformity: %s\n", rep.uniform ? "PASS" : "FAIL");
  return rep.uniform && rep.gaps_monotone ? 0 : 1;
}

}  // namespace elastoslab
