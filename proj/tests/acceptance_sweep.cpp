// Acceptance criterion 3: kappa-uniformity of the standard perturbed run.
// Four runs at kappa in {0.2, 0.1, 0.05, 0.025} on a horizontal grid fine
// enough to resolve the smallest kernel (kappa >= 2 h requires n1 = n2 =
// 128); every member must complete T = 0.5 inside the monitored regime,
// the sup of the regularized energy must sit in a common +-10% band, and
// consecutive trajectory gaps must shrink monotonically.

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "elastoslab/runner.hpp"

using namespace elastoslab;

int main() {
  namespace fs = std::filesystem;
  RunConfig c;
  c.n1 = 128;
  c.n2 = 128;
  c.n3 = 16;
  c.kappa = {0.2, 0.1, 0.05, 0.025};
  c.T = 0.5;
  c.dt = 1e-3;
  c.initial = VelocityRecipe::standard;
  c.amplitude = 0.02;
  c.g0 = DeformationRecipe::canonical;
  c.snapshot_every = 100;
  c.seed = 1;
  c.jobs = 2;
  c.out = (fs::temp_directory_path() / "eslb_sweep").string();
  fs::remove_all(c.out);

  if (cmd_run(c) != 0) {
    std::printf("[FAIL] criterion 3: kappa uniformity  --  a sweep member failed\n");
    return 1;
  }
  std::vector<std::string> dirs;
  for (double k : c.kappa) dirs.push_back(c.out + "/" + kappa_dir_name(k));
  SweepReport rep = sweep_report(dirs);

  double max_rel = 0.0;
  for (const auto& dir : dirs)
    max_rel = std::max(max_rel, read_manifest(dir + "/manifest.json").max_rel_residual);

  char gaps[160] = "";
  for (std::size_t i = 0; i < rep.pairwise_gap.size(); ++i)
    std::snprintf(gaps + std::strlen(gaps), sizeof gaps - std::strlen(gaps), "%s%.3e",
                  i ? " > " : "", rep.pairwise_gap[i]);
  const bool pass = rep.uniform && rep.gaps_monotone && max_rel <= kTauEll;
  std::printf(
      "[%s] criterion 3: kappa uniformity  --  band ratio %.4f (<= 1.1), T_run common, gaps %s, "
      "max rel residual %.2e\n",
      pass ? "PASS" : "FAIL", rep.band_ratio, gaps, max_rel);
  for (const auto& e : rep.entries)
    std::printf("  kappa=%-6g sup E^kappa=%.8g T_run=%g %s\n", e.kappa, e.sup_e_kappa, e.t_run,
                e.violation ? "violation" : "completed");
  fs::remove_all(c.out);
  return pass ? 0 : 1;
}
