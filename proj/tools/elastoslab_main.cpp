#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elastoslab/runner.hpp"
#include "elastoslab/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw elastoslab::Error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

elastoslab::RunConfig load_config(const std::string& path, const std::string& out_override,
                                  long jobs_override, long long seed_override) {
  elastoslab::RunConfig c;
  if (!path.empty()) c = elastoslab::parse_config(read_file(path));
  if (!out_override.empty()) c.out = out_override;
  if (jobs_override > 0) c.jobs = int(jobs_override);
  if (seed_override >= 0) c.seed = std::uint64_t(seed_override);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kappa-regularized free-boundary elastodynamics lab on the periodic slab"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long jobs = 0;
  long long seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--jobs", jobs, "parallel workers for kappa sweeps");
    cmd->add_option("--seed", seed, "random seed (overrides config)");
  };

  auto* run_cmd = app.add_subcommand("run", "evolve the system, one run per kappa");
  add_common(run_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "run the property suite");
  add_common(verify_cmd);

  std::vector<std::string> report_dirs;
  auto* report_cmd =
      app.add_subcommand("sweep-report", "summarize completed kappa-sweep run directories");
  report_cmd->add_option("dirs", report_dirs, "run directories (kappa_* folders, in sweep order)");
  report_cmd->add_option("--out", out_dir, "sweep parent directory (used if no dirs given)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return elastoslab::cmd_run(load_config(config_path, out_dir, jobs, seed));
    }
    if (verify_cmd->parsed()) {
      auto c = load_config(config_path, out_dir, jobs, seed);
      std::printf("seed = %llu\n", (unsigned long long)c.seed);
      return elastoslab::print_checks(elastoslab::run_verify(c.seed));
    }
    if (report_cmd->parsed()) {
      std::vector<std::string> dirs = report_dirs;
      if (dirs.empty() && !out_dir.empty()) {
        std::vector<std::pair<double, std::string>> found;
        for (const auto& e : std::filesystem::directory_iterator(out_dir)) {
          const std::string name = e.path().filename().string();
          if (name.rfind("kappa_", 0) == 0)
            found.emplace_back(std::stod(name.substr(6)), e.path().string());
        }
        std::sort(found.rbegin(), found.rend());  // descending kappa
        for (auto& [k, p] : found) dirs.push_back(p);
      }
      return elastoslab::cmd_sweep_report(dirs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
