#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "elastoslab/errors.hpp"
#include "elastoslab/initial_data.hpp"

namespace elastoslab {

/// Initial velocity recipes.
///   equilibrium: v0 = 0
///   standard:    v0 = amplitude (sin(2 pi x2) sin(pi x3), 0, 0) — divergence
///                free with zero boundary trace, the stock perturbed run
///   mixed_rt:    v0 = amplitude (sin(2 pi x1), 0, -2 pi x3 cos(2 pi x1)) —
///                divergence free with a sign-definite quadratic pressure
///                source, so the initial pressure satisfies the sign
///                condition on both faces
///   random:      seeded band-limited divergence-free field
enum class VelocityRecipe { equilibrium, standard, mixed_rt, random };

inline VelocityRecipe velocity_recipe_from_name(const std::string& s) {
  if (s == "equilibrium") return VelocityRecipe::equilibrium;
  if (s == "standard") return VelocityRecipe::standard;
  if (s == "mixed_rt") return VelocityRecipe::mixed_rt;
  if (s == "random") return VelocityRecipe::random;
  throw ValidationError("initial", "unknown velocity recipe '" + s + "'");
}

inline const char* velocity_recipe_name(VelocityRecipe r) {
  switch (r) {
    case VelocityRecipe::equilibrium: return "equilibrium";
    case VelocityRecipe::standard: return "standard";
    case VelocityRecipe::mixed_rt: return "mixed_rt";
    default: return "random";
  }
}

inline const char* deformation_recipe_name(DeformationRecipe r) {
  switch (r) {
    case DeformationRecipe::canonical: return "canonical";
    case DeformationRecipe::sheared: return "sheared";
    default: return "columnar";
  }
}

struct RunConfig {
  int n1 = 32, n2 = 32, n3 = 32;
  std::vector<double> kappa = {0.1};  // sorted descending
  double T = 0.5;
  double dt = 1e-3;          // <= 0 means derive from cfl_factor
  double cfl_factor = 0.3;
  VelocityRecipe initial = VelocityRecipe::standard;
  double amplitude = 0.02;
  DeformationRecipe g0 = DeformationRecipe::canonical;
  double g0_amplitude = 0.3;
  Regime partition_bottom = Regime::nc;
  Regime partition_top = Regime::nc;
  double lambda = 0.1;
  double delta = 0.1;
  int snapshot_every = 50;   // steps between records/snapshots; 0 disables fields
  std::string out = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
  bool track_deformation = true;

  BoundaryPartition partition() const {
    return BoundaryPartition{partition_bottom, partition_top, lambda, delta};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw ValidationError(key, "not a number: '" + v + "'");
  }
  if (pos != v.size()) throw ValidationError(key, "trailing junk in '" + v + "'");
  return x;
}

inline long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(v, &pos);
  } catch (...) {
    throw ValidationError(key, "not an integer: '" + v + "'");
  }
  if (pos != v.size()) throw ValidationError(key, "trailing junk in '" + v + "'");
  return x;
}

inline Regime parse_regime(const std::string& key, const std::string& v) {
  if (v == "rt") return Regime::rt;
  if (v == "nc") return Regime::nc;
  throw ValidationError(key, "expected rt or nc, got '" + v + "'");
}

}  // namespace detail

/// Strict line-oriented `key = value` parser; '#' starts a comment; unknown
/// keys are errors. Every numeric field is validated.
inline RunConfig parse_config(const std::string& text) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::trim;
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value': " + line, line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) throw ParseError("empty key or value", line_no);

    if (key == "n1") c.n1 = int(parse_int(key, val));
    else if (key == "n2") c.n2 = int(parse_int(key, val));
    else if (key == "n3") c.n3 = int(parse_int(key, val));
    else if (key == "kappa") {
      c.kappa.clear();
      std::istringstream ks(val);
      std::string item;
      while (std::getline(ks, item, ',')) {
        item = trim(item);
        if (!item.empty()) c.kappa.push_back(parse_double(key, item));
      }
      if (c.kappa.empty()) throw ValidationError(key, "empty list");
    } else if (key == "T") c.T = parse_double(key, val);
    else if (key == "dt") c.dt = parse_double(key, val);
    else if (key == "cfl_factor") c.cfl_factor = parse_double(key, val);
    else if (key == "initial") c.initial = velocity_recipe_from_name(val);
    else if (key == "amplitude") c.amplitude = parse_double(key, val);
    else if (key == "g0") c.g0 = deformation_recipe_from_name(val);
    else if (key == "g0_amplitude") c.g0_amplitude = parse_double(key, val);
    else if (key == "partition_bottom") c.partition_bottom = detail::parse_regime(key, val);
    else if (key == "partition_top") c.partition_top = detail::parse_regime(key, val);
    else if (key == "lambda") c.lambda = parse_double(key, val);
    else if (key == "delta") c.delta = parse_double(key, val);
    else if (key == "snapshot_every") c.snapshot_every = int(parse_int(key, val));
    else if (key == "out") c.out = val;
    else if (key == "seed") c.seed = std::uint64_t(parse_int(key, val));
    else if (key == "jobs") c.jobs = int(parse_int(key, val));
    else if (key == "track_deformation") c.track_deformation = parse_int(key, val) != 0;
    else throw ParseError("unknown key '" + key + "'", line_no);
  }

  auto pow2 = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
  if (c.n1 < 8 || !pow2(c.n1)) throw ValidationError("n1", "must be a power of two >= 8");
  if (c.n2 < 8 || !pow2(c.n2)) throw ValidationError("n2", "must be a power of two >= 8");
  if (c.n3 < 8) throw ValidationError("n3", "must be >= 8");
  for (double k : c.kappa)
    if (!(k > 0.0 && k < 0.25)) throw ValidationError("kappa", "entries must lie in (0, 1/4)");
  if (!std::is_sorted(c.kappa.rbegin(), c.kappa.rend()))
    throw ValidationError("kappa", "list must be sorted descending");
  if (!(c.T > 0.0)) throw ValidationError("T", "must be positive");
  if (c.dt <= 0.0 && !(c.cfl_factor > 0.0))
    throw ValidationError("dt", "dt or cfl_factor must be positive");
  if (!(c.amplitude >= 0.0)) throw ValidationError("amplitude", "must be nonnegative");
  if (!(c.lambda > 0.0)) throw ValidationError("lambda", "must be positive");
  if (!(c.delta > 0.0)) throw ValidationError("delta", "must be positive");
  if (c.snapshot_every < 0) throw ValidationError("snapshot_every", "must be >= 0");
  if (c.jobs < 1) throw ValidationError("jobs", "must be >= 1");
  return c;
}

/// Round-trippable echo of a configuration.
inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "n1 = " << c.n1 << "\nn2 = " << c.n2 << "\nn3 = " << c.n3 << "\nkappa = ";
  for (std::size_t i = 0; i < c.kappa.size(); ++i) o << (i ? ", " : "") << c.kappa[i];
  o << "\nT = " << c.T << "\ndt = " << c.dt << "\ncfl_factor = " << c.cfl_factor
    << "\ninitial = " << velocity_recipe_name(c.initial) << "\namplitude = " << c.amplitude
    << "\ng0 = " << deformation_recipe_name(c.g0) << "\ng0_amplitude = " << c.g0_amplitude
    << "\npartition_bottom = " << regime_name(c.partition_bottom)
    << "\npartition_top = " << regime_name(c.partition_top) << "\nlambda = " << c.lambda
    << "\ndelta = " << c.delta << "\nsnapshot_every = " << c.snapshot_every
    << "\nout = " << c.out << "\nseed = " << c.seed << "\njobs = " << c.jobs
    << "\ntrack_deformation = " << (c.track_deformation ? 1 : 0) << "\n";
  return o.str();
}

}  // namespace elastoslab
