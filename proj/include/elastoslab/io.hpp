#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elastoslab/config.hpp"
#include "elastoslab/diagnostics.hpp"

namespace elastoslab {

// ---------------------------------------------------------------------------
// energy.csv

inline const char* kEnergyCsvHeader =
    "t,E_kappa,Ek_v4,Ek_eta4,Ek_geta4,Ek_bnd,E_limit,El_v4,El_eta4,El_geta4,El_bnd,"
    "div_A_v,J_minus_1,piola,F_identity,div_G0T_eta,curl_growth,div_v3,curl_v3,curl_geta3,"
    "rt_bottom,rt_top,nc_bottom,nc_top,jk_dev,ak_dev,apriori_ok,pressure_iters";

inline void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& recs) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path);
  std::fprintf(f, "%s\n", kEnergyCsvHeader);
  for (const auto& r : recs) {
    std::fprintf(f,
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                 r.t, r.kappa.total(), r.kappa.v4, r.kappa.eta4, r.kappa.geta4, r.kappa.boundary,
                 r.limit.total(), r.limit.v4, r.limit.eta4, r.limit.geta4, r.limit.boundary,
                 r.div_a_v, r.j_minus_1, r.piola, r.f_identity, r.div_g0t_eta, r.curl_growth,
                 r.div_v3, r.curl_v3, r.curl_geta3, r.rt_margin[0], r.rt_margin[1],
                 r.nc_margin[0], r.nc_margin[1], r.jk_dev, r.ak_dev, r.apriori_ok ? 1 : 0,
                 r.pressure_iterations);
  }
  std::fclose(f);
}

/// Minimal CSV reader for the files written above (numbers only).
inline std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      row.push_back(std::stod(line.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Run manifest (JSON)

struct RunManifest {
  RunConfig config;
  double kappa = 0.0;
  std::uint64_t seed = 0;
  std::string version;
  double wall_time_s = 0.0;
  bool completed = false;
  bool apriori_violation = false;
  std::string violation_message;
  double t_end = 0.0;
  int steps_taken = 0;
  long elliptic_solves = 0;
  double max_rel_residual = 0.0;
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["config"] = config_to_text(m.config);
  j["kappa"] = m.kappa;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["wall_time_s"] = m.wall_time_s;
  j["completed"] = m.completed;
  j["apriori_violation"] = m.apriori_violation;
  j["violation_message"] = m.violation_message;
  j["t_end"] = m.t_end;
  j["steps_taken"] = m.steps_taken;
  j["elliptic_solves"] = m.elliptic_solves;
  j["max_rel_residual"] = m.max_rel_residual;
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << j.dump(2) << "\n";
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.config = parse_config(j.at("config").get<std::string>());
  m.kappa = j.at("kappa").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  m.completed = j.at("completed").get<bool>();
  m.apriori_violation = j.at("apriori_violation").get<bool>();
  m.violation_message = j.at("violation_message").get<std::string>();
  m.t_end = j.at("t_end").get<double>();
  m.steps_taken = j.at("steps_taken").get<int>();
  m.elliptic_solves = j.at("elliptic_solves").get<long>();
  m.max_rel_residual = j.at("max_rel_residual").get<double>();
  return m;
}

// ---------------------------------------------------------------------------
// Field snapshots
//
// Layout (little-endian):
//   8-byte magic "ESLBSNP1"
//   f64 t, u32 n1, u32 n2, u32 n3, u32 field_count
//   per field: u16 name length, name bytes,
//              f64 payload of size n1*n2*(n3+1), index (i1,i2,i3),
//              i3 slowest, then i1, then i2 (layer-contiguous row-major)

inline constexpr char kSnapshotMagic[8] = {'E', 'S', 'L', 'B', 'S', 'N', 'P', '1'};

struct Snapshot {
  double t = 0.0;
  Grid grid;
  std::vector<std::pair<std::string, ScalarField>> fields;
};

inline void write_snapshot(const std::string& path, const Snapshot& s) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error("cannot open " + path);
  std::fwrite(kSnapshotMagic, 1, 8, f);
  std::fwrite(&s.t, sizeof(double), 1, f);
  const std::uint32_t dims[4] = {std::uint32_t(s.grid.n1), std::uint32_t(s.grid.n2),
                                 std::uint32_t(s.grid.n3), std::uint32_t(s.fields.size())};
  std::fwrite(dims, sizeof(std::uint32_t), 4, f);
  for (const auto& [name, field] : s.fields) {
    const std::uint16_t len = std::uint16_t(name.size());
    std::fwrite(&len, sizeof(len), 1, f);
    std::fwrite(name.data(), 1, len, f);
    std::fwrite(field.data(), sizeof(double), field.size(), f);
  }
  std::fclose(f);
}

inline Snapshot read_snapshot(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw Error("cannot open " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kSnapshotMagic, 8) != 0) {
    std::fclose(f);
    throw Error("bad snapshot magic in " + path);
  }
  Snapshot s;
  std::uint32_t dims[4];
  if (std::fread(&s.t, sizeof(double), 1, f) != 1 ||
      std::fread(dims, sizeof(std::uint32_t), 4, f) != 4) {
    std::fclose(f);
    throw Error("truncated snapshot header in " + path);
  }
  s.grid = Grid(int(dims[0]), int(dims[1]), int(dims[2]));
  for (std::uint32_t i = 0; i < dims[3]; ++i) {
    std::uint16_t len;
    if (std::fread(&len, sizeof(len), 1, f) != 1) {
      std::fclose(f);
      throw Error("truncated snapshot in " + path);
    }
    std::string name(len, '\0');
    if (len && std::fread(name.data(), 1, len, f) != len) {
      std::fclose(f);
      throw Error("truncated snapshot in " + path);
    }
    ScalarField field(s.grid);
    if (std::fread(field.data(), sizeof(double), field.size(), f) != field.size()) {
      std::fclose(f);
      throw Error("truncated snapshot payload in " + path);
    }
    s.fields.emplace_back(std::move(name), std::move(field));
  }
  std::fclose(f);
  return s;
}

}  // namespace elastoslab
