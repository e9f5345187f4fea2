#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "elastoslab/io.hpp"
#include "elastoslab/random_fields.hpp"

using namespace elastoslab;

TEST_CASE("config: minimal text fills documented defaults") {
  auto c = parse_config("# empty\n");
  CHECK(c.n1 == 32);
  CHECK(c.kappa == std::vector<double>{0.1});
  CHECK(c.T == 0.5);
  CHECK(c.dt == 1e-3);
  CHECK(c.initial == VelocityRecipe::standard);
  CHECK(c.partition_bottom == Regime::nc);
  CHECK(c.lambda == 0.1);
}

TEST_CASE("config: lists, comments, overrides") {
  auto c = parse_config(
      "n1 = 64\nn2 = 64\nn3 = 16\n"
      "kappa = 0.2, 0.1, 0.05   # sweep\n"
      "T = 0.25\ndt = 0.002\ninitial = equilibrium\n"
      "partition_bottom = rt\nlambda = 0.2\nseed = 42\n");
  CHECK(c.n1 == 64);
  CHECK(c.kappa == std::vector<double>({0.2, 0.1, 0.05}));
  CHECK(c.initial == VelocityRecipe::equilibrium);
  CHECK(c.partition_bottom == Regime::rt);
  CHECK(c.seed == 42);
}

TEST_CASE("config: errors name the line or field") {
  CHECK_THROWS_AS(parse_config("n1 = -4\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("mystery = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("n1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("kappa = 0.05, 0.1\n"), ValidationError);  // ascending
  CHECK_THROWS_AS(parse_config("kappa = 0.3\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("T = -1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("n1 = twelve\n"), ValidationError);
  try {
    parse_config("n1 = 32\nbogus = 1\n");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("config: text round trip") {
  RunConfig c;
  c.n1 = 64;
  c.kappa = {0.2, 0.05};
  c.initial = VelocityRecipe::mixed_rt;
  c.partition_top = Regime::rt;
  c.seed = 777;
  auto c2 = parse_config(config_to_text(c));
  CHECK(c2.n1 == c.n1);
  CHECK(c2.kappa == c.kappa);
  CHECK(c2.initial == c.initial);
  CHECK(c2.partition_top == c.partition_top);
  CHECK(c2.seed == c.seed);
}

TEST_CASE("csv round trip preserves doubles") {
  std::vector<EnergyRecord> recs(2);
  recs[0].t = 0.0;
  recs[0].kappa.v4 = 1.0 / 3.0;
  recs[1].t = 0.125;
  recs[1].limit.eta4 = 4.000000000000001;
  recs[1].div_a_v = 3.25e-11;
  const std::string path = std::filesystem::temp_directory_path() / "eslb_test.csv";
  write_energy_csv(path, recs);
  auto rows = read_csv_rows(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][2] == recs[0].kappa.v4);        // 17 significant digits survive
  CHECK(rows[1][8] == recs[1].limit.eta4);
  CHECK(rows[1][11] == recs[1].div_a_v);
  std::filesystem::remove(path);
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.config.n1 = 64;
  m.config.kappa = {0.2, 0.1};
  m.kappa = 0.1;
  m.seed = 9;
  m.version = "x";
  m.completed = true;
  m.t_end = 0.5;
  m.steps_taken = 500;
  m.max_rel_residual = 2.5e-12;
  const std::string path = std::filesystem::temp_directory_path() / "eslb_test_manifest.json";
  write_manifest(path, m);
  auto r = read_manifest(path);
  CHECK(r.config.n1 == 64);
  CHECK(r.kappa == 0.1);
  CHECK(r.completed);
  CHECK(r.max_rel_residual == m.max_rel_residual);
  std::filesystem::remove(path);
}

TEST_CASE("snapshot round trip") {
  Grid g(8, 8, 8);
  Snapshot s;
  s.t = 0.25;
  s.grid = g;
  s.fields.emplace_back("a", random_bandlimited_scalar(g, 2, 2, 5));
  s.fields.emplace_back("b", ScalarField(g, 1.5));
  const std::string path = std::filesystem::temp_directory_path() / "eslb_test_snap.bin";
  write_snapshot(path, s);
  auto r = read_snapshot(path);
  CHECK(r.t == 0.25);
  CHECK(r.grid == g);
  REQUIRE(r.fields.size() == 2);
  CHECK(r.fields[0].first == "a");
  CHECK((r.fields[0].second - s.fields[0].second).max_abs() == 0.0);
  CHECK(r.fields[1].second(1, 2, 3) == 1.5);
  std::filesystem::remove(path);
}
