#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morpho/config.hpp"
#include "morpho/io.hpp"
#include "morpho/run.hpp"

using namespace morpho;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("morpho_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(f, l);) lines.push_back(l);
  return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const RunConfig c = parse_config_text("");
  EXPECT_EQ(c.dimension, 1);
  EXPECT_EQ(c.n_y, 100u);
  EXPECT_DOUBLE_EQ(c.L_y, 10.0);
  EXPECT_DOUBLE_EQ(c.tau, 1e-4);
  EXPECT_DOUBLE_EQ(c.t_max, 2.5);
  EXPECT_EQ(c.params.model, ModelKind::Evaporation);
  EXPECT_DOUBLE_EQ(c.params.beta[idx(Species::Solvent)], 0.1);
  EXPECT_DOUBLE_EQ(c.params.gamma[idx(Species::Solvent)], 1.0);
  EXPECT_DOUBLE_EQ(c.params.phi_sat[idx(Species::Solvent)], 1e-6);
  EXPECT_DOUBLE_EQ(c.initial.a, 0.0);
  EXPECT_DOUBLE_EQ(c.initial.b, 1.0);
  EXPECT_EQ(c.step_count(), 25000u);
}

TEST(Config, EmptyFileGivesDefaults) {
  const auto dir = scratch_dir("empty_cfg");
  std::ofstream(dir / "empty.cfg").close();
  const RunConfig c = parse_config(dir / "empty.cfg");
  EXPECT_EQ(c.dimension, 1);
  EXPECT_DOUBLE_EQ(c.tau, 1e-4);
}

TEST(Config, TauOverrideChangesOnlyTau) {
  const RunConfig d = parse_config_text("");
  const RunConfig c = parse_config_text("tau = 1e-3\n");
  EXPECT_DOUBLE_EQ(c.tau, 1e-3);
  EXPECT_EQ(c.n_y, d.n_y);
  EXPECT_DOUBLE_EQ(c.t_max, d.t_max);
  EXPECT_EQ(c.params.beta, d.params.beta);
}

TEST(Config, ThreeDimensionsRejectedAsOutOfScope) {
  try {
    parse_config_text("dimension = 3");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("out of scope"), std::string::npos) << e.what();
  }
}

TEST(Config, CommentsSpeciesKeysAndLists) {
  const RunConfig c = parse_config_text(
      "# full model\n"
      "model = full   # trailing comment\n"
      "potential = fitted\n"
      "beta_a = 1\n"
      "chi_p_nfa = 2.5\n"
      "N_s = 2\n"
      "snapshot_times = 0, 0.5, 1.0\n"
      "t_max = 1\n"
      "pressure_mass = lumped\n"
      "record_timings = false\n");
  EXPECT_EQ(c.params.model, ModelKind::Full);
  EXPECT_EQ(c.params.potential, PotentialKind::FittedPoly);
  EXPECT_DOUBLE_EQ(c.params.beta[idx(Species::Air)], 1.0);
  EXPECT_DOUBLE_EQ(c.params.chi[0][1], 2.5);
  EXPECT_DOUBLE_EQ(c.params.chi[1][0], 2.5);
  EXPECT_DOUBLE_EQ(c.params.molar_size[idx(Species::Solvent)], 2.0);
  EXPECT_EQ(c.snapshot_times, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(c.solver.pressure_mass, MassSolve::Lumped);
  EXPECT_FALSE(c.record_timings);
}

TEST(Config, ErrorsCarryOriginAndLine) {
  try {
    parse_config_text("tau = 1e-3\nbogus = 1\n", "x.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config_text("tau = abc"), ConfigError);
  EXPECT_THROW(parse_config_text("tau 1e-3"), ConfigError);
  EXPECT_THROW(parse_config_text("tau = -1"), ConfigError);
  EXPECT_THROW(parse_config_text("a = 0.6\nb = 0.3"), ConfigError);
  EXPECT_THROW(parse_config(fs::path("/nonexistent/none.cfg")), ConfigError);
}

TEST(Config, StepCountRoundsNearIntegers) {
  RunConfig c;
  c.tau = 1e-4;
  c.t_max = 2.5;
  EXPECT_EQ(c.step_count(), 25000u);
  c.t_max = 2.55e-4;
  EXPECT_EQ(c.step_count(), 3u);
}

TEST(Snapshot, OneDimensionalCsvRowsAndRoundTrip) {
  const Discretization d(build_interval_mesh(4, 1.0));
  SimState s(d);
  for (std::size_t a = 0; a < 5; ++a) {
    s.phi[2][a] = 1.0 / 3.0 + 0.1 * static_cast<double>(a);
    s.vapor[a] = std::nextafter(0.2, 1.0) * static_cast<double>(a) / 7.0;
  }
  const auto dir = scratch_dir("csv");
  write_snapshot(s, *d.mesh, dir / "snap.csv");
  const auto lines = read_lines(dir / "snap.csv");
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "y,phi_p,phi_nfa,phi_s,phi_a,Phi_v");
  for (std::size_t a = 0; a < 5; ++a) {
    const auto cols = split(lines[a + 1], ',');
    ASSERT_EQ(cols.size(), 6u);
    EXPECT_EQ(std::strtod(cols[0].c_str(), nullptr), d.mesh->node(a)[0]);
    EXPECT_EQ(std::strtod(cols[3].c_str(), nullptr), s.phi[2][a]);
    EXPECT_EQ(std::strtod(cols[4].c_str(), nullptr), s.air(a));
    EXPECT_EQ(std::strtod(cols[5].c_str(), nullptr), s.vapor[a]);
  }
}

TEST(Snapshot, TwoDimensionalVtkStructure) {
  const Discretization d(build_rect_mesh(1, 1, 1.0, 1.0));
  SimState s(d);
  const auto dir = scratch_dir("vtk");
  write_snapshot(s, *d.mesh, dir / "snap.vtk");
  const auto lines = read_lines(dir / "snap.vtk");
  ASSERT_GT(lines.size(), 10u);
  EXPECT_EQ(lines[0], "# vtk DataFile Version 3.0");
  auto find = [&](const std::string& prefix) {
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (lines[i].rfind(prefix, 0) == 0) return i;
    return lines.size();
  };
  EXPECT_EQ(lines[find("POINTS")], "POINTS 4 double");
  EXPECT_EQ(lines[find("CELLS")], "CELLS 2 8");
  const auto ct = find("CELL_TYPES");
  ASSERT_LT(ct + 2, lines.size());
  EXPECT_EQ(lines[ct], "CELL_TYPES 2");
  EXPECT_EQ(lines[ct + 1], "5");
  EXPECT_EQ(lines[ct + 2], "5");
  for (const char* name : {"phi_p", "phi_nfa", "phi_s", "phi_a", "Phi_v", "pressure"})
    EXPECT_LT(find(std::string("SCALARS ") + name), lines.size()) << name;
  EXPECT_LT(find("VECTORS velocity"), lines.size());
}

TEST(Snapshot, UnwritablePathThrows) {
  const Discretization d(build_interval_mesh(2, 1.0));
  SimState s(d);
  const auto dir = scratch_dir("blocked");
  std::ofstream(dir / "file").close();
  EXPECT_THROW(write_snapshot(s, *d.mesh, dir / "file" / "snap.csv"), IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.5), "2.5");
  for (double v : {1.0 / 3.0, 2.0 / 7.0, 1e-300, -123456.789e10})
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}

TEST(StatsLog, TwentyStepsSixSystemsGiveHundredTwentyRows) {
  RunConfig cfg;
  cfg.params.model = ModelKind::Full;
  cfg.params.beta[idx(Species::Air)] = 1.0;
  cfg.initial = {0.33, 0.33, 0.01, 1};
  const auto r = run(cfg, {}, 20);
  const auto dir = scratch_dir("stats");
  write_stats_log(r.stats, dir / "stats.csv");
  const auto lines = read_lines(dir / "stats.csv");
  ASSERT_EQ(lines.size(), 121u);
  EXPECT_EQ(lines[0], "step,time,system,iterations,residual,seconds,solvent_mass");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split(lines[i], ',');
    ASSERT_EQ(cols.size(), 7u);
    EXPECT_GT(std::stol(cols[3]), 0) << lines[i];
    EXPECT_EQ(cols[3].find_first_not_of("0123456789"), std::string::npos);
  }
}

TEST(StatsLog, LeadingColumnsAndDisabledTimings) {
  RunConfig cfg;
  cfg.n_y = 20;
  const auto r = run(cfg, {}, 2);
  std::ostringstream os;
  const StatsLogOptions opt{false, {{"n_y", "20"}}};
  write_stats_header(os, opt);
  write_stats_rows(os, r.stats, opt);
  const auto lines = split(os.str(), '\n');
  EXPECT_EQ(lines[0], "n_y,step,time,system,iterations,residual,seconds,solvent_mass");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split(lines[i], ',');
    EXPECT_EQ(cols[0], "20");
    EXPECT_EQ(cols[6], "0");
  }
}

TEST(StatsLog, EmptySequenceRejected) {
  const auto dir = scratch_dir("stats_empty");
  EXPECT_THROW(write_stats_log({}, dir / "stats.csv"), std::invalid_argument);
}

TEST(Output, RelativeDirectoriesResolveAgainstRoot) {
  ::setenv(kOutputRootEnv, "/tmp/morpho_root", 1);
  EXPECT_EQ(resolve_output_dir("out"), fs::path("/tmp/morpho_root/out"));
  EXPECT_EQ(resolve_output_dir("/abs/out"), fs::path("/abs/out"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(resolve_output_dir("out"), fs::path("out"));
}

TEST(Output, SimulateToDiskWritesSnapshotsAndStats) {
  const auto dir = scratch_dir("simulate");
  RunConfig cfg;
  cfg.n_y = 20;
  cfg.t_max = 5 * cfg.tau;
  cfg.snapshot_times = {0.0, 5 * cfg.tau};
  cfg.output_dir = dir;
  simulate_to_disk(cfg);
  EXPECT_TRUE(fs::exists(dir / "snapshot_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "snapshot_1.csv"));
  EXPECT_EQ(read_lines(dir / "stats.csv").size(), 1u + 5u * 4u);
}
