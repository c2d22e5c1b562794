#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <sstream>

#include "morpho/config.hpp"
#include "morpho/io.hpp"
#include "morpho/run.hpp"
#include "morpho/timestepper.hpp"

using namespace morpho;

namespace {

std::shared_ptr<const Discretization> interval(std::size_t n) {
  return std::make_shared<const Discretization>(build_interval_mesh(n, 10.0));
}

std::shared_ptr<const Discretization> square(std::size_t n) {
  return std::make_shared<const Discretization>(build_rect_mesh(n, n, 10.0, 10.0));
}

ModelParams full_params() {
  ModelParams prm;
  prm.model = ModelKind::Full;
  prm.beta = {1e-3, 1e-3, 1e-1, 1.0};
  return prm;
}

bool same_fields(const SimState& a, const SimState& b) {
  for (std::size_t i = 0; i < kSolvedSpecies; ++i)
    if (a.phi[i].values() != b.phi[i].values()) return false;
  for (std::size_t i = 0; i < kSpeciesCount; ++i)
    if (a.mu[i].values() != b.mu[i].values()) return false;
  return a.vapor.values() == b.vapor.values() && a.velocity.values() == b.velocity.values() &&
         a.pressure.values() == b.pressure.values();
}

}  // namespace

TEST(Initialize, EvaporationFilmIsNearlyPureSolvent) {
  const auto d = interval(100);
  const SimState s = initialize(*d, RunConfig::default_params(), {0.0, 1.0, 0.01, 1});
  for (std::size_t a = 0; a < s.node_count(); ++a) {
    const double y = d->mesh->node(a)[0];
    EXPECT_EQ(s.phi[0][a], 0.0);
    EXPECT_EQ(s.phi[1][a], 0.0);
    if (y < 5.0) {
      EXPECT_GE(s.phi[2][a], 0.99);
      EXPECT_LE(s.phi[2][a], 1.0);
      EXPECT_EQ(s.vapor[a], 0.0);
    } else {
      EXPECT_EQ(s.phi[2][a], 0.0);
      EXPECT_EQ(s.vapor[a], 1.0);
    }
  }
}

TEST(Initialize, FullModelFractionsAroundRequestedMeans) {
  const auto d = square(10);
  const SimState s = initialize(*d, full_params(), {0.33, 0.33, 0.01, 3});
  for (std::size_t a = 0; a < s.node_count(); ++a) {
    if (d->mesh->node(a)[1] >= 5.0) continue;
    for (std::size_t i = 0; i < kSolvedSpecies; ++i) EXPECT_NEAR(s.phi[i][a], 0.33, 0.01 + 1e-15);
    EXPECT_DOUBLE_EQ(s.phi[0][a] + s.phi[1][a] + s.phi[2][a] + s.air(a), 1.0);
  }
}

TEST(Initialize, SameSeedIsBitIdenticalOtherSeedDiffers) {
  const auto d = square(8);
  const auto prm = full_params();
  const SimState a = initialize(*d, prm, {0.3, 0.3, 0.01, 42});
  const SimState b = initialize(*d, prm, {0.3, 0.3, 0.01, 42});
  const SimState c = initialize(*d, prm, {0.3, 0.3, 0.01, 43});
  EXPECT_TRUE(same_fields(a, b));
  EXPECT_FALSE(same_fields(a, c));
}

TEST(Initialize, RejectsInadmissibleMeans) {
  const auto d = interval(10);
  EXPECT_THROW(initialize(*d, full_params(), {0.5, 0.5, 0.01, 1}), std::invalid_argument);
  InitialCondition ic;
  ic.film_fraction = 0.0;
  EXPECT_THROW(initialize(*d, full_params(), ic), std::invalid_argument);
}

TEST(ReferenceNode, NearestToTopMidpoint) {
  EXPECT_EQ(top_reference_node(build_interval_mesh(10, 1.0)), 10u);
  const Mesh m = build_rect_mesh(4, 2, 1.0, 1.0);
  const auto& p = m.node(top_reference_node(m));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
}

TEST(Step, UniformStateIsAFixedPoint) {
  const auto d = square(6);
  ModelParams prm = full_params();
  prm.flux_rate = 0.0;
  InitialCondition ic{0.2, 0.3, 0.0, 1};
  ic.film_fraction = 1.0;
  SimState s = initialize(*d, prm, ic);
  const SimState before = s;
  Timestepper ts(d, prm, 1e-4);
  ts.advance(s);
  for (std::size_t a = 0; a < s.node_count(); ++a) {
    for (std::size_t i = 0; i < kSolvedSpecies; ++i) EXPECT_NEAR(s.phi[i][a], before.phi[i][a], 1e-8);
    EXPECT_NEAR(s.vapor[a], before.vapor[a], 1e-8);
  }
  for (double v : s.velocity.values()) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(Step, MassConservedWithoutFlux) {
  const auto d = square(12);
  ModelParams prm = full_params();
  prm.flux_rate = 0.0;
  InitialCondition ic{0.25, 0.25, 0.01, 5};
  ic.film_fraction = 1.0;  // no vapor layer, so truncation stays inactive
  SolverConfig cfg;
  cfg.ch = {1e-13, 1e-14, 500};
  cfg.ns = {1e-10, 1e-14, 500};
  SimState s = initialize(*d, prm, ic);
  Timestepper ts(d, prm, 1e-4, cfg);
  for (int k = 0; k < 3; ++k) {
    std::array<double, 3> before{};
    for (std::size_t i = 0; i < 3; ++i) before[i] = ts.integral(s.phi[i].values());
    ts.advance(s);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_LE(std::abs(ts.integral(s.phi[i].values()) - before[i]), 1e-10 * std::abs(before[i]));
  }
}

// Property of the evaporation setup; see README (known limitation): the
// truncation of the solvent undershoot in the vapor adds mass each step.
TEST(Step, EvaporationSolventMassNonIncreasing) {
  RunConfig cfg;
  const auto r = run(cfg, {}, 100);
  double prev = r.initial_solvent_mass;
  std::size_t increases = 0;
  for (const auto& st : r.stats) {
    if (st.solvent_mass > prev) ++increases;
    prev = st.solvent_mass;
  }
  EXPECT_EQ(increases, 0u) << "initial " << r.initial_solvent_mass << ", after 100 steps " << prev;
}

TEST(Step, FieldsStayInUnitInterval) {
  const auto d = square(10);
  const auto prm = full_params();
  SimState s = initialize(*d, prm, {0.33, 0.33, 0.01, 1});
  Timestepper ts(d, prm, 1e-4);
  for (int k = 0; k < 3; ++k) {
    ts.advance(s);
    for (std::size_t a = 0; a < s.node_count(); ++a) {
      for (std::size_t i = 0; i < kSolvedSpecies; ++i) {
        EXPECT_GE(s.phi[i][a], 0.0);
        EXPECT_LE(s.phi[i][a], 1.0);
      }
      EXPECT_GE(s.vapor[a], 0.0);
      EXPECT_LE(s.vapor[a], 1.0);
    }
  }
}

TEST(Step, StepDoesNotModifyInputAndMatchesAdvance) {
  const auto d = interval(40);
  const auto prm = RunConfig::default_params();
  const SimState s0 = initialize(*d, prm, {});
  Timestepper ts(d, prm, 1e-4);
  const auto [s1, st] = ts.step(s0);
  EXPECT_EQ(s0.step, 0u);
  EXPECT_EQ(s1.step, 1u);
  EXPECT_DOUBLE_EQ(s1.time, 1e-4);
  SimState s2 = s0;
  Timestepper ts2(d, prm, 1e-4);
  ts2.advance(s2);
  EXPECT_TRUE(same_fields(s1, s2));
  EXPECT_EQ(st.systems.size(), 4u);  // ch_s, mu_a, ac, ns in the evaporation model
}

TEST(Step, OneDimensionalVelocityStaysZero) {
  const auto d = interval(50);
  const auto prm = full_params();
  SimState s = initialize(*d, prm, {0.33, 0.33, 0.01, 1});
  Timestepper ts(d, prm, 1e-4);
  const auto st = ts.advance(s);
  for (double v : s.velocity.values()) EXPECT_EQ(v, 0.0);
  ASSERT_NE(st.find(SystemId::NavierStokes), nullptr);
  EXPECT_EQ(st.systems.size(), 6u);
}

TEST(Step, TwoDimensionalNavierStokesIsDivergenceFree) {
  const auto d = square(16);
  const auto prm = full_params();
  SimState s = initialize(*d, prm, {0.33, 0.33, 0.01, 1});
  Timestepper ts(d, prm, 1e-4);
  for (int k = 0; k < 2; ++k) {
    const auto st = ts.advance(s);
    const auto* ns = st.find(SystemId::NavierStokes);
    ASSERT_NE(ns, nullptr);
    EXPECT_LE(ns->iterations, 40u);
    EXPECT_LE(st.divergence_norm, 10 * ns->threshold);
  }
}

TEST(Step, RejectsBadArguments) {
  EXPECT_THROW(Timestepper(nullptr, ModelParams{}, 1e-4), std::invalid_argument);
  EXPECT_THROW(Timestepper(interval(4), ModelParams{}, 0.0), std::invalid_argument);
}

TEST(Step, UnconvergedSolveRaisesStepError) {
  const auto d = interval(100);
  SolverConfig cfg;
  cfg.ch = {1e-14, 1e-30, 1};
  SimState s = initialize(*d, RunConfig::default_params(), {});
  Timestepper ts(d, RunConfig::default_params(), 1e-4, cfg);
  try {
    ts.advance(s);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.system(), SystemId::ChSolvent);
    EXPECT_FALSE(e.report().converged);
  }
}

TEST(Run, TmaxEqualToTauGivesOneStep) {
  RunConfig cfg;
  cfg.n_y = 20;
  cfg.t_max = cfg.tau;
  cfg.snapshot_times = {0.0};
  EXPECT_EQ(run(cfg).stats.size(), 1u);
}

TEST(Run, TwentyStepsGiveTwentyRowsPerSystem) {
  RunConfig cfg;
  cfg.params = full_params();
  cfg.initial = {0.33, 0.33, 0.01, 1};
  const auto r = run(cfg, {}, 20);
  ASSERT_EQ(r.stats.size(), 20u);
  for (auto id : {SystemId::ChPolymer, SystemId::ChNfa, SystemId::ChSolvent, SystemId::MuAir, SystemId::AllenCahn,
                  SystemId::NavierStokes}) {
    std::size_t rows = 0;
    for (const auto& st : r.stats) rows += st.find(id) != nullptr;
    EXPECT_EQ(rows, 20u) << system_name(id);
  }
}

TEST(Run, SnapshotsFireOncePerRequestedTime) {
  RunConfig cfg;
  cfg.n_y = 20;
  cfg.t_max = 10 * cfg.tau;
  cfg.snapshot_times = {0.0, 3e-4, 3e-4, 1e-3};
  std::vector<std::size_t> steps;
  RunObserver obs;
  obs.on_snapshot = [&](const SimState& s, std::size_t) { steps.push_back(s.step); };
  run(cfg, obs);
  EXPECT_EQ(steps, (std::vector<std::size_t>{0, 3, 10}));
}

TEST(Run, IdenticalConfigReproducesIdenticalLog) {
  RunConfig cfg;
  cfg.n_y = 50;
  auto log = [&]() {
    std::ostringstream os;
    const auto r = run(cfg, {}, 15);
    write_stats_rows(os, r.stats, {false, {}});
    return os.str();
  };
  EXPECT_EQ(log(), log());
}
