#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <algorithm>
#include <random>

#include "morpho/amg.hpp"
#include "morpho/assembly.hpp"

using namespace morpho;

namespace {

std::shared_ptr<const FESpace> interval_space(std::size_t n, double length) {
  return std::make_shared<const FESpace>(std::make_shared<const Mesh>(build_interval_mesh(n, length)), 1);
}

// Stiffness with both ends eliminated (SPD).
CsrMatrix dirichlet_poisson_1d(std::size_t n) {
  const auto space = interval_space(n, 1.0);
  CsrMatrix K = assemble_stiffness(*space);
  Vector rhs;
  const std::vector<std::size_t> ends{0, n};
  eliminate_columns(K, rhs, ends, 0.0);
  apply_dirichlet_row(K, 0);
  apply_dirichlet_row(K, n);
  return K;
}

CsrMatrix mass_plus_stiffness(const FESpace& space, double tg) {
  return add(assemble_mass(space), assemble_stiffness(space), 1.0, tg);
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double relative_residual(const CsrMatrix& A, std::span<const double> b, std::span<const double> x) {
  Vector r = A * x;
  axpy(-1.0, b, r);
  return norm2(r) / norm2(b);
}

}  // namespace

TEST(Amg, SmallMatrixIsSingleLevelAndExact) {
  const CsrMatrix A = dirichlet_poisson_1d(50);
  const AmgHierarchy h(A);
  EXPECT_EQ(h.level_count(), 1u);
  const Vector b = random_vector(A.rows(), 1);
  const auto r = h.solve(b, 1e-14, 1);
  EXPECT_LE(relative_residual(A, b, r.x), 1e-12);
}

TEST(Amg, PoissonThousandCoarsensByAtLeastTwo) {
  const AmgHierarchy h(dirichlet_poisson_1d(1000));
  ASSERT_GE(h.level_count(), 2u);
  for (std::size_t l = 0; l + 1 < h.level_count(); ++l)
    EXPECT_GE(h.level(l).A.rows(), 2 * h.level(l + 1).A.rows()) << "level " << l;
  EXPECT_LE(h.level(h.level_count() - 1).A.rows(), AmgOptions{}.coarse_cap);
}

TEST(Amg, GalerkinIdentityOnProbes) {
  const AmgHierarchy h(dirichlet_poisson_1d(1000));
  for (std::size_t l = 0; l + 1 < h.level_count(); ++l) {
    const auto& lev = h.level(l);
    const auto& coarse = h.level(l + 1).A;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Vector x = random_vector(coarse.cols(), seed);
      const Vector ref = coarse * x;
      const Vector rap = lev.R * (lev.A * (lev.P * x));
      Vector d = rap;
      axpy(-1.0, ref, d);
      EXPECT_LE(norm2(d), 1e-12 * std::max(1.0, norm2(ref)));
    }
  }
}

TEST(Amg, RestrictionIsTransposeOfProlongation) {
  const AmgHierarchy h(dirichlet_poisson_1d(600));
  ASSERT_GE(h.level_count(), 2u);
  const auto& lev = h.level(0);
  const CsrMatrix Pt = lev.P.transpose();
  for (std::size_t i = 0; i < Pt.rows(); ++i)
    for (std::size_t j = 0; j < Pt.cols(); j += 7) EXPECT_EQ(lev.R.at(i, j), Pt.at(i, j));
}

TEST(Amg, ZeroRightHandSideGivesZeroAfterOneCycle) {
  const AmgHierarchy h(dirichlet_poisson_1d(1000));
  const auto r = h.solve(Vector(h.size(), 0.0), 1e-8, 10);
  EXPECT_EQ(r.cycles, 1u);
  for (double v : r.x) EXPECT_EQ(v, 0.0);
}

TEST(Amg, MassPlusStiffnessConvergesQuickly) {
  const auto space = interval_space(400, 10.0);
  const CsrMatrix A = mass_plus_stiffness(*space, 1e-4);
  const AmgHierarchy h(A, AmgOptions{.coarse_cap = 50});
  const Vector b = random_vector(A.rows(), 5);
  const auto r = h.solve(b, 1e-4, 30);
  EXPECT_LE(r.cycles, 30u);
  EXPECT_LE(relative_residual(A, b, r.x), 1e-4);
}

TEST(Amg, ContractionBelowPointNineOnPoisson2D) {
  const auto space =
      std::make_shared<const FESpace>(std::make_shared<const Mesh>(build_rect_mesh(40, 40, 1.0, 1.0)), 1);
  CsrMatrix K = assemble_stiffness(*space);
  const auto bc = space->boundary_scalar_dofs();
  Vector none;
  eliminate_columns(K, none, bc, 0.0);
  for (auto d : bc) apply_dirichlet_row(K, d);
  const AmgHierarchy h(K);
  ASSERT_GE(h.level_count(), 2u);
  // asymptotic residual reduction for b = 0 from a random start
  const Vector b(K.rows(), 0.0);
  Vector x = random_vector(K.rows(), 9);
  double prev = norm2(K * x), factor = 0.0;
  for (int k = 0; k < 8; ++k) {
    h.vcycle(b, x);
    const double cur = norm2(K * x);
    factor = cur / prev;
    prev = cur;
  }
  EXPECT_LT(factor, 0.9);
}

TEST(Amg, BlockedNearNullSpaceKeepsComponentsApart) {
  const auto space = interval_space(800, 1.0);
  const CsrMatrix A1 = mass_plus_stiffness(*space, 1e-3);
  const CsrMatrix A = block_matrix({{&A1, nullptr}, {nullptr, &A1}});
  const AmgHierarchy h(A, NearNullSpace::blocked_constants(A.rows(), 2), AmgOptions{.coarse_cap = 50});
  ASSERT_GE(h.level_count(), 2u);
  const Vector b = random_vector(A.rows(), 4);
  const auto r = h.solve(b, 1e-6, 50);
  EXPECT_LE(relative_residual(A, b, r.x), 1e-6);
}

TEST(Amg, CalibratedCyclesAreBounded) {
  const auto space = interval_space(2000, 10.0);
  const auto h = std::make_shared<const AmgHierarchy>(mass_plus_stiffness(*space, 1e-4));
  const std::size_t c = calibrate_cycles(*h, 1e-4);
  EXPECT_GE(c, 1u);
  EXPECT_LE(c, 10u);
  const auto op = amg_operator(h, c);
  EXPECT_EQ(op.rows(), h->size());
}

TEST(Amg, RejectsZeroDiagonalAndBadNearNullSpace) {
  TripletBuilder T(3, 3);
  T.add(0, 0, 1.0);
  T.add(1, 2, 1.0);
  T.add(2, 1, 1.0);
  T.add(2, 2, 1.0);
  EXPECT_THROW(AmgHierarchy(T.build()), std::invalid_argument);
  EXPECT_THROW(AmgHierarchy(CsrMatrix::identity(4), NearNullSpace::constant(3)), std::invalid_argument);
}

TEST(Amg, StrengthGraphIsSymmetric) {
  const CsrMatrix A = dirichlet_poisson_1d(30);
  const auto g = detail::strength_graph(A, std::vector<int>(A.rows(), 0), 0.08);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (auto j : g[i]) {
      EXPECT_NE(i, j);
      EXPECT_NE(std::find(g[j].begin(), g[j].end(), i), g[j].end());
    }
}

TEST(Amg, AggregationCoversEveryConnectedNode) {
  const CsrMatrix A = dirichlet_poisson_1d(100);
  const auto g = detail::strength_graph(A, std::vector<int>(A.rows(), 0), 0.08);
  std::size_t count = 0;
  const auto agg = detail::aggregate(g, count);
  ASSERT_EQ(agg.size(), A.rows());
  EXPECT_GT(count, 0u);
  EXPECT_LT(count, A.rows());
  // the eliminated end rows have no strong links and are left to the smoother
  for (std::size_t i = 0; i < agg.size(); ++i) {
    if (g[i].empty())
      EXPECT_EQ(agg[i], detail::kUnaggregated);
    else
      EXPECT_LT(agg[i], count);
  }
}
