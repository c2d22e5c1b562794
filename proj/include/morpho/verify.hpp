#pragma once

/// Built-in oracle checks: element matrices against hand integration,
/// potential derivatives against finite differences, the Schur matching
/// bound and Poisson convergence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "morpho/amg.hpp"
#include "morpho/assembly.hpp"
#include "morpho/energy.hpp"
#include "morpho/gmres.hpp"
#include "morpho/mesh.hpp"

namespace morpho {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline double max_entry_error(const CsrMatrix& A, const std::vector<std::vector<double>>& ref) {
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    for (std::size_t j = 0; j < ref[i].size(); ++j) err = std::max(err, std::abs(A.at(i, j) - ref[i][j]));
  return err;
}

inline Eigen::MatrixXd to_dense(const CsrMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto c = A.row_columns(i);
    auto v = A.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c[k])) = v[k];
  }
  return D;
}

}  // namespace detail

/// Single-cell mass and stiffness matrices for P1 in 1D and 2D.
inline CheckResult check_element_matrices(double tol = 1e-12) {
  double err = 0.0;
  {
    const double h = 0.7;
    auto space = std::make_shared<const FESpace>(std::make_shared<const Mesh>(build_interval_mesh(1, h)), 1);
    err = std::max(err, detail::max_entry_error(assemble_mass(*space), {{h / 3, h / 6}, {h / 6, h / 3}}));
    err = std::max(err, detail::max_entry_error(assemble_stiffness(*space), {{1 / h, -1 / h}, {-1 / h, 1 / h}}));
  }
  {
    // one right triangle (0,0),(1,0),(0,1): area 1/2
    Mesh m(2, {{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {}, {1, 1});
    auto space = std::make_shared<const FESpace>(std::make_shared<const Mesh>(std::move(m)), 1);
    const double a = 1.0 / 24.0, b = 1.0 / 12.0;
    err = std::max(err, detail::max_entry_error(assemble_mass(*space), {{b, a, a}, {a, b, a}, {a, a, b}}));
    err = std::max(err, detail::max_entry_error(assemble_stiffness(*space),
                                                {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}}));
  }
  std::ostringstream os;
  os << "max entry error " << err;
  return {"element matrices", err <= tol, os.str()};
}

/// Central differences (step 1e-6) of f_loc at random admissible points for
/// both potentials; relative error max|a - fd| / max(|a|, 1).
inline CheckResult check_energy_derivatives(std::size_t points = 100, double tol = 1e-6, std::uint64_t seed = 2024) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (auto kind : {PotentialKind::FloryTaylor4, PotentialKind::FittedPoly}) {
    ModelParams prm;
    prm.potential = kind;
    prm.model = ModelKind::Full;
    for (std::size_t k = 0; k < points; ++k) {
      // uniform on the simplex, kept away from the faces by the step size
      std::array<double, 4> e{};
      double sum = 0.0;
      for (auto& v : e) sum += (v = -std::log(std::max(u(rng), 1e-300)));
      PhasePoint pt{0.01 + 0.96 * e[0] / sum, 0.01 + 0.96 * e[1] / sum, 0.01 + 0.96 * e[2] / sum,
                    0.01 + 0.98 * u(rng)};
      const auto phi = pt.fractions();
      const double w = interp_p(pt.vapor);
      auto f4 = [&](const SpeciesArray& x) { return (1.0 - w) * f_liq(x, prm) + w * f_gas(x, prm); };
      auto rel = [](double a, double fd) { return std::abs(a - fd) / std::max(std::abs(a), 1.0); };
      for (std::size_t i = 0; i < kSpeciesCount; ++i) {
        SpeciesArray xp = phi, xm = phi;
        xp[i] += h;
        xm[i] -= h;
        worst = std::max(worst, rel(dfdphi(pt, i, prm), (f4(xp) - f4(xm)) / (2 * h)));
      }
      for (std::size_t i = 0; i < kSolvedSpecies; ++i) {
        PhasePoint pp = pt, pm = pt;
        (i == 0 ? pp.polymer : i == 1 ? pp.nfa : pp.solvent) += h;
        (i == 0 ? pm.polymer : i == 1 ? pm.nfa : pm.solvent) -= h;
        worst = std::max(worst, rel(reduced_dfdphi(pt, i, prm), (f_loc(pp, prm) - f_loc(pm, prm)) / (2 * h)));
      }
      PhasePoint vp = pt, vm = pt;
      vp.vapor += h;
      vm.vapor -= h;
      worst = std::max(worst, rel(dfdPhiv(pt, prm), (f_loc(vp, prm) - f_loc(vm, prm)) / (2 * h)));
    }
  }
  std::ostringstream os;
  os << "worst relative error " << worst << " over " << points << " points per potential";
  return {"energy derivatives", worst <= tol, os.str()};
}

/// Generalized eigenvalues of S x = lambda S~ x with S = aM + b^2 K M^-1 K and
/// S~ = X M^-1 X, X = bK + sqrt(a) M, a = tau gamma / beta, b = tau gamma.
struct SchurBound {
  double min_eig = 0.0;
  double max_eig = 0.0;
};

inline SchurBound schur_matching_eigenvalues(std::size_t n, double length, double tau, double gamma, double beta) {
  auto space = std::make_shared<const FESpace>(std::make_shared<const Mesh>(build_interval_mesh(n, length)), 1);
  const Eigen::MatrixXd M = detail::to_dense(assemble_mass(*space));
  const Eigen::MatrixXd K = detail::to_dense(assemble_stiffness(*space));
  const double a = tau * gamma / beta, b = tau * gamma;
  const Eigen::MatrixXd Minv_K = M.ldlt().solve(K);
  Eigen::MatrixXd S = a * M + b * b * K * Minv_K;
  const Eigen::MatrixXd X = b * K + std::sqrt(a) * M;
  Eigen::MatrixXd St = X * M.ldlt().solve(X);
  S = 0.5 * (S + S.transpose()).eval();
  St = 0.5 * (St + St.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, St);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

inline CheckResult check_schur_matching(const std::vector<std::size_t>& sizes = {10, 30, 60}, double tau = 1e-4,
                                        double gamma = 1.0, double beta = 0.1, double slack = 1e-8) {
  bool ok = true;
  std::ostringstream os;
  for (auto n : sizes) {
    const auto r = schur_matching_eigenvalues(n, 10.0, tau, gamma, beta);
    ok = ok && r.min_eig >= 0.5 - slack && r.max_eig <= 1.0 + slack;
    os << "n=" << n << ": [" << r.min_eig << ", " << r.max_eig << "] ";
  }
  return {"schur matching bound", ok, os.str()};
}

/// L2 errors of P1 solutions of -lap u = f, u = sin(pi x) sin(pi y) on the unit square.
inline std::vector<double> poisson_l2_errors(const std::vector<std::size_t>& sizes) {
  using std::numbers::pi;
  std::vector<double> errors;
  for (auto n : sizes) {
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(n, n, 1.0, 1.0));
    auto space = std::make_shared<const FESpace>(mesh, 1);
    auto exact = [](const Point& p) { return std::sin(pi * p[0]) * std::sin(pi * p[1]); };
    CsrMatrix K = assemble_stiffness(*space);
    // load vector with a degree-6 rule
    Vector rhs(space->dof_count(), 0.0);
    const auto& rule = simplex_rule(2, 6);
    for (std::size_t c = 0; c < mesh->cell_count(); ++c) {
      const auto g = CellGeometry::of(*mesh, c);
      const auto& v = mesh->cell(c);
      for (const auto& q : rule) {
        Point x{0, 0};
        for (int k = 0; k < 3; ++k)
          for (int d = 0; d < 2; ++d) x[d] += q.bary[k] * mesh->node(v[k])[d];
        const double f = 2 * pi * pi * exact(x);
        for (int k = 0; k < 3; ++k) rhs[v[k]] += q.weight * g.measure * f * q.bary[k];
      }
    }
    const auto bc = space->boundary_scalar_dofs();
    eliminate_columns(K, rhs, bc, 0.0);
    apply_dirichlet(K, rhs, bc, 0.0);
    const AmgHierarchy amg(K);
    const auto P = amg_operator(std::make_shared<const AmgHierarchy>(amg), 1);
    const auto sol = gmres(LinearOperator::from_matrix(K), rhs, &P, {1e-13, 1e-15, 1000});
    double err2 = 0.0;
    for (std::size_t c = 0; c < mesh->cell_count(); ++c) {
      const auto g = CellGeometry::of(*mesh, c);
      const auto& v = mesh->cell(c);
      for (const auto& q : rule) {
        Point x{0, 0};
        double uh = 0.0;
        for (int k = 0; k < 3; ++k) {
          for (int d = 0; d < 2; ++d) x[d] += q.bary[k] * mesh->node(v[k])[d];
          uh += q.bary[k] * sol.x[v[k]];
        }
        err2 += q.weight * g.measure * std::pow(uh - exact(x), 2);
      }
    }
    errors.push_back(std::sqrt(err2));
  }
  return errors;
}

inline CheckResult check_poisson_convergence(double min_rate = 1.9) {
  const auto e = poisson_l2_errors({8, 16, 32, 64});
  bool ok = true;
  std::ostringstream os;
  os << "rates:";
  for (std::size_t k = 1; k < e.size(); ++k) {
    const double rate = std::log2(e[k - 1] / e[k]);
    ok = ok && rate >= min_rate;
    os << ' ' << rate;
  }
  return {"poisson P1 convergence", ok, os.str()};
}

inline std::vector<CheckResult> run_verification_suite() {
  return {check_element_matrices(), check_energy_derivatives(), check_schur_matching(), check_poisson_convergence()};
}

}  // namespace morpho
