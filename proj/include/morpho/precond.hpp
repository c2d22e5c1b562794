#pragma once

/// Block preconditioners: matched Schur complement for Cahn-Hilliard, AMG for
/// Allen-Cahn and pressure-convection-diffusion for Navier-Stokes.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morpho/amg.hpp"
#include "morpho/assembly.hpp"
#include "morpho/gmres.hpp"
#include "morpho/sparse.hpp"

namespace morpho {

/// How an approximate inverse is produced from an AMG hierarchy.
struct InnerSolveOptions {
  double amg_tol = 1e-4;
  std::size_t max_cycles = 10;
  AmgOptions amg;
};

/// AMG hierarchy plus the fixed cycle count applied per preconditioner call.
struct AmgInverse {
  std::shared_ptr<const AmgHierarchy> hierarchy;
  std::size_t cycles = 1;

  static AmgInverse build(const CsrMatrix& A, NearNullSpace nns, const InnerSolveOptions& opt) {
    AmgInverse inv;
    inv.hierarchy = std::make_shared<const AmgHierarchy>(A, std::move(nns), opt.amg);
    inv.cycles = inv.hierarchy->level_count() == 1 ? 1 : calibrate_cycles(*inv.hierarchy, opt.amg_tol, opt.max_cycles);
    return inv;
  }
  static AmgInverse build(const CsrMatrix& A, const InnerSolveOptions& opt) {
    return build(A, NearNullSpace::constant(A.rows()), opt);
  }

  std::size_t size() const { return hierarchy->size(); }

  void apply(std::span<const double> b, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t k = 0; k < cycles; ++k) hierarchy->vcycle(b, x);
  }

  LinearOperator op() const { return amg_operator(hierarchy, cycles); }
};

/// X = tau gamma K + sqrt(tau gamma / beta) M.
inline CsrMatrix matching_operator(const CsrMatrix& M, const CsrMatrix& K, double tau, double gamma, double beta) {
  return add(K, M, tau * gamma, std::sqrt(tau * gamma / beta));
}

/// diag(L, S~) with L = M + tau C and S~ = X M^-1 X, applied as
/// (L^-1, X^-1 M X^-1) through AMG.
struct PrecondCH {
  double tau = 0.0, gamma = 0.0, beta = 0.0;
  double schur_sign = 1.0;
  AmgInverse L;
  std::shared_ptr<const AmgInverse> X;
  std::shared_ptr<const CsrMatrix> M;
  Vector lumped_mass;

  std::size_t block_size() const { return M->rows(); }

  void apply(std::span<const double> r, std::span<double> y) const {
    const std::size_t n = block_size();
    if (r.size() != 2 * n || y.size() != 2 * n) throw std::invalid_argument("apply_precond_ch: length mismatch");
    L.apply(r.first(n), y.first(n));
    Vector t(n), u(n);
    X->apply(r.subspan(n), t);
    M->multiply(t, u);
    auto ym = y.subspan(n);
    X->apply(u, ym);
    if (schur_sign != 1.0)
      for (auto& v : ym) v *= schur_sign;
  }

  // The returned operator refers to *this.
  LinearOperator op() const {
    const std::size_t n = 2 * block_size();
    return {n, n, [this](std::span<const double> r, std::span<double> y) { apply(r, y); }};
  }
};

/// The X hierarchy depends only on (M, K, tau, gamma, beta); pass a cached one to skip rebuilding it.
inline PrecondCH build_precond_ch(std::shared_ptr<const CsrMatrix> M, const CsrMatrix& K, const CsrMatrix& C,
                                  double tau, double gamma, double beta, const InnerSolveOptions& opt = {},
                                  std::shared_ptr<const AmgInverse> x_cache = nullptr) {
  if (!(tau > 0.0) || !(gamma > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("build_precond_ch: tau, gamma and beta must be positive");
  if (!M || M->rows() != K.rows() || M->rows() != C.rows())
    throw std::invalid_argument("build_precond_ch: matrices live on different spaces");
  PrecondCH P;
  P.tau = tau;
  P.gamma = gamma;
  P.beta = beta;
  P.L = AmgInverse::build(add(*M, C, 1.0, tau), opt);
  P.X = x_cache ? std::move(x_cache)
                : std::make_shared<const AmgInverse>(AmgInverse::build(matching_operator(*M, K, tau, gamma, beta), opt));
  P.lumped_mass = M->row_sums();
  for (double v : P.lumped_mass)
    if (!(v > 0.0)) throw std::invalid_argument("build_precond_ch: lumped mass must be positive");
  P.M = std::move(M);
  return P;
}

inline Vector apply_precond_ch(const PrecondCH& P, std::span<const double> r) {
  Vector y(r.size());
  P.apply(r, y);
  return y;
}

/// AMG of M + tau delta K + tau C.
inline AmgInverse build_precond_ac(const CsrMatrix& M, const CsrMatrix& K, const CsrMatrix& C, double tau,
                                   double delta_v, const InnerSolveOptions& opt = {}) {
  if (!(tau > 0.0) || !(delta_v > 0.0)) throw std::invalid_argument("build_precond_ac: tau and delta_v must be positive");
  return AmgInverse::build(add(add(M, K, 1.0, tau * delta_v), C, 1.0, tau), opt);
}

/// Zero row and column `pin` and put 1 on its diagonal.
inline void pin_symmetric(CsrMatrix& A, std::size_t pin) {
  if (pin >= A.rows()) throw std::out_of_range("pin_symmetric: index out of range");
  Vector dummy;
  const std::size_t idx[1] = {pin};
  eliminate_columns(A, dummy, idx, 0.0);
  apply_dirichlet_row(A, pin);
}

enum class MassSolve { Amg, Lumped };

struct PcdOptions {
  InnerSolveOptions inner;
  MassSolve mass_solve = MassSolve::Amg;
  double schur_sign = 1.0;
  std::size_t pin = 0;
};

/// A_p = (rho_mean / tau) M_p + 2 eta K_p + C_p(wind), unpinned.
inline CsrMatrix assemble_pcd_operator(const FESpace& pspace, const Wind& wind, double rho_mean, double tau,
                                       double eta, int quad_degree = kDefaultQuadratureDegree) {
  const CsrMatrix Mp = assemble_mass(pspace, nullptr, quad_degree);
  const CsrMatrix Kp = assemble_stiffness(pspace, quad_degree);
  const CsrMatrix Cp = assemble_convection(pspace, wind, quad_degree);
  return add(add(Mp, Kp, rho_mean / tau, 2.0 * eta), Cp);
}

/// Inverses of the pinned pressure stiffness and mass matrices; these depend
/// only on the mesh and can be reused across steps.
struct PressureSolvers {
  AmgInverse stiffness;
  std::optional<AmgInverse> mass;  // MassSolve::Amg
  Vector mass_diag_inv;            // MassSolve::Lumped
  std::size_t pin = 0;

  std::size_t size() const { return stiffness.size(); }

  void apply_mass_inverse(std::span<const double> t, std::span<double> y) const {
    if (mass) {
      mass->apply(t, y);
    } else {
      for (std::size_t i = 0; i < t.size(); ++i) y[i] = mass_diag_inv[i] * t[i];
    }
  }
};

inline std::shared_ptr<const PressureSolvers> build_pressure_solvers(CsrMatrix Kp, CsrMatrix Mp, const PcdOptions& opt = {}) {
  if (Kp.rows() != Mp.rows()) throw std::invalid_argument("build_pressure_solvers: size mismatch");
  auto ps = std::make_shared<PressureSolvers>();
  ps->pin = opt.pin;
  pin_symmetric(Kp, opt.pin);
  pin_symmetric(Mp, opt.pin);
  ps->stiffness = AmgInverse::build(Kp, opt.inner);
  if (opt.mass_solve == MassSolve::Amg) {
    ps->mass = AmgInverse::build(Mp, opt.inner);
  } else {
    ps->mass_diag_inv = Mp.row_sums();
    for (auto& v : ps->mass_diag_inv) v = 1.0 / v;
  }
  return ps;
}

/// diag(A, S^) with S^-1 = M_p^-1 A_p K_p^-1. All pressure matrices are
/// pinned symmetrically at one dof, whose residual passes through unchanged.
struct PrecondNS {
  AmgInverse velocity;
  std::shared_ptr<const PressureSolvers> pressure;
  CsrMatrix convection_diffusion;  // A_p, pinned
  double schur_sign = 1.0;

  std::size_t velocity_size() const { return velocity.size(); }
  std::size_t pressure_size() const { return convection_diffusion.rows(); }

  void apply_schur_inverse(std::span<const double> r, std::span<double> y) const {
    const std::size_t np = pressure_size();
    Vector z(np), t(np);
    pressure->stiffness.apply(r, z);
    convection_diffusion.multiply(z, t);
    pressure->apply_mass_inverse(t, y);
    for (auto& v : y) v *= schur_sign;
    y[pressure->pin] = r[pressure->pin];
  }

  void apply(std::span<const double> r, std::span<double> y) const {
    const std::size_t nv = velocity_size(), np = pressure_size();
    if (r.size() != nv + np || y.size() != nv + np) throw std::invalid_argument("apply_precond_ns: length mismatch");
    velocity.apply(r.first(nv), y.first(nv));
    apply_schur_inverse(r.subspan(nv), y.subspan(nv));
  }

  // The returned operator refers to *this.
  LinearOperator op() const {
    const std::size_t n = velocity_size() + pressure_size();
    return {n, n, [this](std::span<const double> r, std::span<double> y) { apply(r, y); }};
  }
};

/// A is the velocity block with boundary rows already constrained; A_p is the
/// unpinned convection-diffusion operator on the pressure space.
inline PrecondNS build_precond_ns(const CsrMatrix& A, int velocity_components, CsrMatrix Ap,
                                  std::shared_ptr<const PressureSolvers> pressure, const PcdOptions& opt = {}) {
  if (!pressure || pressure->size() != Ap.rows()) throw std::invalid_argument("build_precond_ns: pressure size mismatch");
  PrecondNS P;
  P.schur_sign = opt.schur_sign;
  P.velocity = AmgInverse::build(A, NearNullSpace::blocked_constants(A.rows(), velocity_components), opt.inner);
  pin_symmetric(Ap, pressure->pin);
  P.convection_diffusion = std::move(Ap);
  P.pressure = std::move(pressure);
  return P;
}

inline PrecondNS build_precond_ns(const CsrMatrix& A, int velocity_components, CsrMatrix Kp, CsrMatrix Mp,
                                  CsrMatrix Ap, const PcdOptions& opt = {}) {
  return build_precond_ns(A, velocity_components, std::move(Ap),
                          build_pressure_solvers(std::move(Kp), std::move(Mp), opt), opt);
}

inline Vector apply_precond_ns(const PrecondNS& P, std::span<const double> r) {
  Vector y(r.size());
  P.apply(r, y);
  return y;
}

}  // namespace morpho
