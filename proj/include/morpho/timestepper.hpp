#pragma once

/// Semi-implicit time stepping: three Cahn-Hilliard solves, air potential
/// recovery, Allen-Cahn and Navier-Stokes per step.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morpho/amg.hpp"
#include "morpho/assembly.hpp"
#include "morpho/energy.hpp"
#include "morpho/gmres.hpp"
#include "morpho/precond.hpp"
#include "morpho/sparse.hpp"
#include "morpho/state.hpp"

namespace morpho {

struct SolverConfig {
  GmresOptions ch{1e-6, 1e-8, 500};
  GmresOptions ac{1e-6, 1e-8, 500};
  GmresOptions ns{1e-4, 1e-8, 500};
  InnerSolveOptions inner;
  MassSolve pressure_mass = MassSolve::Amg;
  double ch_schur_sign = 1.0;
  double ns_schur_sign = 1.0;
  int quad_degree = kDefaultQuadratureDegree;
};

enum class SystemId { ChPolymer, ChNfa, ChSolvent, MuAir, AllenCahn, NavierStokes };

inline const char* system_name(SystemId s) {
  switch (s) {
    case SystemId::ChPolymer: return "ch_p";
    case SystemId::ChNfa: return "ch_nfa";
    case SystemId::ChSolvent: return "ch_s";
    case SystemId::MuAir: return "mu_a";
    case SystemId::AllenCahn: return "ac";
    case SystemId::NavierStokes: return "ns";
  }
  return "?";
}

struct SystemReport {
  SystemId system;
  SolveReport report;
};

struct StepStats {
  std::size_t step = 0;  // index of the new time level
  double time = 0.0;
  std::vector<SystemReport> systems;
  double assembly_seconds = 0.0;
  double solvent_mass = 0.0;
  double divergence_norm = 0.0;  // ||B v|| after the NS solve

  const SolveReport* find(SystemId s) const {
    for (const auto& r : systems)
      if (r.system == s) return &r.report;
    return nullptr;
  }
};

class StepError : public SolverError {
 public:
  StepError(SystemId system, std::size_t step, const SolveReport& report)
      : SolverError(std::string("step ") + std::to_string(step) + ": " + system_name(system) +
                        " GMRES did not converge (iterations " + std::to_string(report.iterations) +
                        ", residual " + std::to_string(report.residual_norm) + ")",
                    report),
        system_(system) {}
  SystemId system() const { return system_; }

 private:
  SystemId system_;
};

struct InitialCondition {
  double a = 0.0;  // polymer and NFA fraction in the film
  double b = 1.0;  // solvent fraction in the film
  double amplitude = 0.01;
  std::uint64_t seed = 1;
  double film_fraction = 0.5;  // film occupies this fraction of the height; 1 fills the domain

  void validate() const {
    if (a < 0.0 || b < 0.0 || 2.0 * a + b > 1.0 + 1e-12)
      throw std::invalid_argument("initial condition: need a, b >= 0 and 2a + b <= 1");
    if (!(film_fraction > 0.0 && film_fraction <= 1.0))
      throw std::invalid_argument("initial condition: film_fraction must lie in (0, 1]");
  }
};

/// Film (height below film_fraction of the domain): phi_p = phi_NFA = a +- amp,
/// phi_s = b +- amp, Phi_v = 0; vapor above. Fields are clamped, then the
/// potentials are set from the nodal potential derivatives.
inline SimState initialize(const Discretization& disc, const ModelParams& prm, const InitialCondition& ic) {
  ic.validate();
  SimState s(disc);
  s.seed = ic.seed;
  std::mt19937_64 rng(ic.seed);
  std::uniform_real_distribution<double> noise(-ic.amplitude, ic.amplitude);
  const auto& mesh = *disc.mesh;
  const double film = ic.film_fraction * mesh.height();
  const bool full = prm.model == ModelKind::Full;
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (ic.film_fraction >= 1.0 || mesh.vertical_coordinate(mesh.node(n)) < film) {
      const double np = noise(rng), nn = noise(rng), ns = noise(rng);
      s.phi[0][n] = full ? clamp_unit(ic.a + np) : 0.0;
      s.phi[1][n] = full ? clamp_unit(ic.a + nn) : 0.0;
      s.phi[2][n] = clamp_unit(ic.b + ns);
      s.vapor[n] = 0.0;
    } else {
      s.vapor[n] = 1.0;
    }
  }
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const auto pt = s.point(n);
    for (std::size_t i = 0; i < kSolvedSpecies; ++i) s.mu[i][n] = reduced_dfdphi(pt, i, prm);
    s.mu[3][n] = dfdphi(pt, Species::Air, prm);
  }
  return s;
}

/// P1 node closest to the midpoint of the top boundary (ties: lowest index).
inline std::size_t top_reference_node(const Mesh& mesh) {
  Point target{};
  if (mesh.dim() == 1) {
    target = {mesh.height(), 0.0};
  } else {
    target = {0.5 * mesh.extent()[0], mesh.extent()[1]};
  }
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    const auto& p = mesh.node(n);
    const double d = std::hypot(p[0] - target[0], p[1] - target[1]);
    if (d < bd - 1e-12) {
      bd = d;
      best = n;
    }
  }
  return best;
}

class Timestepper {
 public:
  Timestepper(std::shared_ptr<const Discretization> disc, ModelParams prm, double tau, SolverConfig cfg = {})
      : disc_(std::move(disc)), prm_(std::move(prm)), tau_(tau), cfg_(std::move(cfg)) {
    if (!disc_) throw std::invalid_argument("Timestepper: null discretization");
    if (!(tau_ > 0.0)) throw std::invalid_argument("Timestepper: tau must be positive");
    prm_.validate();
    const int q = cfg_.quad_degree;
    const auto& S = *disc_->scalar;
    M_ = std::make_shared<const CsrMatrix>(assemble_mass(S, nullptr, q));
    K_ = assemble_stiffness(S, q);
    mass_vector_ = M_->row_sums();
    top_load_ = assemble_boundary_load(disc_->scalar, BoundaryTag::Top, 1.0).values();
    ref_node_ = top_reference_node(*disc_->mesh);
    for (std::size_t i = 0; i < kSolvedSpecies; ++i)
      if (prm_.species_active(i))
        x_cache_[i] = std::make_shared<const AmgInverse>(AmgInverse::build(
            matching_operator(*M_, K_, tau_, prm_.gamma[i], prm_.beta[i]), cfg_.inner));
    mass_inverse_ = AmgInverse::build(*M_, cfg_.inner);
    zero_wind_L_ = mass_inverse_;

    const auto& V = *disc_->velocity;
    const auto& P = *disc_->pressure;
    viscous_ = assemble_sym_grad(V, prm_.eta, q);
    B_ = assemble_divergence(V, P, q);
    for (auto d : V.boundary_scalar_dofs())
      for (int c = 0; c < V.components(); ++c) velocity_bc_.push_back(V.component_dof(d, c));
    PcdOptions pcd;
    pcd.inner = cfg_.inner;
    pcd.mass_solve = cfg_.pressure_mass;
    pcd.schur_sign = cfg_.ns_schur_sign;
    pressure_solvers_ = build_pressure_solvers(assemble_stiffness(P, q), assemble_mass(P, nullptr, q), pcd);
    pcd_ = pcd;
  }

  const Discretization& discretization() const { return *disc_; }
  const ModelParams& params() const { return prm_; }
  double tau() const { return tau_; }
  const CsrMatrix& mass() const { return *M_; }
  const CsrMatrix& stiffness() const { return K_; }
  const CsrMatrix& divergence() const { return B_; }
  std::size_t reference_node() const { return ref_node_; }

  /// int u dx for a P1 field.
  double integral(std::span<const double> u) const { return dot(mass_vector_, u); }
  double solvent_mass(const SimState& s) const { return integral(s.phi[2].values()); }

  /// Advance one step; `s` is replaced by the new time level.
  StepStats advance(SimState& s) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    double solve_seconds = 0.0;
    const std::size_t n = s.node_count();
    const int q = cfg_.quad_degree;
    const auto& disc = *disc_;
    StepStats st;
    st.step = s.step + 1;
    st.time = s.time + tau_;

    auto record = [&](SystemId id, const SolveReport& rep) {
      if (!rep.converged) throw StepError(id, st.step, rep);
      solve_seconds += rep.wall_time;
      st.systems.push_back({id, rep});
    };

    // (1) explicit data from level k
    const bool still = std::all_of(s.velocity.values().begin(), s.velocity.values().end(),
                                   [](double v) { return v == 0.0; });
    const CsrMatrix C = assemble_convection(*disc.scalar, s.velocity, q);
    const NonlinearLoads loads = assemble_nonlinear_loads(s, disc, prm_, q);
    const double jout = jout_flux(s.phi[2][ref_node_], prm_);
    const std::size_t air = idx(Species::Air);
    FieldVector rho(disc.scalar);
    for (std::size_t a = 0; a < n; ++a) rho[a] = mixture_density(s.point(a), prm_);

    // (2)-(3) Cahn-Hilliard for polymer, NFA, solvent
    const CsrMatrix L = add(*M_, C, 1.0, tau_);
    for (std::size_t i = 0; i < kSolvedSpecies; ++i) {
      if (!prm_.species_active(i)) continue;
      const double tg = tau_ * prm_.gamma[i];
      const double ratio = tg / prm_.beta[i];
      CsrMatrix Kt = K_;
      Kt.scale(tg);
      CsrMatrix Mr = *M_;
      Mr.scale(-ratio);
      const CsrMatrix A = block_matrix({{&L, &Kt}, {&Kt, &Mr}});
      Vector rhs(2 * n, 0.0);
      M_->multiply(s.phi[i].values(), std::span<double>(rhs).first(n));
      for (std::size_t a = 0; a < n; ++a) {
        double f = loads.species[i][a] - loads.species[air][a];
        if (i == idx(Species::Solvent)) f -= prm_.beta[i] * jout * top_load_[a];
        rhs[n + a] = -ratio * f;
      }
      PrecondCH P;
      if (still) {
        P.tau = tau_;
        P.gamma = prm_.gamma[i];
        P.beta = prm_.beta[i];
        P.L = zero_wind_L_;
        P.X = x_cache_[i];
        P.M = M_;
        P.lumped_mass = mass_vector_;
      } else {
        P = build_precond_ch(M_, K_, C, tau_, prm_.gamma[i], prm_.beta[i], cfg_.inner, x_cache_[i]);
      }
      P.schur_sign = cfg_.ch_schur_sign;
      Vector x0(2 * n);
      std::copy(s.phi[i].values().begin(), s.phi[i].values().end(), x0.begin());
      std::copy(s.mu[i].values().begin(), s.mu[i].values().end(), x0.begin() + static_cast<std::ptrdiff_t>(n));
      const auto Pop = P.op();
      auto res = gmres(LinearOperator::from_matrix(A), rhs, &Pop, cfg_.ch, x0);
      record(static_cast<SystemId>(i), res.report);
      for (std::size_t a = 0; a < n; ++a) {
        s.phi[i][a] = clamp_unit(res.x[a]);
        s.mu[i][a] = res.x[n + a];
      }
    }

    // (4) air potential: M mu_a = f_a + beta_a K phi_a + beta_a j_out b_top
    {
      const Vector phi_a = s.air_field();
      Vector rhs(n);
      K_.multiply(phi_a, rhs);
      for (std::size_t a = 0; a < n; ++a)
        rhs[a] = loads.species[air][a] + prm_.beta[air] * (rhs[a] + jout * top_load_[a]);
      const auto Pop = mass_inverse_.op();
      auto res = gmres(LinearOperator::from_matrix(M_), rhs, &Pop, cfg_.ch, s.mu[air].values());
      record(SystemId::MuAir, res.report);
      s.mu[air].values() = std::move(res.x);
    }

    // (5) Allen-Cahn for the vapor indicator
    {
      const CsrMatrix A = add(add(*M_, K_, 1.0, tau_ * prm_.delta_v), C, 1.0, tau_);
      Vector rhs(n);
      M_->multiply(s.vapor.values(), rhs);
      axpy(-tau_ * prm_.gamma_v, loads.vapor, rhs);
      const AmgInverse P = AmgInverse::build(A, cfg_.inner);
      const auto Pop = P.op();
      auto res = gmres(LinearOperator::from_matrix(A), rhs, &Pop, cfg_.ac, s.vapor.values());
      record(SystemId::AllenCahn, res.report);
      for (std::size_t a = 0; a < n; ++a) s.vapor[a] = clamp_unit(res.x[a]);
    }

    // (6) Navier-Stokes with the level-k density and the freshest potentials
    solve_navier_stokes(s, rho, loads, st, record);

    s.step = st.step;
    s.time = st.time;
    st.solvent_mass = solvent_mass(s);
    const double total = std::chrono::duration<double>(clock::now() - t_start).count();
    st.assembly_seconds = std::max(0.0, total - solve_seconds);
    return st;
  }

  std::pair<SimState, StepStats> step(const SimState& s) {
    SimState next = s;
    StepStats st = advance(next);
    return {std::move(next), std::move(st)};
  }

 private:
  template <class Record>
  void solve_navier_stokes(SimState& s, const FieldVector& rho, const NonlinearLoads& loads, StepStats& st,
                           Record& record) {
    const auto& disc = *disc_;
    const auto& V = *disc.velocity;
    const int q = cfg_.quad_degree;
    const std::size_t nv = V.dof_count(), np = disc.pressure->dof_count();
    const double rho_mean = integral(rho.values()) / integral(Vector(rho.size(), 1.0));

    Wind wind;
    wind.velocity = &s.velocity;
    wind.density = &rho;
    for (std::size_t i = 0; i < kSpeciesCount; ++i)
      if (prm_.species_active(i) && prm_.alpha[i] != 0.0) wind.gradient_terms.emplace_back(prm_.alpha[i], &s.mu[i]);

    const CsrMatrix Mrho = assemble_mass(V, &rho, q);
    CsrMatrix A = add(add(Mrho, assemble_convection(V, wind, q), 1.0 / tau_, 1.0), viscous_);
    Vector rhs(nv + np, 0.0);
    std::span<double> rv(rhs.data(), nv);
    Mrho.multiply(s.velocity.values(), rv);
    for (std::size_t a = 0; a < nv; ++a) rv[a] = rv[a] / tau_ + loads.stress[a];

    eliminate_columns(A, rv, velocity_bc_, 0.0);
    apply_dirichlet(A, rv, velocity_bc_, 0.0);
    CsrMatrix B = B_;
    eliminate_columns(B, {}, velocity_bc_, 0.0);
    for (auto& v : B.row_values(pcd_.pin)) v = 0.0;
    const CsrMatrix Bt = B.transpose();
    TripletBuilder zb(np, np);
    zb.add(pcd_.pin, pcd_.pin, 1.0);
    const CsrMatrix Z = zb.build();
    const CsrMatrix S = block_matrix({{&A, &Bt}, {&B, &Z}});
    rhs[nv + pcd_.pin] = 0.0;

    const CsrMatrix Ap = assemble_pcd_operator(*disc.pressure, wind, rho_mean, tau_, prm_.eta, q);
    const PrecondNS P = build_precond_ns(A, V.components(), Ap, pressure_solvers_, pcd_);
    const auto Pop = P.op();
    Vector x0(nv + np);
    std::copy(s.velocity.values().begin(), s.velocity.values().end(), x0.begin());
    std::copy(s.pressure.values().begin(), s.pressure.values().end(), x0.begin() + static_cast<std::ptrdiff_t>(nv));
    auto res = gmres(LinearOperator::from_matrix(S), rhs, &Pop, cfg_.ns, x0);
    record(SystemId::NavierStokes, res.report);

    std::copy(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(nv), s.velocity.values().begin());
    std::copy(res.x.begin() + static_cast<std::ptrdiff_t>(nv), res.x.end(), s.pressure.values().begin());
    Vector div(np);
    B_.multiply(s.velocity.values(), div);
    st.divergence_norm = norm2(div);
    if (disc.mesh->dim() == 1) std::fill(s.velocity.values().begin(), s.velocity.values().end(), 0.0);
  }

 private:
  std::shared_ptr<const Discretization> disc_;
  ModelParams prm_;
  double tau_;
  SolverConfig cfg_;
  std::shared_ptr<const CsrMatrix> M_;
  CsrMatrix K_;
  Vector mass_vector_;
  Vector top_load_;
  std::size_t ref_node_ = 0;
  std::array<std::shared_ptr<const AmgInverse>, kSolvedSpecies> x_cache_{};
  AmgInverse mass_inverse_;
  AmgInverse zero_wind_L_;
  CsrMatrix viscous_;
  CsrMatrix B_;
  std::vector<std::size_t> velocity_bc_;
  std::shared_ptr<const PressureSolvers> pressure_solvers_;
  PcdOptions pcd_;
};

}  // namespace morpho
