#pragma once

/// Local free-energy densities of the four-species / vapor model, their
/// analytic partial derivatives, the liquid-gas interpolation and the
/// evaporation boundary flux.
///
/// Species are indexed polymer, NFA, solvent, air. Derivatives with respect
/// to a species treat all four fractions as independent; reduced_dfdphi()
/// applies the chain rule through air = 1 - polymer - NFA - solvent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "morpho/sparse.hpp"

namespace morpho {

enum class Species : std::size_t { Polymer = 0, Nfa = 1, Solvent = 2, Air = 3 };
inline constexpr std::size_t kSpeciesCount = 4;
inline constexpr std::size_t kSolvedSpecies = 3;  // air is the complement

inline constexpr std::size_t idx(Species s) { return static_cast<std::size_t>(s); }

inline const char* species_name(Species s) {
  switch (s) {
    case Species::Polymer: return "p";
    case Species::Nfa: return "nfa";
    case Species::Solvent: return "s";
    case Species::Air: return "a";
  }
  return "?";
}

enum class PotentialKind { FloryTaylor4, FittedPoly };

/// Which species take part: the evaporation-only setup drops every term
/// involving polymer or NFA.
enum class ModelKind { Full, Evaporation };

using SpeciesArray = std::array<double, kSpeciesCount>;

struct ModelParams {
  SpeciesArray alpha{1e-8, 1e-8, 1e-8, 1e-8};
  SpeciesArray beta{1e-3, 1e-3, 1e-1, 1e-1};
  SpeciesArray gamma{1.0, 1.0, 1.0, 1.0};
  double beta_v = 1.0;
  double gamma_v = 1.0;
  double delta_v = 1.0;
  double eta = 1.0;
  SpeciesArray density{1.0, 1.0, 1.0, 1.0};
  SpeciesArray molar_size{5.0, 5.0, 1.0, 1.0};
  /// Flory-Huggins interaction parameters, symmetric with zero diagonal.
  std::array<SpeciesArray, kSpeciesCount> chi{{
      {0.0, 4.0, 0.3, 0.0},
      {4.0, 0.0, 0.3, 0.0},
      {0.3, 0.3, 0.0, 0.0},
      {0.0, 0.0, 0.0, 0.0},
  }};
  SpeciesArray phi_sat{1e-8, 1e-8, 1e-6, 1.0};
  double flux_rate = 1.0;        // lumped Hertz-Knudsen prefactor k_e
  double ambient_solvent = 0.0;  // solvent fraction far above the film
  PotentialKind potential = PotentialKind::FloryTaylor4;
  ModelKind model = ModelKind::Full;

  bool species_active(std::size_t i) const {
    return model == ModelKind::Full || i == idx(Species::Solvent) || i == idx(Species::Air);
  }

  void set_chi(Species a, Species b, double v) {
    if (a == b) throw std::invalid_argument("chi diagonal is fixed to zero");
    chi[idx(a)][idx(b)] = v;
    chi[idx(b)][idx(a)] = v;
  }

  void validate() const {
    auto positive = [](double v, const std::string& name) {
      if (!(v > 0.0)) throw std::invalid_argument("ModelParams: " + name + " must be positive");
    };
    for (std::size_t i = 0; i < kSpeciesCount; ++i) {
      const std::string s = species_name(static_cast<Species>(i));
      positive(beta[i], "beta_" + s);
      positive(gamma[i], "gamma_" + s);
      positive(molar_size[i], "N_" + s);
      positive(density[i], "density_" + s);
      if (!(phi_sat[i] > 0.0 && phi_sat[i] <= 1.0))
        throw std::invalid_argument("ModelParams: phi_sat_" + s + " must lie in (0, 1]");
      if (chi[i][i] != 0.0) throw std::invalid_argument("ModelParams: chi diagonal must be zero");
      for (std::size_t j = 0; j < kSpeciesCount; ++j)
        if (chi[i][j] != chi[j][i]) throw std::invalid_argument("ModelParams: chi must be symmetric");
    }
    positive(beta_v, "beta_v");
    positive(gamma_v, "gamma_v");
    positive(delta_v, "delta_v");
    positive(eta, "eta");
    if (!(flux_rate >= 0.0)) throw std::invalid_argument("ModelParams: flux_rate must be >= 0");
  }
};

/// Composition at a point; air is always the complement of the other three.
struct PhasePoint {
  double polymer = 0.0;
  double nfa = 0.0;
  double solvent = 0.0;
  double vapor = 0.0;

  double air() const { return 1.0 - polymer - nfa - solvent; }
  double fraction(std::size_t i) const {
    switch (i) {
      case 0: return polymer;
      case 1: return nfa;
      case 2: return solvent;
      case 3: return air();
    }
    throw std::out_of_range("PhasePoint::fraction: species index");
  }
  SpeciesArray fractions() const { return {polymer, nfa, solvent, air()}; }
};

inline double interp_p(double phi_v) { return phi_v * phi_v * (3.0 - 2.0 * phi_v); }
inline double interp_p_prime(double phi_v) { return 6.0 * phi_v * (1.0 - phi_v); }

namespace taylor {
// x ln x about x = 1/2: derivatives ln x + 1, 1/x, -1/x^2, 2/x^3.
inline const double c0 = -0.5 * std::log(2.0);
inline const double c1 = 1.0 - std::log(2.0);
inline constexpr double c2 = 1.0;
inline constexpr double c3 = -2.0 / 3.0;
inline constexpr double c4 = 2.0 / 3.0;
}  // namespace taylor

/// Fourth-order Taylor polynomial of x ln x about 1/2.
inline double taylor4_xlnx(double x) {
  const double d = x - 0.5;
  return taylor::c0 + d * (taylor::c1 + d * (taylor::c2 + d * (taylor::c3 + d * taylor::c4)));
}

inline double taylor4_xlnx_prime(double x) {
  const double d = x - 0.5;
  return taylor::c1 + d * (2.0 * taylor::c2 + d * (3.0 * taylor::c3 + d * 4.0 * taylor::c4));
}

// ---- Flory-Huggins with Taylor-substituted entropy ------------------------

inline double f_liq_flory(const SpeciesArray& phi, const ModelParams& prm) {
  double f = 0.0;
  for (std::size_t i = 0; i < kSpeciesCount; ++i) {
    if (!prm.species_active(i)) continue;
    f += taylor4_xlnx(phi[i]) / prm.molar_size[i];
    for (std::size_t j = 0; j < i; ++j)
      if (prm.species_active(j)) f += prm.chi[i][j] * phi[i] * phi[j];
  }
  return f;
}

inline double f_gas_flory(const SpeciesArray& phi, const ModelParams& prm) {
  double f = 0.0;
  for (std::size_t i = 0; i < kSpeciesCount; ++i)
    if (prm.species_active(i)) f += taylor4_xlnx(phi[i]) - phi[i] * std::log(prm.phi_sat[i]);
  return f;
}

inline double dliq_flory(const SpeciesArray& phi, std::size_t i, const ModelParams& prm) {
  if (!prm.species_active(i)) return 0.0;
  double d = taylor4_xlnx_prime(phi[i]) / prm.molar_size[i];
  for (std::size_t j = 0; j < kSpeciesCount; ++j)
    if (j != i && prm.species_active(j)) d += prm.chi[i][j] * phi[j];
  return d;
}

inline double dgas_flory(const SpeciesArray& phi, std::size_t i, const ModelParams& prm) {
  if (!prm.species_active(i)) return 0.0;
  return taylor4_xlnx_prime(phi[i]) - std::log(prm.phi_sat[i]);
}

// ---- fitted polynomial potential ------------------------------------------

inline double f_liq_fitted(const SpeciesArray& phi, const ModelParams& prm) {
  const bool pn = prm.species_active(0);
  const double p = phi[0], n = phi[1], s = phi[2], a = phi[3];
  return (pn ? 3.5 * p * p * n * n : 0.0) + 0.3 * s * s + 0.3 * a * a - 10.0 * s * a;
}

inline double f_gas_fitted(const SpeciesArray& phi, const ModelParams& prm) {
  const bool pn = prm.species_active(0);
  const double p = phi[0], n = phi[1], s = phi[2], a = phi[3];
  return (pn ? 3.5 * p * p + 3.5 * n * n : 0.0) + 2.0 * s * s + 0.1 * a * a;
}

inline double dliq_fitted(const SpeciesArray& phi, std::size_t i, const ModelParams& prm) {
  if (!prm.species_active(i)) return 0.0;
  const double p = phi[0], n = phi[1], s = phi[2], a = phi[3];
  switch (i) {
    case 0: return 7.0 * p * n * n;
    case 1: return 7.0 * p * p * n;
    case 2: return 0.6 * s - 10.0 * a;
    default: return 0.6 * a - 10.0 * s;
  }
}

inline double dgas_fitted(const SpeciesArray& phi, std::size_t i, const ModelParams& prm) {
  if (!prm.species_active(i)) return 0.0;
  switch (i) {
    case 0: return 7.0 * phi[0];
    case 1: return 7.0 * phi[1];
    case 2: return 4.0 * phi[2];
    default: return 0.2 * phi[3];
  }
}

// ---- interpolated densities -----------------------------------------------

inline double f_liq(const SpeciesArray& phi, const ModelParams& prm) {
  return prm.potential == PotentialKind::FloryTaylor4 ? f_liq_flory(phi, prm) : f_liq_fitted(phi, prm);
}
inline double f_gas(const SpeciesArray& phi, const ModelParams& prm) {
  return prm.potential == PotentialKind::FloryTaylor4 ? f_gas_flory(phi, prm) : f_gas_fitted(phi, prm);
}

inline double f_loc(const PhasePoint& pt, const ModelParams& prm) {
  const auto phi = pt.fractions();
  const double w = interp_p(pt.vapor);
  return (1.0 - w) * f_liq(phi, prm) + w * f_gas(phi, prm);
}

/// Flory-Huggins liquid/gas density with every x ln x Taylor-substituted.
inline double f_loc_flory(const PhasePoint& pt, ModelParams prm) {
  prm.potential = PotentialKind::FloryTaylor4;
  return f_loc(pt, prm);
}

/// The fitted polynomial potential (all four species active).
inline double f_loc_fitted(const PhasePoint& pt) {
  ModelParams prm;
  prm.potential = PotentialKind::FittedPoly;
  prm.model = ModelKind::Full;
  return f_loc(pt, prm);
}

/// Partial derivative of the local density with respect to species i.
inline double dfdphi(const PhasePoint& pt, std::size_t i, const ModelParams& prm) {
  if (i >= kSpeciesCount) throw std::out_of_range("dfdphi: invalid species index");
  const auto phi = pt.fractions();
  const double w = interp_p(pt.vapor);
  const bool flory = prm.potential == PotentialKind::FloryTaylor4;
  const double dl = flory ? dliq_flory(phi, i, prm) : dliq_fitted(phi, i, prm);
  const double dg = flory ? dgas_flory(phi, i, prm) : dgas_fitted(phi, i, prm);
  return (1.0 - w) * dl + w * dg;
}

inline double dfdphi(const PhasePoint& pt, Species s, const ModelParams& prm) { return dfdphi(pt, idx(s), prm); }

/// d f / d phi_i - d f / d phi_air, i in {polymer, NFA, solvent}.
inline double reduced_dfdphi(const PhasePoint& pt, std::size_t i, const ModelParams& prm) {
  if (i >= kSolvedSpecies) throw std::out_of_range("reduced_dfdphi: species must be polymer, NFA or solvent");
  return dfdphi(pt, i, prm) - dfdphi(pt, idx(Species::Air), prm);
}

inline double dfdPhiv(const PhasePoint& pt, const ModelParams& prm) {
  const auto phi = pt.fractions();
  return interp_p_prime(pt.vapor) * (f_gas(phi, prm) - f_liq(phi, prm));
}

/// Hertz-Knudsen outflux with the lumped prefactor.
inline double jout_flux(double phi_s_ref, const ModelParams& prm) {
  return prm.flux_rate * (phi_s_ref - prm.ambient_solvent);
}

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

inline Vector clamp_field(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  for (auto& x : out) x = clamp_unit(x);
  return out;
}

inline double mixture_density(const PhasePoint& pt, const ModelParams& prm) {
  const auto phi = pt.fractions();
  double rho = 0.0;
  for (std::size_t i = 0; i < kSpeciesCount; ++i) rho += phi[i] * prm.density[i];
  return rho;
}

}  // namespace morpho
