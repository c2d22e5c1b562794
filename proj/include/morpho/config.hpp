#pragma once

/// Run configuration: plain-text `key = value` files with '#' comments.
/// Every key has a default; an empty file gives the 1D evaporation setup.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "morpho/energy.hpp"
#include "morpho/timestepper.hpp"

namespace morpho {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int dimension = 1;
  std::size_t n_x = 100;
  std::size_t n_y = 100;
  double L_x = 10.0;
  double L_y = 10.0;
  double tau = 1e-4;
  double t_max = 2.5;
  InitialCondition initial;
  ModelParams params = default_params();
  SolverConfig solver;
  std::vector<double> snapshot_times{0.0, 0.05, 0.15, 2.5};
  std::filesystem::path output_dir = "output";
  bool record_timings = true;

  static ModelParams default_params() {
    ModelParams p;
    p.model = ModelKind::Evaporation;
    return p;
  }

  /// Steps needed to reach t_max.
  std::size_t step_count() const {
    const double r = t_max / tau;
    const double k = std::round(r);
    return static_cast<std::size_t>(std::abs(r - k) < 1e-9 * std::max(1.0, r) ? k : std::ceil(r));
  }

  Mesh build_mesh() const {
    return dimension == 1 ? build_interval_mesh(n_y, L_y) : build_rect_mesh(n_x, n_y, L_x, L_y);
  }

  void validate() const {
    if (dimension == 3) throw ConfigError("dimension: 3D simulations are out of scope (use 1 or 2)");
    if (dimension != 1 && dimension != 2) throw ConfigError("dimension: must be 1 or 2");
    if (n_y == 0 || (dimension == 2 && n_x == 0)) throw ConfigError("n_x/n_y: cell counts must be positive");
    if (!(L_x > 0.0) || !(L_y > 0.0)) throw ConfigError("L_x/L_y: extents must be positive");
    if (!(tau > 0.0)) throw ConfigError("tau: must be positive");
    if (!(t_max > 0.0)) throw ConfigError("t_max: must be positive");
    for (double t : snapshot_times)
      if (t < 0.0 || t > t_max * (1.0 + 1e-12)) throw ConfigError("snapshot_times: must lie in [0, t_max]");
    auto pos = [](double v, const char* key) {
      if (!(v > 0.0)) throw ConfigError(std::string(key) + ": must be positive");
    };
    pos(solver.ch.rtol, "rtol_ch");
    pos(solver.ch.atol, "atol_ch");
    pos(solver.ac.rtol, "rtol_ac");
    pos(solver.ac.atol, "atol_ac");
    pos(solver.ns.rtol, "rtol_ns");
    pos(solver.ns.atol, "atol_ns");
    pos(solver.inner.amg_tol, "amg_tol");
    try {
      initial.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    try {
      params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (trim(v.substr(used)).size()) throw std::invalid_argument("trailing characters");
  return d;
}

inline std::size_t parse_count(const std::string& v) {
  std::size_t used = 0;
  const long long n = std::stoll(v, &used);
  if (trim(v.substr(used)).size() || n < 0) throw std::invalid_argument("expected a non-negative integer");
  return static_cast<std::size_t>(n);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false");
}

inline std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

inline const std::map<std::string, Species>& species_keys() {
  static const std::map<std::string, Species> m{
      {"p", Species::Polymer}, {"nfa", Species::Nfa}, {"s", Species::Solvent}, {"a", Species::Air}};
  return m;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["dimension"] = [](RunConfig& c, const std::string& v) { c.dimension = static_cast<int>(parse_count(v)); };
    t["n_x"] = [](RunConfig& c, const std::string& v) { c.n_x = parse_count(v); };
    t["n_y"] = [](RunConfig& c, const std::string& v) { c.n_y = parse_count(v); };
    t["L_x"] = [](RunConfig& c, const std::string& v) { c.L_x = parse_double(v); };
    t["L_y"] = [](RunConfig& c, const std::string& v) { c.L_y = parse_double(v); };
    t["tau"] = [](RunConfig& c, const std::string& v) { c.tau = parse_double(v); };
    t["t_max"] = [](RunConfig& c, const std::string& v) { c.t_max = parse_double(v); };
    t["a"] = [](RunConfig& c, const std::string& v) { c.initial.a = parse_double(v); };
    t["b"] = [](RunConfig& c, const std::string& v) { c.initial.b = parse_double(v); };
    t["amplitude"] = [](RunConfig& c, const std::string& v) { c.initial.amplitude = parse_double(v); };
    t["film_fraction"] = [](RunConfig& c, const std::string& v) { c.initial.film_fraction = parse_double(v); };
    t["seed"] = [](RunConfig& c, const std::string& v) { c.initial.seed = parse_count(v); };
    t["potential"] = [](RunConfig& c, const std::string& v) {
      if (v == "flory") c.params.potential = PotentialKind::FloryTaylor4;
      else if (v == "fitted") c.params.potential = PotentialKind::FittedPoly;
      else throw std::invalid_argument("expected flory or fitted");
    };
    t["model"] = [](RunConfig& c, const std::string& v) {
      if (v == "full") c.params.model = ModelKind::Full;
      else if (v == "evaporation") c.params.model = ModelKind::Evaporation;
      else throw std::invalid_argument("expected full or evaporation");
    };
    for (const auto& [name, sp] : species_keys()) {
      const auto i = idx(sp);
      t["alpha_" + name] = [i](RunConfig& c, const std::string& v) { c.params.alpha[i] = parse_double(v); };
      t["beta_" + name] = [i](RunConfig& c, const std::string& v) { c.params.beta[i] = parse_double(v); };
      t["gamma_" + name] = [i](RunConfig& c, const std::string& v) { c.params.gamma[i] = parse_double(v); };
      t["density_" + name] = [i](RunConfig& c, const std::string& v) { c.params.density[i] = parse_double(v); };
      t["N_" + name] = [i](RunConfig& c, const std::string& v) { c.params.molar_size[i] = parse_double(v); };
      t["phi_sat_" + name] = [i](RunConfig& c, const std::string& v) { c.params.phi_sat[i] = parse_double(v); };
      for (const auto& [other, sq] : species_keys()) {
        if (idx(sq) <= i) continue;
        t["chi_" + name + "_" + other] = [sp = sp, sq = sq](RunConfig& c, const std::string& v) {
          c.params.set_chi(sp, sq, parse_double(v));
        };
      }
    }
    t["beta_v"] = [](RunConfig& c, const std::string& v) { c.params.beta_v = parse_double(v); };
    t["gamma_v"] = [](RunConfig& c, const std::string& v) { c.params.gamma_v = parse_double(v); };
    t["delta_v"] = [](RunConfig& c, const std::string& v) { c.params.delta_v = parse_double(v); };
    t["eta"] = [](RunConfig& c, const std::string& v) { c.params.eta = parse_double(v); };
    t["flux_rate"] = [](RunConfig& c, const std::string& v) { c.params.flux_rate = parse_double(v); };
    t["ambient_solvent"] = [](RunConfig& c, const std::string& v) { c.params.ambient_solvent = parse_double(v); };
    t["rtol_ch"] = [](RunConfig& c, const std::string& v) { c.solver.ch.rtol = parse_double(v); };
    t["atol_ch"] = [](RunConfig& c, const std::string& v) { c.solver.ch.atol = parse_double(v); };
    t["rtol_ac"] = [](RunConfig& c, const std::string& v) { c.solver.ac.rtol = parse_double(v); };
    t["atol_ac"] = [](RunConfig& c, const std::string& v) { c.solver.ac.atol = parse_double(v); };
    t["rtol_ns"] = [](RunConfig& c, const std::string& v) { c.solver.ns.rtol = parse_double(v); };
    t["atol_ns"] = [](RunConfig& c, const std::string& v) { c.solver.ns.atol = parse_double(v); };
    t["max_iter"] = [](RunConfig& c, const std::string& v) {
      c.solver.ch.max_iter = c.solver.ac.max_iter = c.solver.ns.max_iter = parse_count(v);
    };
    t["amg_tol"] = [](RunConfig& c, const std::string& v) { c.solver.inner.amg_tol = parse_double(v); };
    t["amg_max_cycles"] = [](RunConfig& c, const std::string& v) { c.solver.inner.max_cycles = parse_count(v); };
    t["amg_strength"] = [](RunConfig& c, const std::string& v) {
      c.solver.inner.amg.strength_threshold = parse_double(v);
    };
    t["amg_coarse_cap"] = [](RunConfig& c, const std::string& v) { c.solver.inner.amg.coarse_cap = parse_count(v); };
    t["pressure_mass"] = [](RunConfig& c, const std::string& v) {
      if (v == "amg") c.solver.pressure_mass = MassSolve::Amg;
      else if (v == "lumped") c.solver.pressure_mass = MassSolve::Lumped;
      else throw std::invalid_argument("expected amg or lumped");
    };
    t["ch_schur_sign"] = [](RunConfig& c, const std::string& v) { c.solver.ch_schur_sign = parse_double(v); };
    t["ns_schur_sign"] = [](RunConfig& c, const std::string& v) { c.solver.ns_schur_sign = parse_double(v); };
    t["snapshot_times"] = [](RunConfig& c, const std::string& v) { c.snapshot_times = parse_list(v); };
    t["output_dir"] = [](RunConfig& c, const std::string& v) { c.output_dir = v; };
    t["record_timings"] = [](RunConfig& c, const std::string& v) { c.record_timings = parse_bool(v); };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Apply one `key = value` setting.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::config_setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("key '" + key + "': invalid value '" + value + "' (" + e.what() + ")");
  }
}

inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace morpho
