// Command-line driver: simulate, parameter sweeps and the built-in oracle checks.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morpho/config.hpp"
#include "morpho/io.hpp"
#include "morpho/run.hpp"
#include "morpho/verify.hpp"

namespace {

using morpho::RunConfig;

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2 };

RunConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? morpho::parse_config_text("") : morpho::parse_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw morpho::ConfigError("--set expects key=value, got '" + kv + "'");
    morpho::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void print_summary(const morpho::RunResult& r) {
  std::size_t max_it[6] = {};
  for (const auto& st : r.stats)
    for (const auto& s : st.systems) {
      auto& m = max_it[static_cast<int>(s.system)];
      m = std::max(m, s.report.iterations);
    }
  std::cout << "steps: " << r.stats.size() << "  solvent mass: " << r.initial_solvent_mass << " -> "
            << (r.stats.empty() ? r.initial_solvent_mass : r.stats.back().solvent_mass) << "\n";
  std::cout << "max GMRES iterations:";
  for (int k = 0; k < 6; ++k)
    std::cout << ' ' << morpho::system_name(static_cast<morpho::SystemId>(k)) << '=' << max_it[k];
  std::cout << '\n';
}

template <class T, class Apply>
int sweep(RunConfig base, const std::vector<T>& values, const std::string& column, std::size_t steps,
          const std::string& out_name, Apply&& apply) {
  const auto dir = morpho::resolve_output_dir(base.output_dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / out_name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw morpho::IoError("cannot open " + path.string());
  morpho::StatsLogOptions opt{base.record_timings, {{column, ""}}};
  morpho::write_stats_header(f, opt);
  for (const auto& v : values) {
    RunConfig cfg = base;
    apply(cfg, v);
    cfg.validate();
    opt.leading[0].second = morpho::format_double(static_cast<double>(v));
    std::cout << column << " = " << opt.leading[0].second << '\n';
    const auto r = morpho::run(cfg, {}, steps);
    print_summary(r);
    morpho::write_stats_rows(f, r.stats, opt);
  }
  std::cout << "wrote " << path.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field morphology simulator with block-preconditioned GMRES solvers"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  std::size_t steps = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "configuration file (key = value)");
    sub->add_option("-s,--set", overrides, "override a configuration key, key=value (repeatable)");
  };

  auto* sim = app.add_subcommand("simulate", "run one configuration");
  add_common(sim);
  sim->add_option("--steps", steps, "stop after this many steps (0: run to t_max)");

  std::vector<std::size_t> ny_list;
  auto* smesh = app.add_subcommand("sweep-mesh", "repeat a configuration over several n_y (and n_x in 2D)");
  add_common(smesh);
  smesh->add_option("--ny", ny_list, "cell counts, comma separated")->delimiter(',')->required();
  std::size_t sweep_steps = 20;
  smesh->add_option("--steps", sweep_steps, "steps per run")->capture_default_str();

  std::vector<double> tau_list;
  auto* stau = app.add_subcommand("sweep-tau", "repeat a configuration over several time steps");
  add_common(stau);
  stau->add_option("--tau", tau_list, "time steps, comma separated")->delimiter(',')->required();
  stau->add_option("--steps", sweep_steps, "steps per run")->capture_default_str();

  auto* ver = app.add_subcommand("verify", "run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  if (!ver->parsed()) {
    try {
      cfg = load(config, overrides);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    }
  }

  try {
    if (sim->parsed()) {
      const auto r = morpho::simulate_to_disk(cfg, steps);
      print_summary(r);
      std::cout << "output: " << morpho::resolve_output_dir(cfg.output_dir).string() << '\n';
      return kOk;
    }
    if (smesh->parsed())
      return sweep(cfg, ny_list, "n_y", sweep_steps, "sweep_mesh.csv", [](RunConfig& c, std::size_t n) {
        c.n_y = n;
        c.n_x = n;
      });
    if (stau->parsed())
      return sweep(cfg, tau_list, "tau", sweep_steps, "sweep_tau.csv", [](RunConfig& c, double t) { c.tau = t; });
    if (ver->parsed()) {
      bool ok = true;
      for (const auto& r : morpho::run_verification_suite()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
      }
      return ok ? kOk : kFailure;
    }
  } catch (const morpho::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
