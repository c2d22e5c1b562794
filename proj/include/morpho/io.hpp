#pragma once

/// Snapshot (CSV in 1D, legacy VTK in 2D) and per-solve statistics writers.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morpho/state.hpp"
#include "morpho/timestepper.hpp"

namespace morpho {

/// Environment variable naming the directory that relative output paths resolve against.
inline constexpr const char* kOutputRootEnv = "MORPHO_OUTPUT_ROOT";

inline std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return std::filesystem::path(root) / dir;
  return dir;
}

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

inline void finish_output(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

/// Pressure shifted to zero mean (P1 integral over the mesh cells).
inline Vector zero_mean_pressure(const SimState& s, const Mesh& mesh) {
  const auto& p = s.pressure.values();
  double integral = 0.0, measure = 0.0;
  const std::size_t nv = mesh.nodes_per_cell();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double m = mesh.cell_measure(c);
    double avg = 0.0;
    for (std::size_t k = 0; k < nv; ++k) avg += p[mesh.cell(c)[k]];
    integral += m * avg / static_cast<double>(nv);
    measure += m;
  }
  Vector out(p);
  for (auto& v : out) v -= integral / measure;
  return out;
}

}  // namespace detail

/// 1D: CSV (y, phi_p, phi_nfa, phi_s, phi_a, Phi_v). 2D: legacy ASCII VTK
/// unstructured grid with all fractions, Phi_v, zero-mean pressure and velocity.
inline void write_snapshot(const SimState& s, const Mesh& mesh, const std::filesystem::path& path) {
  auto f = detail::open_output(path);
  const std::size_t n = mesh.node_count();
  if (mesh.dim() == 1) {
    f << "y,phi_p,phi_nfa,phi_s,phi_a,Phi_v\n";
    for (std::size_t a = 0; a < n; ++a)
      f << format_double(mesh.node(a)[0]) << ',' << format_double(s.phi[0][a]) << ','
        << format_double(s.phi[1][a]) << ',' << format_double(s.phi[2][a]) << ',' << format_double(s.air(a))
        << ',' << format_double(s.vapor[a]) << '\n';
    detail::finish_output(f, path);
    return;
  }
  f << "# vtk DataFile Version 3.0\n";
  f << "morphology snapshot step " << s.step << " time " << format_double(s.time) << "\n";
  f << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << n << " double\n";
  for (std::size_t a = 0; a < n; ++a)
    f << format_double(mesh.node(a)[0]) << ' ' << format_double(mesh.node(a)[1]) << " 0\n";
  f << "CELLS " << mesh.cell_count() << ' ' << 4 * mesh.cell_count() << '\n';
  for (const auto& c : mesh.cells()) f << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  f << "CELL_TYPES " << mesh.cell_count() << '\n';
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) f << "5\n";
  f << "POINT_DATA " << n << '\n';
  auto scalar = [&](const char* name, auto&& value) {
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t a = 0; a < n; ++a) f << format_double(value(a)) << '\n';
  };
  scalar("phi_p", [&](std::size_t a) { return s.phi[0][a]; });
  scalar("phi_nfa", [&](std::size_t a) { return s.phi[1][a]; });
  scalar("phi_s", [&](std::size_t a) { return s.phi[2][a]; });
  scalar("phi_a", [&](std::size_t a) { return s.air(a); });
  scalar("Phi_v", [&](std::size_t a) { return s.vapor[a]; });
  const Vector p = detail::zero_mean_pressure(s, mesh);
  scalar("pressure", [&](std::size_t a) { return p[a]; });
  // P2 vertex dofs coincide with the mesh nodes.
  const auto& V = s.velocity.space();
  f << "VECTORS velocity double\n";
  for (std::size_t a = 0; a < n; ++a)
    f << format_double(s.velocity[V.component_dof(a, 0)]) << ' ' << format_double(s.velocity[V.component_dof(a, 1)])
      << " 0\n";
  detail::finish_output(f, path);
}

/// One stats CSV row per solved system; optional leading columns (e.g. n_y for sweeps).
struct StatsLogOptions {
  bool record_timings = true;
  std::vector<std::pair<std::string, std::string>> leading;
};

inline void write_stats_header(std::ostream& os, const StatsLogOptions& opt = {}) {
  for (const auto& [name, value] : opt.leading) os << name << ',';
  os << "step,time,system,iterations,residual,seconds,solvent_mass\n";
}

inline void write_stats_rows(std::ostream& os, std::span<const StepStats> stats, const StatsLogOptions& opt = {}) {
  for (const auto& st : stats)
    for (const auto& sys : st.systems) {
      for (const auto& [name, value] : opt.leading) os << value << ',';
      os << st.step << ',' << format_double(st.time) << ',' << system_name(sys.system) << ','
         << sys.report.iterations << ',' << format_double(sys.report.residual_norm) << ','
         << format_double(opt.record_timings ? sys.report.wall_time : 0.0) << ',' << format_double(st.solvent_mass)
         << '\n';
    }
}

inline void write_stats_log(std::span<const StepStats> stats, const std::filesystem::path& path,
                            const StatsLogOptions& opt = {}) {
  if (stats.empty()) throw std::invalid_argument("write_stats_log: empty stats sequence");
  auto f = detail::open_output(path);
  write_stats_header(f, opt);
  write_stats_rows(f, stats, opt);
  detail::finish_output(f, path);
}

}  // namespace morpho
