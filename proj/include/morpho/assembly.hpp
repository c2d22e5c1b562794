#pragma once

/// Finite element operators on P1/P2 spaces: mass, stiffness, convection,
/// symmetric-gradient viscosity, divergence, boundary and nonlinear loads,
/// and Dirichlet row replacement.

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "morpho/energy.hpp"
#include "morpho/fe_space.hpp"
#include "morpho/quadrature.hpp"
#include "morpho/sparse.hpp"
#include "morpho/state.hpp"

namespace morpho {

namespace detail {

enum class ComponentCoupling { Diagonal, Full };

/// CSR pattern with an entry for every (test dof, trial dof) pair sharing a cell.
inline CsrMatrix coupling_pattern(const FESpace& test, const FESpace& trial, ComponentCoupling mode) {
  if (!test.same_mesh(trial)) throw std::invalid_argument("coupling_pattern: spaces live on different meshes");
  const auto& mesh = test.mesh();
  const int ct = test.components(), cu = trial.components();
  std::vector<std::vector<std::size_t>> rows(test.dof_count());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto td = test.cell_dofs(c);
    auto ud = trial.cell_dofs(c);
    for (int a = 0; a < ct; ++a)
      for (int b = 0; b < cu; ++b) {
        if (mode == ComponentCoupling::Diagonal && ct == cu && a != b) continue;
        for (auto i : td) {
          auto& row = rows[test.component_dof(i, a)];
          for (auto j : ud) row.push_back(trial.component_dof(j, b));
        }
      }
  }
  std::vector<std::size_t> off(rows.size() + 1, 0), col;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    col.insert(col.end(), r.begin(), r.end());
    off[i + 1] = col.size();
  }
  Vector val(col.size(), 0.0);
  return {test.dof_count(), trial.dof_count(), std::move(off), std::move(col), std::move(val)};
}

/// Adds into an existing pattern; every target entry must exist.
class Accumulator {
 public:
  explicit Accumulator(CsrMatrix pattern) : m_(std::move(pattern)) {}

  void add(std::size_t i, std::size_t j, double v) {
    auto cols = m_.row_columns(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) throw std::logic_error("Accumulator: entry outside pattern");
    m_.row_values(i)[static_cast<std::size_t>(it - cols.begin())] += v;
  }

  CsrMatrix take() { return std::move(m_); }

 private:
  CsrMatrix m_;
};

inline void require_same_mesh(const FESpace& a, const FESpace& b, const char* what) {
  if (!a.same_mesh(b)) throw std::invalid_argument(std::string(what) + ": fields live on a different mesh");
}

}  // namespace detail

/// M_ab = int w z_a z_b. For vector spaces the blocks are component-diagonal.
inline CsrMatrix assemble_mass(const FESpace& space, const FieldVector* weight = nullptr,
                               int quad_degree = kDefaultQuadratureDegree) {
  if (weight) {
    detail::require_same_mesh(space, weight->space(), "assemble_mass");
    if (weight->space().is_vector()) throw std::invalid_argument("assemble_mass: weight must be scalar");
  }
  const auto& mesh = space.mesh();
  const auto& rule = simplex_rule(mesh.dim(), quad_degree + (weight ? weight->space().degree() : 0));
  detail::Accumulator acc(detail::coupling_pattern(space, space, detail::ComponentCoupling::Diagonal));
  std::array<std::array<double, kMaxLocalDofs>, kMaxLocalDofs> local{};
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    const std::size_t n = space.dofs_per_cell();
    for (auto& r : local) r.fill(0.0);
    for (const auto& q : rule) {
      const auto s = space.shapes(q.bary, g);
      double w = q.weight * g.measure;
      if (weight) w *= weight->value(c, weight->space().shapes(q.bary, g));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) local[i][j] += w * s.value[i] * s.value[j];
    }
    auto dofs = space.cell_dofs(c);
    for (int comp = 0; comp < space.components(); ++comp)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          acc.add(space.component_dof(dofs[i], comp), space.component_dof(dofs[j], comp), local[i][j]);
  }
  return acc.take();
}

/// K_ab = int grad z_a . grad z_b (componentwise for vector spaces).
inline CsrMatrix assemble_stiffness(const FESpace& space, int quad_degree = kDefaultQuadratureDegree) {
  const auto& mesh = space.mesh();
  const auto& rule = simplex_rule(mesh.dim(), quad_degree);
  detail::Accumulator acc(detail::coupling_pattern(space, space, detail::ComponentCoupling::Diagonal));
  std::array<std::array<double, kMaxLocalDofs>, kMaxLocalDofs> local{};
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    const std::size_t n = space.dofs_per_cell();
    for (auto& r : local) r.fill(0.0);
    for (const auto& q : rule) {
      const auto s = space.shapes(q.bary, g);
      const double w = q.weight * g.measure;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          local[i][j] += w * (s.grad[i][0] * s.grad[j][0] + s.grad[i][1] * s.grad[j][1]);
    }
    auto dofs = space.cell_dofs(c);
    for (int comp = 0; comp < space.components(); ++comp)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          acc.add(space.component_dof(dofs[i], comp), space.component_dof(dofs[j], comp), local[i][j]);
  }
  return acc.take();
}

/// Transport field w = rho * v - sum_k coeff_k * grad(mu_k), evaluated at
/// quadrature points. Every member is optional; a default Wind is zero.
struct Wind {
  const FieldVector* velocity = nullptr;  // P2 vector
  const FieldVector* density = nullptr;   // scalar weight on velocity
  std::vector<std::pair<double, const FieldVector*>> gradient_terms;

  Point at(std::size_t c, const std::array<double, 3>& bary, const CellGeometry& g) const {
    Point w{0.0, 0.0};
    if (velocity) {
      const auto s = velocity->space().shapes(bary, g);
      const int dim = velocity->space().components();
      double rho = 1.0;
      if (density) rho = density->value(c, density->space().shapes(bary, g));
      for (int k = 0; k < dim; ++k) w[static_cast<std::size_t>(k)] = rho * velocity->value(c, s, k);
    }
    for (const auto& [coeff, field] : gradient_terms) {
      const auto gr = field->gradient(c, field->space().shapes(bary, g));
      w[0] -= coeff * gr[0];
      w[1] -= coeff * gr[1];
    }
    return w;
  }

  void check_mesh(const FESpace& space) const {
    if (velocity) {
      detail::require_same_mesh(space, velocity->space(), "Wind");
      if (velocity->space().components() != space.mesh().dim())
        throw std::invalid_argument("Wind: velocity must be vector valued");
    }
    if (density) detail::require_same_mesh(space, density->space(), "Wind");
    for (const auto& t : gradient_terms) detail::require_same_mesh(space, t.second->space(), "Wind");
  }
};

/// C_ab = int (w . grad z_b) z_a (componentwise for vector spaces).
inline CsrMatrix assemble_convection(const FESpace& space, const Wind& wind, int quad_degree = kDefaultQuadratureDegree) {
  wind.check_mesh(space);
  const auto& mesh = space.mesh();
  const auto& rule = simplex_rule(mesh.dim(), quad_degree + 1);
  detail::Accumulator acc(detail::coupling_pattern(space, space, detail::ComponentCoupling::Diagonal));
  std::array<std::array<double, kMaxLocalDofs>, kMaxLocalDofs> local{};
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    const std::size_t n = space.dofs_per_cell();
    for (auto& r : local) r.fill(0.0);
    for (const auto& q : rule) {
      const auto s = space.shapes(q.bary, g);
      const auto w = wind.at(c, q.bary, g);
      const double jxw = q.weight * g.measure;
      for (std::size_t j = 0; j < n; ++j) {
        const double adv = jxw * (w[0] * s.grad[j][0] + w[1] * s.grad[j][1]);
        for (std::size_t i = 0; i < n; ++i) local[i][j] += adv * s.value[i];
      }
    }
    auto dofs = space.cell_dofs(c);
    for (int comp = 0; comp < space.components(); ++comp)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          acc.add(space.component_dof(dofs[i], comp), space.component_dof(dofs[j], comp), local[i][j]);
  }
  return acc.take();
}

inline CsrMatrix assemble_convection(const FESpace& space, const FieldVector& velocity,
                                     int quad_degree = kDefaultQuadratureDegree) {
  Wind w;
  w.velocity = &velocity;
  return assemble_convection(space, w, quad_degree);
}

/// int 2 eta sym(grad u) : sym(grad w) on a vector space. Entry for
/// (dof a, comp c) x (dof b, comp d) is eta (delta_cd grad a . grad b + d_d a * d_c b).
inline CsrMatrix assemble_sym_grad(const FESpace& vspace, double viscosity, int quad_degree = kDefaultQuadratureDegree) {
  if (!vspace.is_vector() && vspace.mesh().dim() > 1)
    throw std::invalid_argument("assemble_sym_grad: space must be vector valued");
  const auto& mesh = vspace.mesh();
  const auto& rule = simplex_rule(mesh.dim(), quad_degree);
  const int dim = vspace.components();
  detail::Accumulator acc(detail::coupling_pattern(vspace, vspace, detail::ComponentCoupling::Full));
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    const std::size_t n = vspace.dofs_per_cell();
    // gg[k][l][i][j] = int d_k z_i d_l z_j
    std::array<std::array<std::array<std::array<double, kMaxLocalDofs>, kMaxLocalDofs>, 2>, 2> gg{};
    for (const auto& q : rule) {
      const auto s = vspace.shapes(q.bary, g);
      const double w = q.weight * g.measure;
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l)
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              gg[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)][i][j] +=
                  w * s.grad[i][static_cast<std::size_t>(k)] * s.grad[j][static_cast<std::size_t>(l)];
    }
    auto dofs = vspace.cell_dofs(c);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
            double v = gg[ub][ua][i][j];  // d_b z_i * d_a z_j
            if (a == b)
              for (std::size_t k = 0; k < static_cast<std::size_t>(dim); ++k) v += gg[k][k][i][j];
            acc.add(vspace.component_dof(dofs[i], a), vspace.component_dof(dofs[j], b), viscosity * v);
          }
  }
  return acc.take();
}

/// B_nm = -int (div z^m) zhat_n, shape (pressure dofs x velocity dofs).
inline CsrMatrix assemble_divergence(const FESpace& vspace, const FESpace& pspace,
                                     int quad_degree = kDefaultQuadratureDegree) {
  detail::require_same_mesh(vspace, pspace, "assemble_divergence");
  if (pspace.is_vector()) throw std::invalid_argument("assemble_divergence: pressure space must be scalar");
  if (vspace.components() != vspace.mesh().dim())
    throw std::invalid_argument("assemble_divergence: velocity space must be vector valued");
  const auto& mesh = vspace.mesh();
  const auto& rule = simplex_rule(mesh.dim(), quad_degree);
  const int dim = vspace.components();
  detail::Accumulator acc(detail::coupling_pattern(pspace, vspace, detail::ComponentCoupling::Full));
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    const std::size_t nv = vspace.dofs_per_cell(), np = pspace.dofs_per_cell();
    std::array<std::array<std::array<double, kMaxLocalDofs>, kMaxLocalDofs>, 2> local{};
    for (const auto& q : rule) {
      const auto sv = vspace.shapes(q.bary, g);
      const auto sp = pspace.shapes(q.bary, g);
      const double w = q.weight * g.measure;
      for (std::size_t k = 0; k < static_cast<std::size_t>(dim); ++k)
        for (std::size_t i = 0; i < np; ++i)
          for (std::size_t j = 0; j < nv; ++j) local[k][i][j] -= w * sp.value[i] * sv.grad[j][k];
    }
    auto pd = pspace.cell_dofs(c);
    auto vd = vspace.cell_dofs(c);
    for (int k = 0; k < dim; ++k)
      for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < nv; ++j)
          acc.add(pd[i], vspace.component_dof(vd[j], k), local[static_cast<std::size_t>(k)][i][j]);
  }
  return acc.take();
}

/// coefficient * int_{Gamma_tag} z_a ds on a scalar P1 space (a point value in 1D).
inline FieldVector assemble_boundary_load(const std::shared_ptr<const FESpace>& space, BoundaryTag tag,
                                          double coefficient) {
  if (space->is_vector() || space->degree() != 1)
    throw std::invalid_argument("assemble_boundary_load: space must be scalar P1");
  FieldVector out(space);
  const auto& mesh = space->mesh();
  for (const auto& f : facets_with_tag(mesh, tag)) {
    if (f.node_count == 1) {
      out[f.nodes[0]] += coefficient;
    } else {
      const double half = 0.5 * mesh.facet_measure(f) * coefficient;
      out[f.nodes[0]] += half;
      out[f.nodes[1]] += half;
    }
  }
  return out;
}

/// Explicit right-hand sides of one step, all from level-k fields.
struct NonlinearLoads {
  std::array<Vector, kSpeciesCount> species;  // int df/dphi_i z_a
  Vector vapor;                               // int df/dPhi_v z_a
  Vector stress;                              // int G : grad u_a on the velocity space
};

/// Fields are interpolated to quadrature points (air as the complement of the
/// interpolated fractions); G = sum_i beta_i grad phi_i (x) grad phi_i +
/// beta_v grad Phi_v (x) grad Phi_v.
inline NonlinearLoads assemble_nonlinear_loads(const SimState& state, const Discretization& disc,
                                               const ModelParams& prm, int quad_degree = kDefaultQuadratureDegree) {
  const auto& mesh = *disc.mesh;
  const auto& sspace = *disc.scalar;
  const auto& vspace = *disc.velocity;
  const std::size_t ns = sspace.dof_count();
  NonlinearLoads out;
  for (auto& v : out.species) v.assign(ns, 0.0);
  out.vapor.assign(ns, 0.0);
  out.stress.assign(vspace.dof_count(), 0.0);
  const auto& rule = simplex_rule(mesh.dim(), quad_degree);
  const int dim = mesh.dim();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto g = CellGeometry::of(mesh, c);
    auto sd = sspace.cell_dofs(c);
    auto vd = vspace.cell_dofs(c);
    for (const auto& q : rule) {
      const auto s = sspace.shapes(q.bary, g);
      const auto sv = vspace.shapes(q.bary, g);
      const double w = q.weight * g.measure;
      PhasePoint pt{state.phi[0].value(c, s), state.phi[1].value(c, s), state.phi[2].value(c, s),
                    state.vapor.value(c, s)};
      std::array<double, kSpeciesCount> df{};
      for (std::size_t i = 0; i < kSpeciesCount; ++i) df[i] = dfdphi(pt, i, prm);
      const double dv = dfdPhiv(pt, prm);
      for (std::size_t a = 0; a < s.count; ++a) {
        for (std::size_t i = 0; i < kSpeciesCount; ++i) out.species[i][sd[a]] += w * df[i] * s.value[a];
        out.vapor[sd[a]] += w * dv * s.value[a];
      }

      std::array<Point, kSpeciesCount> gp{};
      for (std::size_t i = 0; i < kSolvedSpecies; ++i) gp[i] = state.phi[i].gradient(c, s);
      gp[3] = {-(gp[0][0] + gp[1][0] + gp[2][0]), -(gp[0][1] + gp[1][1] + gp[2][1])};
      const auto gv = state.vapor.gradient(c, s);
      std::array<std::array<double, 2>, 2> G{};
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l) {
          double v = prm.beta_v * gv[k] * gv[l];
          for (std::size_t i = 0; i < kSpeciesCount; ++i) v += prm.beta[i] * gp[i][k] * gp[i][l];
          G[k][l] = v;
        }
      for (int comp = 0; comp < dim; ++comp) {
        const auto uc = static_cast<std::size_t>(comp);
        for (std::size_t a = 0; a < sv.count; ++a)
          out.stress[vspace.component_dof(vd[a], comp)] += w * (G[uc][0] * sv.grad[a][0] + G[uc][1] * sv.grad[a][1]);
      }
    }
  }
  return out;
}

/// Turn row d into the unit row e_d.
inline void apply_dirichlet_row(CsrMatrix& matrix, std::size_t d) {
  if (d >= matrix.rows()) throw std::out_of_range("apply_dirichlet: dof index out of range");
  auto cols = matrix.row_columns(d);
  auto vals = matrix.row_values(d);
  bool has_diag = false;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    vals[k] = cols[k] == d ? 1.0 : 0.0;
    has_diag |= cols[k] == d;
  }
  if (!has_diag) throw std::invalid_argument("apply_dirichlet: constrained row has no diagonal entry");
}

/// Row replacement: each constrained row becomes the unit row and the
/// right-hand side entry becomes `value`.
inline void apply_dirichlet(CsrMatrix& matrix, std::span<double> rhs, std::span<const std::size_t> dofs, double value) {
  if (rhs.size() != matrix.rows()) throw std::invalid_argument("apply_dirichlet: rhs size mismatch");
  for (auto d : dofs) {
    apply_dirichlet_row(matrix, d);
    rhs[d] = value;
  }
}

/// Zero the given columns (rows untouched), moving their contribution
/// `value * A(:, d)` to the right-hand side. Combined with apply_dirichlet on
/// the same dofs of a square matrix this is symmetric elimination.
inline void eliminate_columns(CsrMatrix& matrix, std::span<double> rhs, std::span<const std::size_t> dofs,
                              double value, std::span<const std::size_t> keep_rows = {}) {
  std::vector<char> mark(matrix.cols(), 0);
  for (auto d : dofs) {
    if (d >= matrix.cols()) throw std::out_of_range("eliminate_columns: dof index out of range");
    mark[d] = 1;
  }
  std::vector<char> keep(matrix.rows(), 0);
  for (auto r : keep_rows) keep[r] = 1;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (keep[i]) continue;
    auto cols = matrix.row_columns(i);
    auto vals = matrix.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (mark[cols[k]]) {
        if (!rhs.empty()) rhs[i] -= vals[k] * value;
        vals[k] = 0.0;
      }
  }
}

}  // namespace morpho
