#pragma once

/// Continuous Lagrange P1/P2 spaces on a Mesh, scalar or vector valued.
///
/// Scalar dofs: P1 dofs are the mesh nodes; P2 appends one dof per mesh
/// edge (numbered in order of first appearance while walking the cells).
/// Vector spaces are blocked by component: component c of scalar dof d has
/// global index c * scalar_dof_count() + d.
///
/// Local scalar dof order on a cell: vertices, then edges. Triangle edges are
/// (v0,v1), (v1,v2), (v2,v0); the 1D P2 midpoint dof is local dof 2.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "morpho/mesh.hpp"
#include "morpho/sparse.hpp"

namespace morpho {

inline constexpr std::size_t kMaxLocalDofs = 6;

/// Affine geometry of one simplex: measure and barycentric-coordinate gradients.
struct CellGeometry {
  double measure = 0.0;
  std::array<Point, 3> grad_bary{};

  static CellGeometry of(const Mesh& mesh, std::size_t c) {
    CellGeometry g;
    const auto& v = mesh.cell(c);
    if (mesh.dim() == 1) {
      const double h = mesh.node(v[1])[0] - mesh.node(v[0])[0];
      g.measure = h;
      g.grad_bary[0] = {-1.0 / h, 0.0};
      g.grad_bary[1] = {1.0 / h, 0.0};
      return g;
    }
    const auto& a = mesh.node(v[0]);
    const auto& b = mesh.node(v[1]);
    const auto& d = mesh.node(v[2]);
    const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    g.measure = 0.5 * det;
    g.grad_bary[0] = {(b[1] - d[1]) / det, (d[0] - b[0]) / det};
    g.grad_bary[1] = {(d[1] - a[1]) / det, (a[0] - d[0]) / det};
    g.grad_bary[2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
    return g;
  }
};

/// Scalar shape functions and physical gradients at one point of a cell.
struct ShapeValues {
  std::size_t count = 0;
  std::array<double, kMaxLocalDofs> value{};
  std::array<Point, kMaxLocalDofs> grad{};
};

inline ShapeValues evaluate_shapes(int dim, int degree, const std::array<double, 3>& l, const CellGeometry& g) {
  ShapeValues s;
  const std::size_t nv = static_cast<std::size_t>(dim) + 1;
  const auto& gl = g.grad_bary;
  if (degree == 1) {
    s.count = nv;
    for (std::size_t i = 0; i < nv; ++i) {
      s.value[i] = l[i];
      s.grad[i] = gl[i];
    }
    return s;
  }
  if (degree != 2) throw std::invalid_argument("evaluate_shapes: degree must be 1 or 2");
  for (std::size_t i = 0; i < nv; ++i) {
    s.value[i] = l[i] * (2.0 * l[i] - 1.0);
    const double f = 4.0 * l[i] - 1.0;
    s.grad[i] = {f * gl[i][0], f * gl[i][1]};
  }
  auto edge = [&](std::size_t k, std::size_t i, std::size_t j) {
    s.value[k] = 4.0 * l[i] * l[j];
    s.grad[k] = {4.0 * (l[j] * gl[i][0] + l[i] * gl[j][0]), 4.0 * (l[j] * gl[i][1] + l[i] * gl[j][1])};
  };
  if (dim == 1) {
    edge(2, 0, 1);
    s.count = 3;
  } else {
    edge(3, 0, 1);
    edge(4, 1, 2);
    edge(5, 2, 0);
    s.count = 6;
  }
  return s;
}

class FESpace {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, int degree, int components = 1)
      : mesh_(std::move(mesh)), degree_(degree), components_(components) {
    if (!mesh_) throw std::invalid_argument("FESpace: null mesh");
    if (degree_ != 1 && degree_ != 2) throw std::invalid_argument("FESpace: degree must be 1 or 2");
    if (components_ != 1 && components_ != mesh_->dim())
      throw std::invalid_argument("FESpace: components must be 1 or the mesh dimension");
    build_dof_map();
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  bool same_mesh(const FESpace& other) const { return mesh_.get() == other.mesh_.get(); }

  int degree() const { return degree_; }
  int components() const { return components_; }
  bool is_vector() const { return components_ > 1; }
  std::size_t scalar_dof_count() const { return points_.size(); }
  std::size_t dof_count() const { return points_.size() * static_cast<std::size_t>(components_); }
  std::size_t dofs_per_cell() const { return local_count_; }

  std::span<const std::size_t> cell_dofs(std::size_t c) const {
    return {cell_dofs_.data() + c * local_count_, local_count_};
  }
  std::size_t component_dof(std::size_t scalar_dof, int component) const {
    return static_cast<std::size_t>(component) * scalar_dof_count() + scalar_dof;
  }
  const Point& dof_point(std::size_t scalar_dof) const { return points_[scalar_dof]; }

  /// Scalar dofs lying on a boundary facet (1, 2 or 3 entries).
  std::vector<std::size_t> facet_dofs(const Facet& f) const {
    std::vector<std::size_t> d(f.nodes.begin(), f.nodes.begin() + static_cast<std::ptrdiff_t>(f.node_count));
    if (degree_ == 2 && f.node_count == 2) d.push_back(edge_dof(f.nodes[0], f.nodes[1]));
    return d;
  }

  /// Sorted unique scalar dofs on the whole boundary.
  std::vector<std::size_t> boundary_scalar_dofs() const {
    std::vector<char> mark(scalar_dof_count(), 0);
    for (const auto& f : mesh_->boundary_facets())
      for (auto d : facet_dofs(f)) mark[d] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mark.size(); ++i)
      if (mark[i]) out.push_back(i);
    return out;
  }

  ShapeValues shapes(const std::array<double, 3>& bary, const CellGeometry& g) const {
    return evaluate_shapes(mesh_->dim(), degree_, bary, g);
  }

 private:
  std::size_t edge_dof(std::size_t a, std::size_t b) const {
    auto it = edges_.find(std::minmax(a, b));
    if (it == edges_.end()) throw std::logic_error("FESpace: unknown edge");
    return it->second;
  }

  void build_dof_map() {
    const auto& m = *mesh_;
    const std::size_t nv = m.nodes_per_cell();
    points_ = m.nodes();
    if (degree_ == 1) {
      local_count_ = nv;
      cell_dofs_.reserve(m.cell_count() * nv);
      for (const auto& c : m.cells())
        for (std::size_t i = 0; i < nv; ++i) cell_dofs_.push_back(c[i]);
      return;
    }
    local_count_ = m.dim() == 1 ? 3 : 6;
    cell_dofs_.reserve(m.cell_count() * local_count_);
    auto add_edge = [&](std::size_t a, std::size_t b) {
      auto key = std::minmax(a, b);
      auto [it, inserted] = edges_.try_emplace(key, points_.size());
      if (inserted) {
        const auto& pa = m.node(a);
        const auto& pb = m.node(b);
        points_.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
      }
      return it->second;
    };
    for (const auto& c : m.cells()) {
      for (std::size_t i = 0; i < nv; ++i) cell_dofs_.push_back(c[i]);
      if (m.dim() == 1) {
        cell_dofs_.push_back(add_edge(c[0], c[1]));
      } else {
        cell_dofs_.push_back(add_edge(c[0], c[1]));
        cell_dofs_.push_back(add_edge(c[1], c[2]));
        cell_dofs_.push_back(add_edge(c[2], c[0]));
      }
    }
  }

  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  int components_;
  std::size_t local_count_ = 0;
  std::vector<std::size_t> cell_dofs_;
  std::vector<Point> points_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edges_;
};

/// Coefficient vector of one FESpace.
class FieldVector {
 public:
  explicit FieldVector(std::shared_ptr<const FESpace> space) : space_(std::move(space)) {
    if (!space_) throw std::invalid_argument("FieldVector: null space");
    values_.assign(space_->dof_count(), 0.0);
  }
  FieldVector(std::shared_ptr<const FESpace> space, Vector values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw std::invalid_argument("FieldVector: null space");
    if (values_.size() != space_->dof_count()) throw std::invalid_argument("FieldVector: length != dof count");
  }

  const FESpace& space() const { return *space_; }
  const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
  std::size_t size() const { return values_.size(); }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Value of component `comp` at a point given by precomputed shapes on cell c.
  double value(std::size_t c, const ShapeValues& s, int comp = 0) const {
    auto dofs = space_->cell_dofs(c);
    const std::size_t off = static_cast<std::size_t>(comp) * space_->scalar_dof_count();
    double v = 0.0;
    for (std::size_t i = 0; i < s.count; ++i) v += s.value[i] * values_[off + dofs[i]];
    return v;
  }

  Point gradient(std::size_t c, const ShapeValues& s, int comp = 0) const {
    auto dofs = space_->cell_dofs(c);
    const std::size_t off = static_cast<std::size_t>(comp) * space_->scalar_dof_count();
    Point g{0.0, 0.0};
    for (std::size_t i = 0; i < s.count; ++i) {
      const double u = values_[off + dofs[i]];
      g[0] += s.grad[i][0] * u;
      g[1] += s.grad[i][1] * u;
    }
    return g;
  }

 private:
  std::shared_ptr<const FESpace> space_;
  Vector values_;
};

/// Nodal interpolation of f(point) -> value into a scalar space, or of one
/// component into a vector space.
template <class F>
FieldVector interpolate(const std::shared_ptr<const FESpace>& space, F&& f, int comp = 0) {
  FieldVector v(space);
  for (std::size_t d = 0; d < space->scalar_dof_count(); ++d)
    v[space->component_dof(d, comp)] = f(space->dof_point(d));
  return v;
}

}  // namespace morpho
