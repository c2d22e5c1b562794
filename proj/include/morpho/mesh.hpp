#pragma once

/// Uniform simplicial meshes of an interval (1D film height) and of a
/// rectangle, with boundary facets tagged TOP / BOTTOM / SIDE.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace morpho {

using Point = std::array<double, 2>;

enum class BoundaryTag { Top, Bottom, Side };

inline const char* to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Top: return "TOP";
    case BoundaryTag::Bottom: return "BOTTOM";
    case BoundaryTag::Side: return "SIDE";
  }
  return "?";
}

/// A boundary facet: one node in 1D, an edge (two nodes) in 2D.
struct Facet {
  std::array<std::size_t, 2> nodes{};
  std::size_t node_count = 0;
  BoundaryTag tag = BoundaryTag::Side;
  std::size_t cell = 0;  // the unique cell owning this facet
};

/// Immutable after construction. In 1D the single coordinate is stored in
/// component 0 and represents the height of the film.
class Mesh {
 public:
  Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<std::size_t, 3>> cells,
       std::vector<Facet> facets, Point extent)
      : dim_(dim), nodes_(std::move(nodes)), cells_(std::move(cells)), facets_(std::move(facets)), extent_(extent) {}

  int dim() const { return dim_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t nodes_per_cell() const { return static_cast<std::size_t>(dim_) + 1; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  const std::array<std::size_t, 3>& cell(std::size_t c) const { return cells_[c]; }
  const std::vector<std::array<std::size_t, 3>>& cells() const { return cells_; }
  const std::vector<Facet>& boundary_facets() const { return facets_; }

  /// Domain extent: (length, 0) in 1D, (L_x, L_y) in 2D.
  const Point& extent() const { return extent_; }
  double height() const { return dim_ == 1 ? extent_[0] : extent_[1]; }
  double vertical_coordinate(const Point& p) const { return dim_ == 1 ? p[0] : p[1]; }

  /// Signed measure (length or area); positive for every cell of the built meshes.
  double cell_measure(std::size_t c) const {
    const auto& v = cells_[c];
    if (dim_ == 1) return nodes_[v[1]][0] - nodes_[v[0]][0];
    const auto& a = nodes_[v[0]];
    const auto& b = nodes_[v[1]];
    const auto& d = nodes_[v[2]];
    return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
  }

  double facet_measure(const Facet& f) const {
    if (f.node_count == 1) return 1.0;
    const auto& a = nodes_[f.nodes[0]];
    const auto& b = nodes_[f.nodes[1]];
    return std::hypot(b[0] - a[0], b[1] - a[1]);
  }

 private:
  int dim_;
  std::vector<Point> nodes_;
  std::vector<std::array<std::size_t, 3>> cells_;
  std::vector<Facet> facets_;
  Point extent_;
};

inline Mesh build_interval_mesh(std::size_t n_y, double length) {
  if (n_y == 0) throw std::invalid_argument("build_interval_mesh: cell count must be >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("build_interval_mesh: length must be positive");
  std::vector<Point> nodes(n_y + 1);
  for (std::size_t i = 0; i <= n_y; ++i)
    nodes[i] = {i == n_y ? length : length * static_cast<double>(i) / static_cast<double>(n_y), 0.0};
  std::vector<std::array<std::size_t, 3>> cells(n_y);
  for (std::size_t i = 0; i < n_y; ++i) cells[i] = {i, i + 1, 0};
  std::vector<Facet> facets{
      Facet{{0, 0}, 1, BoundaryTag::Bottom, 0},
      Facet{{n_y, 0}, 1, BoundaryTag::Top, n_y - 1},
  };
  return {1, std::move(nodes), std::move(cells), std::move(facets), {length, 0.0}};
}

/// Node (i, j) has index j*(n_x+1) + i. Each grid quad is split along its
/// bottom-left to top-right diagonal into two counter-clockwise triangles.
/// Facets are listed bottom, top, left side, right side.
inline Mesh build_rect_mesh(std::size_t n_x, std::size_t n_y, double l_x, double l_y) {
  if (n_x == 0 || n_y == 0) throw std::invalid_argument("build_rect_mesh: cell counts must be >= 1");
  if (!(l_x > 0.0) || !(l_y > 0.0)) throw std::invalid_argument("build_rect_mesh: extents must be positive");
  const std::size_t stride = n_x + 1;
  auto id = [stride](std::size_t i, std::size_t j) { return j * stride + i; };
  auto coord = [](std::size_t i, std::size_t n, double l) {
    return i == n ? l : l * static_cast<double>(i) / static_cast<double>(n);
  };
  std::vector<Point> nodes((n_x + 1) * (n_y + 1));
  for (std::size_t j = 0; j <= n_y; ++j)
    for (std::size_t i = 0; i <= n_x; ++i) nodes[id(i, j)] = {coord(i, n_x, l_x), coord(j, n_y, l_y)};

  std::vector<std::array<std::size_t, 3>> cells;
  cells.reserve(2 * n_x * n_y);
  for (std::size_t j = 0; j < n_y; ++j)
    for (std::size_t i = 0; i < n_x; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  // quad (i, j) owns cells 2q (lower-right) and 2q+1 (upper-left)
  auto lower = [n_x](std::size_t i, std::size_t j) { return 2 * (j * n_x + i); };
  std::vector<Facet> facets;
  facets.reserve(2 * (n_x + n_y));
  for (std::size_t i = 0; i < n_x; ++i) facets.push_back({{id(i, 0), id(i + 1, 0)}, 2, BoundaryTag::Bottom, lower(i, 0)});
  for (std::size_t i = 0; i < n_x; ++i)
    facets.push_back({{id(i, n_y), id(i + 1, n_y)}, 2, BoundaryTag::Top, lower(i, n_y - 1) + 1});
  for (std::size_t j = 0; j < n_y; ++j) facets.push_back({{id(0, j), id(0, j + 1)}, 2, BoundaryTag::Side, lower(0, j) + 1});
  for (std::size_t j = 0; j < n_y; ++j)
    facets.push_back({{id(n_x, j), id(n_x, j + 1)}, 2, BoundaryTag::Side, lower(n_x - 1, j)});
  return {2, std::move(nodes), std::move(cells), std::move(facets), {l_x, l_y}};
}

inline std::vector<Facet> facets_with_tag(const Mesh& mesh, BoundaryTag tag) {
  std::vector<Facet> out;
  for (const auto& f : mesh.boundary_facets())
    if (f.tag == tag) out.push_back(f);
  return out;
}

}  // namespace morpho
