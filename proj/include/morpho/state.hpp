#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>

#include "morpho/energy.hpp"
#include "morpho/fe_space.hpp"
#include "morpho/mesh.hpp"

namespace morpho {

/// The mesh with its three spaces: P1 scalars (volume fractions, potentials,
/// vapor), P2 vector velocity and P1 pressure (Taylor-Hood).
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const FESpace> scalar;
  std::shared_ptr<const FESpace> velocity;
  std::shared_ptr<const FESpace> pressure;

  explicit Discretization(Mesh m)
      : mesh(std::make_shared<const Mesh>(std::move(m))),
        scalar(std::make_shared<const FESpace>(mesh, 1, 1)),
        velocity(std::make_shared<const FESpace>(mesh, 2, mesh->dim())),
        pressure(std::make_shared<const FESpace>(mesh, 1, 1)) {}
};

/// All discrete fields at one time level. Air is never stored.
struct SimState {
  std::size_t step = 0;
  double time = 0.0;
  std::array<FieldVector, kSolvedSpecies> phi;  // polymer, NFA, solvent
  FieldVector vapor;
  std::array<FieldVector, kSpeciesCount> mu;    // polymer, NFA, solvent, air
  FieldVector velocity;
  FieldVector pressure;
  std::uint64_t seed = 0;

  explicit SimState(const Discretization& d)
      : phi{FieldVector(d.scalar), FieldVector(d.scalar), FieldVector(d.scalar)},
        vapor(d.scalar),
        mu{FieldVector(d.scalar), FieldVector(d.scalar), FieldVector(d.scalar), FieldVector(d.scalar)},
        velocity(d.velocity),
        pressure(d.pressure) {}

  std::size_t node_count() const { return vapor.size(); }

  double air(std::size_t node) const { return 1.0 - phi[0][node] - phi[1][node] - phi[2][node]; }

  PhasePoint point(std::size_t node) const { return {phi[0][node], phi[1][node], phi[2][node], vapor[node]}; }

  Vector air_field() const {
    Vector a(node_count());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = air(i);
    return a;
  }
};

}  // namespace morpho
