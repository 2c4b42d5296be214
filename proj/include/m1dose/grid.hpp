#pragma once

#include "m1dose/physics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace m1dose {

using Index3 = std::array<int, 3>;
using Point3 = std::array<double, 3>;

/// Uniform tensor-product Q1 mesh on an axis-aligned box. Nodes are numbered
/// lexicographically with x fastest; unused axes have one node.
struct StructuredGrid {
  int dim = 1;
  Point3 lower{};
  Point3 upper{};
  Index3 nodes{1, 1, 1};
  Point3 spacing{};

  std::size_t num_nodes() const {
    return static_cast<std::size_t>(nodes[0]) * nodes[1] * nodes[2];
  }
  std::size_t num_cells() const;

  std::size_t node_index(const Index3& ijk) const {
    return (static_cast<std::size_t>(ijk[2]) * nodes[1] + ijk[1]) * nodes[0] + ijk[0];
  }
  Index3 node_multi_index(std::size_t node) const;
  Point3 position(std::size_t node) const;

  Index3 cells() const;
  std::size_t cell_index(const Index3& ijk) const;
  Point3 cell_center(const Index3& ijk) const;

  /// Cell whose material a node takes: the neighbouring cell with the
  /// smallest index along every axis.
  Index3 owning_cell(std::size_t node) const;

  /// Q1 neighbours of a node, excluding the node itself, in ascending order.
  std::vector<std::size_t> neighbors(std::size_t node) const;

  double volume() const;
  double surface_area() const;
};

/// Throws ValidationError for dim outside 1..3, fewer than two nodes per
/// axis or an empty extent.
StructuredGrid build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                          std::span<const int> nodes_per_axis);

/// Per-cell material assignment.
struct MaterialMap {
  std::vector<Material> materials;
  std::vector<int> cell_material;

  static MaterialMap homogeneous(const StructuredGrid& grid, const Material& mat);
};

struct Edge {
  std::uint32_t i = 0; ///< i < j
  std::uint32_t j = 0;
  double mass = 0.0;      ///< consistent mass m_ij
  double viscosity = 0.0; ///< graph viscosity d_ij
  Point3 c_ij{};
  Point3 c_ji{};
};

/// An edge as seen from one of its end points.
struct NodeEdge {
  std::uint32_t edge = 0;
  std::uint32_t other = 0;
  bool is_first = true; ///< this node is Edge::i
};

/// Boundary face contribution of one node: w = integral of phi_i over the face.
struct BoundaryFacet {
  int axis = 0;
  int side = 0; ///< 0: lower face, 1: upper face
  double weight = 0.0;
  Point3 normal{};
};

struct MaterialWeight {
  int material = 0;
  double weight = 0.0;
};

/// Precomputed finite element coefficients on a structured grid.
struct DiscreteOperators {
  int dim = 1;
  std::vector<double> lumped_mass;
  std::vector<double> mass_diagonal;
  std::vector<Edge> edges;

  std::vector<std::uint32_t> adjacency_offsets;
  std::vector<NodeEdge> adjacency;

  std::vector<std::uint32_t> facet_offsets;
  std::vector<BoundaryFacet> facets;
  /// lambda_max / 2 times the summed facet weights of each node.
  std::vector<double> boundary_viscosity;

  // Integral of phi_i (nodes) and phi_i phi_j (edges) split by material, so
  // that the scattering masses at any energy are sums over materials.
  std::vector<std::uint32_t> node_scatter_offsets;
  std::vector<MaterialWeight> node_scatter;
  std::vector<std::uint32_t> edge_scatter_offsets;
  std::vector<MaterialWeight> edge_scatter;

  std::vector<Material> materials;
  std::vector<int> node_material;

  std::size_t num_nodes() const { return lumped_mass.size(); }

  std::span<const NodeEdge> node_edges(std::size_t node) const {
    return {adjacency.data() + adjacency_offsets[node],
            adjacency.data() + adjacency_offsets[node + 1]};
  }
  std::span<const BoundaryFacet> node_facets(std::size_t node) const {
    return {facets.data() + facet_offsets[node], facets.data() + facet_offsets[node + 1]};
  }
  const Material& material_of(std::size_t node) const { return materials[node_material[node]]; }
};

/// Exact Q1 integrals on the uniform cells with d_ij = lambda_max max(|c_ij|, |c_ji|).
DiscreteOperators assemble_operators(const StructuredGrid& grid, const MaterialMap& materials);

/// Scattering power of every material at `energy` (clamped to E_min).
std::vector<double> material_scattering_powers(const DiscreteOperators& ops, double energy);

/// Lumped scattering mass m_i^T = integral of T phi_i with T given per material.
std::vector<double> scattering_mass(const DiscreteOperators& ops,
                                    std::span<const double> t_per_material);
std::vector<double> scattering_mass(const DiscreteOperators& ops, double energy);

/// Consistent scattering mass m_ij^T per edge.
std::vector<double> edge_scattering_mass(const DiscreteOperators& ops,
                                         std::span<const double> t_per_material);

} // namespace m1dose
