#include "m1dose/grid.hpp"

#include "m1dose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace m1dose {

namespace {

// One-dimensional hat-function integrals on a uniform axis with n nodes.
struct Axis1D {
  int n = 1;
  double h = 0.0;

  int adjacent_cells(int i) const { return (i > 0 ? 1 : 0) + (i < n - 1 ? 1 : 0); }

  // integral of a_i a_j
  double mass(int i, int j) const {
    if (n == 1) {
      return 1.0;
    }
    return i == j ? h / 3.0 * adjacent_cells(i) : h / 6.0;
  }

  // integral of a_i a_j'
  double derivative(int i, int j) const {
    if (n == 1) {
      return 0.0;
    }
    if (j == i + 1) {
      return 0.5;
    }
    if (j == i - 1) {
      return -0.5;
    }
    return (i == 0 ? -0.5 : 0.0) + (i == n - 1 ? 0.5 : 0.0);
  }

  // integral of a_i
  double lumped(int i) const { return n == 1 ? 1.0 : 0.5 * h * adjacent_cells(i); }

  // Cells along this axis that contain both i and j.
  void shared_cells(int i, int j, std::vector<int>& out) const {
    out.clear();
    if (n == 1) {
      out.push_back(0);
      return;
    }
    if (i == j) {
      if (i > 0) {
        out.push_back(i - 1);
      }
      if (i < n - 1) {
        out.push_back(i);
      }
    } else {
      out.push_back(std::min(i, j));
    }
  }

  double cell_mass(int i, int j) const {
    if (n == 1) {
      return 1.0;
    }
    return i == j ? h / 3.0 : h / 6.0;
  }
  double cell_lumped() const { return n == 1 ? 1.0 : 0.5 * h; }
};

void add_weight(std::vector<MaterialWeight>& list, std::size_t begin, int material, double w) {
  for (std::size_t k = begin; k < list.size(); ++k) {
    if (list[k].material == material) {
      list[k].weight += w;
      return;
    }
  }
  list.push_back({material, w});
}

} // namespace

std::size_t StructuredGrid::num_cells() const {
  const auto c = cells();
  return static_cast<std::size_t>(c[0]) * c[1] * c[2];
}

Index3 StructuredGrid::cells() const {
  Index3 c{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    c[a] = nodes[a] - 1;
  }
  return c;
}

std::size_t StructuredGrid::cell_index(const Index3& ijk) const {
  const auto c = cells();
  return (static_cast<std::size_t>(ijk[2]) * c[1] + ijk[1]) * c[0] + ijk[0];
}

Index3 StructuredGrid::node_multi_index(std::size_t node) const {
  Index3 ijk{};
  ijk[0] = static_cast<int>(node % nodes[0]);
  node /= nodes[0];
  ijk[1] = static_cast<int>(node % nodes[1]);
  ijk[2] = static_cast<int>(node / nodes[1]);
  return ijk;
}

Point3 StructuredGrid::position(std::size_t node) const {
  const auto ijk = node_multi_index(node);
  Point3 x{};
  for (int a = 0; a < dim; ++a) {
    x[a] = ijk[a] == nodes[a] - 1 ? upper[a] : lower[a] + ijk[a] * spacing[a];
  }
  return x;
}

Point3 StructuredGrid::cell_center(const Index3& ijk) const {
  Point3 x{};
  for (int a = 0; a < dim; ++a) {
    x[a] = lower[a] + (ijk[a] + 0.5) * spacing[a];
  }
  return x;
}

Index3 StructuredGrid::owning_cell(std::size_t node) const {
  auto ijk = node_multi_index(node);
  for (int a = 0; a < dim; ++a) {
    ijk[a] = std::max(ijk[a] - 1, 0);
  }
  return ijk;
}

std::vector<std::size_t> StructuredGrid::neighbors(std::size_t node) const {
  const auto ijk = node_multi_index(node);
  std::vector<std::size_t> out;
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    lo[a] = std::max(ijk[a] - 1, 0);
    hi[a] = std::min(ijk[a] + 1, nodes[a] - 1);
  }
  for (int k = lo[2]; k <= hi[2]; ++k) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const auto other = node_index({i, j, k});
        if (other != node) {
          out.push_back(other);
        }
      }
    }
  }
  return out;
}

double StructuredGrid::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) {
    v *= upper[a] - lower[a];
  }
  return v;
}

double StructuredGrid::surface_area() const {
  if (dim == 1) {
    return 2.0;
  }
  double area = 0.0;
  for (int a = 0; a < dim; ++a) {
    double face = 1.0;
    for (int b = 0; b < dim; ++b) {
      if (b != a) {
        face *= upper[b] - lower[b];
      }
    }
    area += 2.0 * face;
  }
  return area;
}

StructuredGrid build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                          std::span<const int> nodes_per_axis) {
  if (dim < 1 || dim > 3) {
    throw ValidationError("grid: dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
  if (lower.size() < static_cast<std::size_t>(dim) || upper.size() < lower.size() ||
      nodes_per_axis.size() < static_cast<std::size_t>(dim)) {
    throw ValidationError("grid: extents and node counts must be given for every axis");
  }
  StructuredGrid g;
  g.dim = dim;
  for (int a = 0; a < dim; ++a) {
    if (nodes_per_axis[a] < 2) {
      throw ValidationError("grid: need at least 2 nodes per axis");
    }
    if (!(upper[a] > lower[a]) || !std::isfinite(upper[a] - lower[a])) {
      throw ValidationError("grid: empty or invalid extent on axis " + std::to_string(a));
    }
    g.lower[a] = lower[a];
    g.upper[a] = upper[a];
    g.nodes[a] = nodes_per_axis[a];
    g.spacing[a] = (upper[a] - lower[a]) / (nodes_per_axis[a] - 1);
  }
  return g;
}

MaterialMap MaterialMap::homogeneous(const StructuredGrid& grid, const Material& mat) {
  MaterialMap m;
  m.materials = {mat};
  m.cell_material.assign(grid.num_cells(), 0);
  return m;
}

DiscreteOperators assemble_operators(const StructuredGrid& grid, const MaterialMap& materials) {
  if (materials.cell_material.size() != grid.num_cells()) {
    throw ValidationError("assemble_operators: material map does not match the grid");
  }
  for (const auto& m : materials.materials) {
    m.validate();
  }

  std::array<Axis1D, 3> axes;
  for (int a = 0; a < 3; ++a) {
    axes[a] = {grid.nodes[a], a < grid.dim ? grid.spacing[a] : 0.0};
  }

  const std::size_t n = grid.num_nodes();
  DiscreteOperators ops;
  ops.dim = grid.dim;
  ops.materials = materials.materials;
  ops.lumped_mass.resize(n);
  ops.mass_diagonal.resize(n);
  ops.node_material.resize(n);
  ops.adjacency_offsets.assign(n + 1, 0);
  ops.facet_offsets.assign(n + 1, 0);
  ops.boundary_viscosity.assign(n, 0.0);
  ops.node_scatter_offsets.assign(n + 1, 0);
  ops.edge_scatter_offsets.push_back(0);

  std::array<std::vector<int>, 3> shared;

  // Edges are created from their lower end point, so they come out sorted by i.
  for (std::size_t node = 0; node < n; ++node) {
    const auto I = grid.node_multi_index(node);

    double lumped = 1.0;
    double diag = 1.0;
    for (int a = 0; a < 3; ++a) {
      lumped *= axes[a].lumped(I[a]);
      diag *= axes[a].mass(I[a], I[a]);
    }
    ops.lumped_mass[node] = lumped;
    ops.mass_diagonal[node] = diag;
    ops.node_material[node] = materials.cell_material[grid.cell_index(grid.owning_cell(node))];

    // Lumped scattering weights: cells adjacent to the node.
    const std::size_t scatter_begin = ops.node_scatter.size();
    for (int a = 0; a < 3; ++a) {
      axes[a].shared_cells(I[a], I[a], shared[a]);
    }
    for (int ck : shared[2]) {
      for (int cj : shared[1]) {
        for (int ci : shared[0]) {
          const double w = axes[0].cell_lumped() * axes[1].cell_lumped() * axes[2].cell_lumped();
          add_weight(ops.node_scatter, scatter_begin,
                     materials.cell_material[grid.cell_index({ci, cj, ck})], w);
        }
      }
    }
    ops.node_scatter_offsets[node + 1] = static_cast<std::uint32_t>(ops.node_scatter.size());

    // Boundary faces.
    for (int a = 0; a < grid.dim; ++a) {
      for (int side = 0; side < 2; ++side) {
        if (I[a] != (side == 0 ? 0 : grid.nodes[a] - 1)) {
          continue;
        }
        BoundaryFacet f;
        f.axis = a;
        f.side = side;
        f.weight = 1.0;
        for (int b = 0; b < grid.dim; ++b) {
          if (b != a) {
            f.weight *= axes[b].lumped(I[b]);
          }
        }
        f.normal[a] = side == 0 ? -1.0 : 1.0;
        ops.facets.push_back(f);
        ops.boundary_viscosity[node] += 0.5 * constants::max_wave_speed * f.weight;
      }
    }
    ops.facet_offsets[node + 1] = static_cast<std::uint32_t>(ops.facets.size());

    for (std::size_t other : grid.neighbors(node)) {
      if (other < node) {
        continue;
      }
      const auto J = grid.node_multi_index(other);
      std::array<double, 3> m{};
      for (int a = 0; a < 3; ++a) {
        m[a] = axes[a].mass(I[a], J[a]);
      }
      Edge e;
      e.i = static_cast<std::uint32_t>(node);
      e.j = static_cast<std::uint32_t>(other);
      e.mass = m[0] * m[1] * m[2];
      for (int l = 0; l < grid.dim; ++l) {
        double transverse = 1.0;
        for (int a = 0; a < 3; ++a) {
          if (a != l) {
            transverse *= m[a];
          }
        }
        e.c_ij[l] = axes[l].derivative(I[l], J[l]) * transverse;
        e.c_ji[l] = axes[l].derivative(J[l], I[l]) * transverse;
      }
      const double norm_ij = std::sqrt(e.c_ij[0] * e.c_ij[0] + e.c_ij[1] * e.c_ij[1] +
                                       e.c_ij[2] * e.c_ij[2]);
      const double norm_ji = std::sqrt(e.c_ji[0] * e.c_ji[0] + e.c_ji[1] * e.c_ji[1] +
                                       e.c_ji[2] * e.c_ji[2]);
      e.viscosity = constants::max_wave_speed * std::max(norm_ij, norm_ji);
      ops.edges.push_back(e);

      const std::size_t edge_begin = ops.edge_scatter.size();
      for (int a = 0; a < 3; ++a) {
        axes[a].shared_cells(I[a], J[a], shared[a]);
      }
      const double w = axes[0].cell_mass(I[0], J[0]) * axes[1].cell_mass(I[1], J[1]) *
                       axes[2].cell_mass(I[2], J[2]);
      for (int ck : shared[2]) {
        for (int cj : shared[1]) {
          for (int ci : shared[0]) {
            add_weight(ops.edge_scatter, edge_begin,
                       materials.cell_material[grid.cell_index({ci, cj, ck})], w);
          }
        }
      }
      ops.edge_scatter_offsets.push_back(static_cast<std::uint32_t>(ops.edge_scatter.size()));
    }
  }

  // Node -> edge adjacency (CSR), neighbours in ascending order.
  for (const auto& e : ops.edges) {
    ++ops.adjacency_offsets[e.i + 1];
    ++ops.adjacency_offsets[e.j + 1];
  }
  for (std::size_t k = 0; k < n; ++k) {
    ops.adjacency_offsets[k + 1] += ops.adjacency_offsets[k];
  }
  ops.adjacency.resize(ops.adjacency_offsets[n]);
  std::vector<std::uint32_t> fill(ops.adjacency_offsets.begin(), ops.adjacency_offsets.end() - 1);
  for (std::uint32_t k = 0; k < ops.edges.size(); ++k) {
    const auto& e = ops.edges[k];
    ops.adjacency[fill[e.i]++] = {k, e.j, true};
    ops.adjacency[fill[e.j]++] = {k, e.i, false};
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::sort(ops.adjacency.begin() + ops.adjacency_offsets[k],
              ops.adjacency.begin() + ops.adjacency_offsets[k + 1],
              [](const NodeEdge& a, const NodeEdge& b) { return a.other < b.other; });
  }
  return ops;
}

std::vector<double> material_scattering_powers(const DiscreteOperators& ops, double energy) {
  const double e = std::max(energy, constants::min_energy);
  std::vector<double> t(ops.materials.size());
  for (std::size_t m = 0; m < t.size(); ++m) {
    t[m] = scattering_power(ops.materials[m], e);
  }
  return t;
}

std::vector<double> scattering_mass(const DiscreteOperators& ops,
                                    std::span<const double> t_per_material) {
  std::vector<double> mt(ops.num_nodes(), 0.0);
  for (std::size_t i = 0; i < mt.size(); ++i) {
    double s = 0.0;
    for (auto k = ops.node_scatter_offsets[i]; k < ops.node_scatter_offsets[i + 1]; ++k) {
      s += t_per_material[ops.node_scatter[k].material] * ops.node_scatter[k].weight;
    }
    mt[i] = s;
  }
  return mt;
}

std::vector<double> scattering_mass(const DiscreteOperators& ops, double energy) {
  return scattering_mass(ops, material_scattering_powers(ops, energy));
}

std::vector<double> edge_scattering_mass(const DiscreteOperators& ops,
                                         std::span<const double> t_per_material) {
  std::vector<double> mt(ops.edges.size(), 0.0);
  for (std::size_t e = 0; e < mt.size(); ++e) {
    double s = 0.0;
    for (auto k = ops.edge_scatter_offsets[e]; k < ops.edge_scatter_offsets[e + 1]; ++k) {
      s += t_per_material[ops.edge_scatter[k].material] * ops.edge_scatter[k].weight;
    }
    mt[e] = s;
  }
  return mt;
}

} // namespace m1dose
