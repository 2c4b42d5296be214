#include "m1dose/output.hpp"

#include "m1dose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace m1dose {

namespace {

std::ofstream open_for_writing(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return os;
}

void put(std::ofstream& os, double v, char sep) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
  os << buf;
}

double lumped_1d(const StructuredGrid& grid, int axis, int i) {
  const int n = grid.nodes[axis];
  if (n == 1) {
    return 1.0;
  }
  const double h = grid.spacing[axis];
  return (i == 0 || i == n - 1) ? 0.5 * h : h;
}

} // namespace

std::vector<double> transverse_weights(const StructuredGrid& grid, int axis) {
  if (axis < 0 || axis >= grid.dim) {
    throw ValidationError("axis outside the grid dimension");
  }
  std::vector<double> w(grid.num_nodes());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto ijk = grid.node_multi_index(i);
    double prod = 1.0;
    for (int k = 0; k < grid.dim; ++k) {
      if (k != axis) {
        prod *= lumped_1d(grid, k, ijk[k]);
      }
    }
    w[i] = prod;
  }
  return w;
}

std::vector<double> plane_integrated_dose(std::span<const double> dose, const StructuredGrid& grid,
                                          int axis) {
  if (grid.dim < 2) {
    throw ValidationError("plane integration needs dim >= 2");
  }
  const auto w = transverse_weights(grid, axis);
  std::vector<double> curve(grid.nodes[axis], 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    curve[grid.node_multi_index(i)[axis]] += dose[i] * w[i];
  }
  return curve;
}

double relative_l2_error(std::span<const double> values, std::span<const double> reference,
                         std::span<const double> weights) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double e = values[i] - reference[i];
    num += weights[i] * e * e;
    den += weights[i] * reference[i] * reference[i];
  }
  return std::sqrt(num / den);
}

void write_dose_csv_1d(const std::filesystem::path& path, std::span<const double> xs,
                       std::span<const double> dose, std::span<const double> reference) {
  auto os = open_for_writing(path);
  os << "x,dose,reference,abs_error,rel_error\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double peak = 0.0;
  for (double r : reference) {
    peak = std::max(peak, r);
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    put(os, xs[k], ',');
    put(os, dose[k], ',');
    if (reference.empty()) {
      put(os, nan, ',');
      put(os, nan, ',');
      put(os, nan, '\n');
    } else {
      const double err = std::abs(dose[k] - reference[k]);
      put(os, reference[k], ',');
      put(os, err, ',');
      put(os, peak > 0.0 ? err / peak : nan, '\n');
    }
  }
}

void write_plane_csv(const std::filesystem::path& path, std::span<const double> xs,
                     std::span<const double> integrated, std::span<const double> reference) {
  auto os = open_for_writing(path);
  os << "x,integrated_dose,reference\n";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    put(os, xs[k], ',');
    put(os, integrated[k], ',');
    put(os, reference.empty() ? std::numeric_limits<double>::quiet_NaN() : reference[k], '\n');
  }
}

int nearest_plane(const StructuredGrid& grid, int axis, double x) {
  const double t = (x - grid.lower[axis]) / grid.spacing[axis];
  return std::clamp(static_cast<int>(std::lround(t)), 0, grid.nodes[axis] - 1);
}

void write_vtk(const std::filesystem::path& path, const StructuredGrid& grid,
               std::span<const VtkField> fields, std::optional<VtkSlice> slice) {
  Index3 lo{0, 0, 0};
  Index3 hi = grid.nodes;
  if (slice) {
    if (slice->axis < 0 || slice->axis >= grid.dim || slice->index < 0 ||
        slice->index >= grid.nodes[slice->axis]) {
      throw ValidationError("vtk slice outside the grid");
    }
    lo[slice->axis] = slice->index;
    hi[slice->axis] = slice->index + 1;
  }
  auto os = open_for_writing(path);
  os << "# vtk DataFile Version 3.0\nm1dose\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << hi[0] - lo[0] << ' ' << hi[1] - lo[1] << ' ' << hi[2] - lo[2] << '\n';
  os << "ORIGIN ";
  for (int k = 0; k < 3; ++k) {
    put(os, grid.lower[k] + lo[k] * grid.spacing[k], k < 2 ? ' ' : '\n');
  }
  os << "SPACING ";
  for (int k = 0; k < 3; ++k) {
    put(os, grid.nodes[k] > 1 ? grid.spacing[k] : 1.0, k < 2 ? ' ' : '\n');
  }
  const std::size_t count = static_cast<std::size_t>(hi[0] - lo[0]) * (hi[1] - lo[1]) *
                            (hi[2] - lo[2]);
  os << "POINT_DATA " << count << '\n';
  for (const auto& f : fields) {
    if (f.values.size() != grid.num_nodes()) {
      throw std::invalid_argument("vtk field '" + f.name + "' has the wrong size");
    }
    os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (int k = lo[2]; k < hi[2]; ++k) {
      for (int j = lo[1]; j < hi[1]; ++j) {
        for (int i = lo[0]; i < hi[0]; ++i) {
          put(os, f.values[grid.node_index({i, j, k})], '\n');
        }
      }
    }
  }
  if (!os) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

} // namespace m1dose
