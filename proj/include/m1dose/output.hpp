#pragma once

#include "m1dose/grid.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace m1dose {

/// Integral of phi_i over the hyperplane through node i normal to `axis`.
std::vector<double> transverse_weights(const StructuredGrid& grid, int axis);

/// Sum over each node plane normal to `axis` of D_i times its transverse weight.
std::vector<double> plane_integrated_dose(std::span<const double> dose, const StructuredGrid& grid,
                                          int axis);

/// sqrt(sum m_i (a_i - b_i)^2 / sum m_i b_i^2).
double relative_l2_error(std::span<const double> values, std::span<const double> reference,
                         std::span<const double> weights);

/// Columns x, dose, reference, abs_error, rel_error; rel_error is |D - Dref| / max Dref.
/// An empty reference writes NaN in the last three columns.
void write_dose_csv_1d(const std::filesystem::path& path, std::span<const double> xs,
                       std::span<const double> dose, std::span<const double> reference);

/// Columns x, integrated_dose, reference.
void write_plane_csv(const std::filesystem::path& path, std::span<const double> xs,
                     std::span<const double> integrated, std::span<const double> reference);

struct VtkField {
  std::string name;
  std::span<const double> values; ///< one per node
};

/// Node plane normal to `axis` at index `index`.
struct VtkSlice {
  int axis = 2;
  int index = 0;
};

/// Legacy ASCII STRUCTURED_POINTS with one SCALARS block per field.
void write_vtk(const std::filesystem::path& path, const StructuredGrid& grid,
               std::span<const VtkField> fields, std::optional<VtkSlice> slice = {});

/// Node plane index nearest to coordinate `x` on `axis`.
int nearest_plane(const StructuredGrid& grid, int axis, double x);

} // namespace m1dose
