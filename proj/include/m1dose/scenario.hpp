#pragma once

#include "m1dose/grid.hpp"
#include "m1dose/stepper.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace m1dose {

enum class OutputKind { dose_csv_1d, dose_vtk, plane_integrated_csv, reference_csv, energy_density_vtk };

std::string_view to_string(OutputKind kind);

struct OutputRequest {
  OutputKind kind = OutputKind::dose_csv_1d;
  std::string file; ///< relative to the output directory
  int axis = 0;     ///< plane_integrated_csv: axis of the curve; vtk: slice normal
  std::optional<double> slice; ///< vtk: restrict to the node plane nearest this coordinate
};

struct RegionSpec {
  Point3 lower{};
  Point3 upper{};
  std::string material;
  int line = 0;
};

struct Scenario {
  std::string name;
  std::filesystem::path source;
  int dim = 1;
  Point3 lower{};
  Point3 upper{};
  Index3 nodes{1, 1, 1};
  std::vector<Material> materials; ///< user-defined, searched before the built-ins
  std::vector<RegionSpec> regions;
  std::vector<BeamSpec> beams;
  StepperOptions solver;
  std::optional<double> e_max;     ///< default 1.1 max E0
  std::vector<double> checkpoints; ///< energies at which the field is dumped
  std::vector<OutputRequest> outputs;

  double max_energy() const;
  const Material& material(std::string_view name) const;
  StructuredGrid grid() const;
  /// Cell materials by cell centre; regions must partition the box.
  MaterialMap material_map(const StructuredGrid& grid) const;
  /// Throws ValidationError.
  void validate() const;
};

/// Reads a scenario file. Grammar:
///
///     # comment
///     [section]            grid, material <name>, region, beam, solver, output
///     key = value          lists are comma separated
///
/// See README for the keys of every section.
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(std::string_view text, const std::string& source = "<string>");

/// Looks next to the working directory first, then in the bundled scenario dir;
/// a missing extension defaults to ".ini".
std::filesystem::path resolve_scenario_path(const std::string& name);

} // namespace m1dose
