#pragma once

#include "m1dose/grid.hpp"
#include "m1dose/scenario.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <iosfwd>
#include <optional>
#include <vector>

namespace m1dose {

struct RunOptions {
  std::optional<Scheme> mode;
  std::optional<double> cfl;
  std::optional<std::vector<int>> nodes;
  bool no_scattering = false;
  std::filesystem::path out_dir = ".";
  bool gray = false;
  std::ostream* log = nullptr;
  std::size_t progress_every = 0; ///< log every n-th level; 0 disables
};

/// Scenario with the command-line overrides applied and revalidated.
Scenario apply_overrides(Scenario scenario, const RunOptions& options);

struct Simulation {
  StructuredGrid grid;
  DiscreteOperators ops;
  std::vector<double> dose; ///< MeV/g
  std::vector<double> psi0; ///< at E_min
  std::size_t levels = 0;
  std::size_t realizability_checks = 0;
  /// Non-realizable nodal states seen at accepted levels; the stepper
  /// throws SolverFailure on any substep violation before this counts.
  std::size_t violations = 0;
  double wall_seconds = 0.0;
};

/// Per-level observer: energy reached, psi0 and |psi1| at every node.
using LevelHook = std::function<void(std::size_t level, double energy, std::span<const double> psi0,
                                     std::span<const double> psi1_norm)>;

/// Runs the full march without writing any files.
Simulation simulate(const Scenario& scenario, const LevelHook& hook = {},
                    std::ostream* log = nullptr, std::size_t progress_every = 0);

/// Scattering-free reference at `xs` for a homogeneous single-beam scenario;
/// empty otherwise.
std::vector<double> scenario_reference(const Scenario& scenario, std::span<const double> xs);

struct RunSummary {
  std::size_t levels = 0;
  double wall_seconds = 0.0;
  double max_dose = 0.0; ///< in the reported unit
  Point3 peak_position{};
  std::size_t violations = 0;
  std::size_t realizability_checks = 0;
  std::optional<double> l2_error;
  std::vector<std::filesystem::path> written;
};

/// simulate() plus every requested output and a summary on options.log.
RunSummary run_scenario(const Scenario& scenario, const RunOptions& options);

} // namespace m1dose
