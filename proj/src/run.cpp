#include "m1dose/run.hpp"

#include "m1dose/errors.hpp"
#include "m1dose/oracle.hpp"
#include "m1dose/output.hpp"
#include "m1dose/stepper.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace m1dose {

Scenario apply_overrides(Scenario scenario, const RunOptions& options) {
  if (options.mode) {
    scenario.solver.scheme = *options.mode;
  }
  if (options.cfl) {
    scenario.solver.cfl = *options.cfl;
  }
  if (options.no_scattering) {
    scenario.solver.scattering = false;
  }
  if (options.nodes) {
    const auto& n = *options.nodes;
    if (static_cast<int>(n.size()) != scenario.dim) {
      throw ValidationError("--nodes needs " + std::to_string(scenario.dim) + " counts");
    }
    for (int k = 0; k < scenario.dim; ++k) {
      if (n[k] < 2) {
        throw ValidationError("--nodes: every count must be >= 2");
      }
      scenario.nodes[k] = n[k];
    }
  }
  scenario.validate();
  return scenario;
}

namespace {

template <int Dim>
Simulation simulate_dim(const Scenario& sc, const LevelHook& hook, std::ostream* log,
                        std::size_t progress_every) {
  const auto start = std::chrono::steady_clock::now();
  Simulation sim;
  sim.grid = sc.grid();
  sim.ops = assemble_operators(sim.grid, sc.material_map(sim.grid));

  Stepper<Dim> stepper(sim.grid, sim.ops, sc.beams, sc.solver);
  auto field = stepper.initial_field(sc.max_energy());
  auto dose = start_dose(field);

  const std::size_t n = sim.grid.num_nodes();
  std::vector<double> psi0(n);
  std::vector<double> psi1(n);
  auto progress = [&](const LevelInfo& info, const SolutionField<Dim>& f) {
    for (const auto& s : f.su) {
      if (!is_realizable(s)) {
        ++sim.violations;
      }
    }
    if (hook) {
      const auto s = stepper.stopping_powers(f.energy);
      for (std::size_t i = 0; i < n; ++i) {
        psi0[i] = f.su[i].psi0 / s[i];
        psi1[i] = norm<Dim>(f.su[i].psi1) / s[i];
      }
      hook(info.level, info.energy, psi0, psi1);
    }
    if (log && progress_every > 0 && info.level % progress_every == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "level %zu  E = %.6g MeV  dE = %.3g  psi0 in [%.3g, %.3g]\n",
                    info.level, info.energy, info.step, info.min_psi0, info.max_psi0);
      *log << buf << std::flush;
    }
  };
  auto result = stepper.strang_march(std::move(field), dose, progress);

  sim.dose = finalize_dose(dose, result.field, sim.ops);
  const auto s_min = stepper.stopping_powers(result.field.energy);
  sim.psi0.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sim.psi0[i] = result.field.su[i].psi0 / s_min[i];
  }
  sim.levels = result.levels;
  sim.realizability_checks = result.realizability_checks;
  sim.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sim;
}

std::filesystem::path labelled(const std::filesystem::path& file, const RunOptions& options) {
  if (!options.mode) {
    return file;
  }
  auto out = file;
  out.replace_filename(file.stem().string() +
                       (*options.mode == Scheme::mcl ? "_mcl" : "_low") +
                       file.extension().string());
  return out;
}

std::vector<double> axis_coordinates(const StructuredGrid& grid, int axis) {
  std::vector<double> xs(grid.nodes[axis]);
  for (int k = 0; k < grid.nodes[axis]; ++k) {
    xs[k] = grid.lower[axis] + k * grid.spacing[axis];
  }
  return xs;
}

} // namespace

Simulation simulate(const Scenario& scenario, const LevelHook& hook, std::ostream* log,
                    std::size_t progress_every) {
  switch (scenario.dim) {
  case 1: return simulate_dim<1>(scenario, hook, log, progress_every);
  case 2: return simulate_dim<2>(scenario, hook, log, progress_every);
  case 3: return simulate_dim<3>(scenario, hook, log, progress_every);
  default: throw ValidationError("dimension must be 1, 2 or 3");
  }
}

std::vector<double> scenario_reference(const Scenario& scenario, std::span<const double> xs) {
  if (scenario.beams.size() != 1) {
    return {};
  }
  std::vector<std::string> names;
  for (const auto& r : scenario.regions) {
    names.push_back(r.material);
  }
  if (std::adjacent_find(names.begin(), names.end(), std::not_equal_to<>()) != names.end()) {
    return {};
  }
  const auto& beam = scenario.beams.front();
  const auto spectrum = InflowSpectrum::gaussian(beam.protons, beam.energy, beam.energy_spread);
  std::vector<double> depth(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    depth[k] = std::max(0.0, xs[k] - scenario.lower[beam.axis]);
  }
  return reference_curve(scenario.material(names.front()), spectrum, depth,
                         scenario.max_energy());
}

RunSummary run_scenario(const Scenario& scenario, const RunOptions& options) {
  namespace fs = std::filesystem;
  const double unit = options.gray ? constants::mev_per_gram_to_gray : 1.0;
  const char* unit_name = options.gray ? "Gy" : "MeV/g";
  RunSummary summary;
  fs::create_directories(options.out_dir);

  auto checkpoints = scenario.checkpoints;
  std::sort(checkpoints.rbegin(), checkpoints.rend());
  std::size_t next_checkpoint = 0;
  double previous_energy = scenario.max_energy();
  const auto grid = scenario.grid();
  LevelHook hook;
  if (!checkpoints.empty()) {
    hook = [&](std::size_t, double energy, std::span<const double> psi0,
               std::span<const double> psi1) {
      while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] < previous_energy &&
             checkpoints[next_checkpoint] >= energy) {
        char name[64];
        std::snprintf(name, sizeof name, "checkpoint_E%g", checkpoints[next_checkpoint]);
        fs::path path = options.out_dir / name;
        if (grid.dim == 1) {
          path += ".csv";
          const auto xs = axis_coordinates(grid, 0);
          std::vector<double> ref;
          write_dose_csv_1d(path, xs, psi0, ref);
        } else {
          path += ".vtk";
          const VtkField fields[] = {{"psi0", psi0}, {"psi1_norm", psi1}};
          write_vtk(path, grid, fields);
        }
        summary.written.push_back(path);
        ++next_checkpoint;
      }
      previous_energy = energy;
    };
  }

  const auto sim = simulate(scenario, hook, options.log, options.progress_every);

  std::vector<double> dose(sim.dose.size());
  std::vector<double> energy_density(sim.dose.size());
  for (std::size_t i = 0; i < dose.size(); ++i) {
    dose[i] = unit * sim.dose[i];
    energy_density[i] = sim.ops.material_of(i).rho * dose[i];
  }
  const auto peak = std::max_element(dose.begin(), dose.end());
  summary.max_dose = *peak;
  summary.peak_position = sim.grid.position(static_cast<std::size_t>(peak - dose.begin()));
  summary.levels = sim.levels;
  summary.wall_seconds = sim.wall_seconds;
  summary.violations = sim.violations;
  summary.realizability_checks = sim.realizability_checks;

  if (sim.grid.dim == 1) {
    const auto xs = axis_coordinates(sim.grid, 0);
    auto ref = scenario_reference(scenario, xs);
    if (!ref.empty()) {
      summary.l2_error = relative_l2_error(sim.dose, ref, sim.ops.lumped_mass);
    }
  }

  for (const auto& out : scenario.outputs) {
    const fs::path path = options.out_dir / labelled(out.file, options);
    switch (out.kind) {
    case OutputKind::dose_csv_1d: {
      if (sim.grid.dim != 1) {
        throw ValidationError("dose_csv_1d needs a 1D scenario");
      }
      const auto xs = axis_coordinates(sim.grid, 0);
      auto ref = scenario_reference(scenario, xs);
      for (auto& r : ref) {
        r *= unit;
      }
      write_dose_csv_1d(path, xs, dose, ref);
      break;
    }
    case OutputKind::reference_csv: {
      const int axis = sim.grid.dim == 1 ? 0 : scenario.beams.front().axis;
      const auto xs = axis_coordinates(sim.grid, axis);
      auto ref = scenario_reference(scenario, xs);
      if (ref.empty()) {
        throw ValidationError("reference_csv needs a homogeneous single-beam scenario");
      }
      for (auto& r : ref) {
        r *= unit;
      }
      write_reference_csv(path, xs, ref);
      break;
    }
    case OutputKind::plane_integrated_csv: {
      const auto xs = axis_coordinates(sim.grid, out.axis);
      const auto curve = plane_integrated_dose(dose, sim.grid, out.axis);
      std::vector<double> ref;
      if (scenario.beams.size() == 1 && scenario.beams.front().axis == out.axis) {
        ref = scenario_reference(scenario, xs);
        for (auto& r : ref) {
          r *= unit;
        }
      }
      write_plane_csv(path, xs, curve, ref);
      break;
    }
    case OutputKind::dose_vtk:
    case OutputKind::energy_density_vtk: {
      std::optional<VtkSlice> slice;
      if (out.slice) {
        slice = VtkSlice{out.axis, nearest_plane(sim.grid, out.axis, *out.slice)};
      }
      if (out.kind == OutputKind::dose_vtk) {
        const VtkField fields[] = {
            {"dose", dose}, {"psi0", sim.psi0}, {"energy_density", energy_density}};
        write_vtk(path, sim.grid, fields, slice);
      } else {
        const VtkField fields[] = {{"energy_density", energy_density}};
        write_vtk(path, sim.grid, fields, slice);
      }
      break;
    }
    }
    summary.written.push_back(path);
  }

  if (options.log) {
    auto& os = *options.log;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "scenario        %s\nscheme          %s\nnodes           %zu\nlevels          "
                  "%zu\nwall time       %.3f s\nmax dose        %.10g %s\n",
                  scenario.name.c_str(),
                  scenario.solver.scheme == Scheme::mcl ? "mcl" : "low", sim.grid.num_nodes(),
                  summary.levels, summary.wall_seconds, summary.max_dose, unit_name);
    os << buf;
    std::snprintf(buf, sizeof buf, "peak position   (%.6g, %.6g, %.6g) cm\n",
                  summary.peak_position[0], summary.peak_position[1], summary.peak_position[2]);
    os << buf;
    os << "realizability   " << summary.violations << " violations in "
       << summary.realizability_checks << " checks\n";
    if (summary.l2_error) {
      std::snprintf(buf, sizeof buf, "rel L2 error    %.6g\n", *summary.l2_error);
      os << buf;
    }
    for (const auto& p : summary.written) {
      os << "wrote           " << p.string() << '\n';
    }
  }
  return summary;
}

} // namespace m1dose
