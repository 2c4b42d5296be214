#include "m1dose/errors.hpp"
#include "m1dose/run.hpp"
#include "m1dose/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

// Exit codes by failure category.
enum Exit { ok = 0, usage = 2, invalid = 3, solver = 4, io = 5 };

std::vector<int> parse_nodes(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(part, &used);
    if (used != part.size()) {
      throw m1dose::ValidationError("--nodes: '" + part + "' is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

void configure_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("M1DOSE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
      omp_set_num_threads(n);
    }
  }
#endif
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proton dose engine for the energy-dependent M1 model"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string scenario_path;
  std::string mode;
  double cfl = 0.0;
  std::string nodes;
  bool no_scattering = false;
  std::string out_dir = ".";
  bool gray = false;
  std::size_t progress = 0;
  run->add_option("scenario", scenario_path, "Scenario file or bundled scenario name")->required();
  run->add_option("--mode", mode, "Transport scheme")->check(CLI::IsMember({"low", "mcl"}));
  run->add_option("--cfl", cfl, "CFL number in (0, 1]");
  run->add_option("--nodes", nodes, "Node counts NX[,NY[,NZ]]");
  run->add_flag("--no-scattering", no_scattering, "Disable the scattering substeps");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--gy", gray, "Report dose in Gy instead of MeV/g");
  run->add_option("--progress", progress, "Print every n-th energy level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : usage;
  }

  configure_threads();
  try {
    m1dose::RunOptions options;
    if (!mode.empty()) {
      options.mode = mode == "low" ? m1dose::Scheme::low_order : m1dose::Scheme::mcl;
    }
    if (run->count("--cfl")) {
      options.cfl = cfl;
    }
    if (!nodes.empty()) {
      options.nodes = parse_nodes(nodes);
    }
    options.no_scattering = no_scattering;
    options.out_dir = out_dir;
    options.gray = gray;
    options.log = &std::cout;
    options.progress_every = progress;

    const auto path = m1dose::resolve_scenario_path(scenario_path);
    const auto scenario = m1dose::apply_overrides(m1dose::parse_scenario(path), options);
    const auto summary = m1dose::run_scenario(scenario, options);
    return summary.violations == 0 ? ok : solver;
  } catch (const m1dose::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return invalid;
  } catch (const m1dose::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return invalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return invalid;
  } catch (const m1dose::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return solver;
  } catch (const m1dose::InvariantViolation& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return solver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io;
  }
}
