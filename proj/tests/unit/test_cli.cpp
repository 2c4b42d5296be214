#include "m1dose/errors.hpp"
#include "m1dose/output.hpp"
#include "m1dose/run.hpp"
#include "m1dose/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace m1dose;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("m1dose_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int parse_error_line(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

const char* small_1d = R"(
[grid]
dim = 1
lower = 0
upper = 4
nodes = 65

[region]
material = water

[beam]
energy = 62
protons = 1.21e9

[solver]
scattering = off

[output]
kind = dose_csv_1d
file = dose.csv
)";

} // namespace

TEST_CASE("bundled scenarios") {
  const auto water = parse_scenario(resolve_scenario_path("water_1d_62MeV"));
  CHECK(water.dim == 1);
  CHECK(water.lower[0] == 0.0);
  CHECK(water.upper[0] == 4.0);
  REQUIRE(water.beams.size() == 1);
  CHECK(water.beams[0].protons == 1.21e9);
  CHECK(water.beams[0].energy == 62.0);
  CHECK(water.beams[0].energy_spread == doctest::Approx(0.62));
  CHECK(water.beams[0].spot_sigma == 0.3);
  CHECK(water.beams[0].collimation == 0.9999);
  CHECK(water.max_energy() == doctest::Approx(68.2));
  CHECK(water.regions.size() == 1);
  CHECK(water.regions[0].material == "water");
  CHECK(water.solver.cfl == 0.5);
  CHECK_FALSE(water.solver.scattering);

  const auto patient = parse_scenario(resolve_scenario_path("patient_65MeV.ini"));
  REQUIRE(patient.regions.size() == 4);
  CHECK(patient.regions[0].upper[0] == 1.0);
  CHECK(patient.regions[1].upper[0] == 1.25);
  CHECK(patient.regions[2].upper[0] == 3.0);
  CHECK(patient.regions[1].material == "bone");
  CHECK(patient.regions[2].material == "lung");
  CHECK(patient.outputs[0].kind == OutputKind::energy_density_vtk);
  CHECK(patient.outputs[0].slice == 0.75);

  for (const char* name :
       {"water_3d_62MeV", "patient_65MeV_1d", "double_beam_2d"}) {
    CAPTURE(name);
    CHECK_NOTHROW(parse_scenario(resolve_scenario_path(name)));
  }
  const auto two = parse_scenario(resolve_scenario_path("double_beam_2d"));
  REQUIRE(two.beams.size() == 2);
  CHECK(two.beams[0].axis == 0);
  CHECK(two.beams[1].axis == 1);
}

TEST_CASE("scenario defaults") {
  const auto s = parse_scenario_text(small_1d);
  CHECK(s.solver.cfl == 0.5);
  CHECK(s.solver.scheme == Scheme::mcl);
  CHECK(s.regions[0].lower[0] == 0.0);
  CHECK(s.regions[0].upper[0] == 4.0);
  CHECK(s.beams[0].axis == 0);
}

TEST_CASE("scenario errors") {
  CHECK(parse_error_line("[grid]\ndim = 1\nlower = 0\nupper = 4\nnodes = 9\nbogus = 1\n") == 6);
  CHECK(parse_error_line("[grid]\ndim = one\n") == 2);
  CHECK(parse_error_line("[grid]\ndim = 1\ndim = 2\n") == 3);
  CHECK(parse_error_line("dim = 1\n") == 1);
  CHECK(parse_error_line("[grid\n") == 1);
  CHECK(parse_error_line("[grid]\njust words\n") == 2);
  CHECK(parse_error_line("[nonsense]\nx = 1\n") == 1);

  std::string text = small_1d;
  CHECK_THROWS_WITH_AS(parse_scenario_text(text + "[region]\nmaterial = bone\nlower = 1\nupper = 2\n"),
                       doctest::Contains("overlap"), std::exception);
  text = small_1d;
  text.replace(text.find("material = water"), 16, "material = granite");
  CHECK_THROWS_WITH_AS(parse_scenario_text(text), doctest::Contains("granite"), std::exception);
  text = small_1d;
  text.replace(text.find("scattering = off"), 16, "cfl = 1.5");
  CHECK_THROWS_AS(parse_scenario_text(text), std::exception);
  CHECK_THROWS_AS(parse_scenario(fs::path("/nonexistent/scenario.ini")), ValidationError);
}

TEST_CASE("custom materials and gaps") {
  const std::string text = R"(
[grid]
dim = 1
lower = 0
upper = 2
nodes = 9
[material gel]
base = water
rho = 1.05
[region]
material = gel
upper = 1
[region]
material = water
lower = 1
[beam]
energy = 30
protons = 1
)";
  const auto s = parse_scenario_text(text);
  CHECK(s.material("gel").rho == 1.05);
  CHECK(s.material("gel").p == builtin_material("water").p);
  const auto grid = s.grid();
  const auto map = s.material_map(grid);
  const auto ops = assemble_operators(grid, map);
  CHECK(ops.material_of(0).name == "gel");
  CHECK(ops.material_of(8).name == "water");

  std::string gap = text;
  gap.replace(gap.find("lower = 1"), 9, "lower = 1.5");
  CHECK_THROWS_WITH_AS(parse_scenario_text(gap), doctest::Contains("cover"), std::exception);
}

TEST_CASE("command-line overrides") {
  const auto s = parse_scenario_text(small_1d);
  RunOptions o;
  o.mode = Scheme::low_order;
  o.cfl = 0.25;
  o.nodes = std::vector<int>{129};
  o.no_scattering = true;
  const auto t = apply_overrides(s, o);
  CHECK(t.solver.scheme == Scheme::low_order);
  CHECK(t.solver.cfl == 0.25);
  CHECK(t.nodes[0] == 129);
  CHECK_FALSE(t.solver.scattering);
  o.nodes = std::vector<int>{129, 3};
  CHECK_THROWS_AS(apply_overrides(s, o), ValidationError);
  o.nodes.reset();
  o.cfl = 0.0;
  CHECK_THROWS_AS(apply_overrides(s, o), ValidationError);
}

TEST_CASE("plane integrated dose") {
  const double lo[] = {0.0, 0.0, 0.0};
  const double hi[] = {4.0, 1.5, 1.5};
  const int n[] = {9, 7, 5};
  const auto grid = build_grid(3, lo, hi, n);
  std::vector<double> d(grid.num_nodes(), 3.0);
  for (double v : plane_integrated_dose(d, grid, 0)) {
    CHECK(v == doctest::Approx(3.0 * 2.25).epsilon(1e-14));
  }
  std::fill(d.begin(), d.end(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (grid.node_multi_index(i)[0] == 4) {
      d[i] = 2.0;
    }
  }
  const auto curve = plane_integrated_dose(d, grid, 0);
  for (int k = 0; k < 9; ++k) {
    CHECK(curve[k] == (k == 4 ? doctest::Approx(4.5) : doctest::Approx(0.0)));
  }
  const auto w = transverse_weights(grid, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (grid.node_multi_index(i)[2] == 0) {
      total += w[i];
    }
  }
  CHECK(total == doctest::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS(plane_integrated_dose(d, grid, 3));

  const double lo1[] = {0.0};
  const double hi1[] = {1.0};
  const int n1[] = {5};
  const auto line = build_grid(1, lo1, hi1, n1);
  std::vector<double> d1(5, 1.0);
  CHECK_THROWS(plane_integrated_dose(d1, line, 0));
}

TEST_CASE("relative L2 error") {
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {1.0, 2.0, 4.0};
  const double w[] = {0.5, 1.0, 0.5};
  CHECK(relative_l2_error(a, a, w) == 0.0);
  CHECK(relative_l2_error(a, b, w) == doctest::Approx(std::sqrt(0.5 / 12.5)).epsilon(1e-15));
}

TEST_CASE("VTK output") {
  const double lo[] = {0.0, 0.0};
  const double hi[] = {2.0, 2.0};
  const int n[] = {3, 3};
  const auto grid = build_grid(2, lo, hi, n);
  std::vector<double> dose(9);
  for (std::size_t i = 0; i < dose.size(); ++i) {
    dose[i] = static_cast<double>(i);
  }
  const auto dir = scratch("vtk");
  const VtkField fields[] = {{"dose", dose}};
  write_vtk(dir / "a.vtk", grid, fields);
  write_vtk(dir / "b.vtk", grid, fields);
  const auto golden = slurp(fs::path(M1DOSE_GOLDEN_DIR) / "grid3x3_dose.vtk");
  REQUIRE_FALSE(golden.empty());
  CHECK(slurp(dir / "a.vtk") == golden);
  CHECK(slurp(dir / "b.vtk") == golden);

  write_vtk(dir / "s.vtk", grid, fields, VtkSlice{1, 1});
  const auto s = slurp(dir / "s.vtk");
  CHECK(s.find("DIMENSIONS 3 1 1") != std::string::npos);
  CHECK(s.find("ORIGIN 0 1 0") != std::string::npos);
  CHECK(s.find("POINT_DATA 3") != std::string::npos);
  CHECK(s.find("\n3\n4\n5\n") != std::string::npos);
  CHECK(nearest_plane(grid, 1, 1.2) == 1);
  CHECK(nearest_plane(grid, 0, 2.0) == 2);
}

TEST_CASE("run scenario outputs") {
  const auto dir = scratch("run");
  const auto s = parse_scenario_text(small_1d);
  RunOptions o;
  o.out_dir = dir;
  const auto summary = run_scenario(s, o);
  CHECK(summary.violations == 0);
  CHECK(summary.levels > 0);
  REQUIRE(summary.l2_error);
  CHECK(*summary.l2_error < 0.5);
  const auto csv = slurp(dir / "dose.csv");
  CHECK(csv.rfind("x,dose,reference,abs_error,rel_error\n", 0) == 0);

  // Byte-identical on a rerun.
  const auto again = scratch("run2");
  o.out_dir = again;
  run_scenario(s, o);
  CHECK(slurp(again / "dose.csv") == csv);

  // Labelled output sets per scheme, and the Gy unit.
  o.out_dir = dir;
  o.mode = Scheme::low_order;
  o.gray = true;
  const auto low = run_scenario(apply_overrides(s, o), o);
  CHECK(fs::exists(dir / "dose_low.csv"));
  o.mode = Scheme::mcl;
  o.gray = false;
  run_scenario(apply_overrides(s, o), o);
  CHECK(fs::exists(dir / "dose_mcl.csv"));
  CHECK(low.max_dose < 1e-8 * summary.max_dose);
}

TEST_CASE("energy density field") {
  const std::string text = R"(
[grid]
dim = 2
lower = 0, 0
upper = 2, 1
nodes = 9, 5
[region]
material = bone
upper = 1, 1
[region]
material = water
lower = 1, 0
[beam]
energy = 20
protons = 1e6
[solver]
scattering = on
[output]
kind = dose_vtk
file = field.vtk
)";
  const auto s = parse_scenario_text(text);
  const auto sim = simulate(s);
  CHECK(sim.violations == 0);
  const auto dir = scratch("rho");
  RunOptions o;
  o.out_dir = dir;
  run_scenario(s, o);
  std::ifstream is(dir / "field.vtk");
  std::string line;
  std::vector<double> dose;
  std::vector<double> rho_d;
  std::vector<double>* target = nullptr;
  while (std::getline(is, line)) {
    if (line.rfind("SCALARS", 0) == 0) {
      target = line.find("energy_density") != std::string::npos ? &rho_d
               : line.find(" dose ") != std::string::npos       ? &dose
                                                                 : nullptr;
      std::getline(is, line); // LOOKUP_TABLE
      continue;
    }
    if (target) {
      target->push_back(std::stod(line));
    }
  }
  REQUIRE(dose.size() == sim.grid.num_nodes());
  REQUIRE(rho_d.size() == dose.size());
  for (std::size_t i = 0; i < dose.size(); ++i) {
    CHECK(rho_d[i] == doctest::Approx(sim.ops.material_of(i).rho * dose[i]).epsilon(1e-15));
  }
}

TEST_CASE("command-line exit codes") {
  const std::string exe = M1DOSE_CLI_PATH;
  const auto dir = scratch("exe");
  auto run = [&](const std::string& args) {
    const std::string cmd = exe + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  {
    std::ofstream os(dir / "tiny.ini");
    os << small_1d;
    std::ofstream bad(dir / "bad.ini");
    bad << "[grid]\ndim = 7\n";
  }
  CHECK(run("run " + (dir / "tiny.ini").string() + " --out " + dir.string()) == 0);
  CHECK(slurp(dir / "log.txt").find("0 violations") != std::string::npos);
  CHECK(fs::exists(dir / "dose.csv"));
  CHECK(run("") == 2);
  CHECK(run("run " + (dir / "tiny.ini").string() + " --mode fast") == 2);
  CHECK(run("run " + (dir / "bad.ini").string()) == 3);
  CHECK(run("run " + (dir / "missing.ini").string()) == 3);
  CHECK(run("run " + (dir / "tiny.ini").string() + " --nodes 3,3") == 3);
}
