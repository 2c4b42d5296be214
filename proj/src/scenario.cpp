#include "m1dose/scenario.hpp"

#include "m1dose/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace m1dose {

std::string_view to_string(OutputKind kind) {
  switch (kind) {
  case OutputKind::dose_csv_1d: return "dose_csv_1d";
  case OutputKind::dose_vtk: return "dose_vtk";
  case OutputKind::plane_integrated_csv: return "plane_integrated_csv";
  case OutputKind::reference_csv: return "reference_csv";
  case OutputKind::energy_density_vtk: return "energy_density_vtk";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string kind;
  std::string label;
  int line = 0;
  std::map<std::string, Entry> entries;
};

class Reader {
public:
  Reader(std::string source, const Section& sec) : source_(std::move(source)), sec_(sec) {}

  bool has(const std::string& key) const { return sec_.entries.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = sec_.entries.find(key);
    throw ParseError(source_, it == sec_.entries.end() ? sec_.line : it->second.line,
                     "[" + sec_.kind + "] " + key + ": " + what);
  }

  const std::string& text(const std::string& key) const {
    const auto it = sec_.entries.find(key);
    if (it == sec_.entries.end()) {
      fail(key, "missing required key");
    }
    used_.insert(key);
    return it->second.value;
  }

  double number(const std::string& key) const { return parse_number(key, text(key)); }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    std::string_view rest = text(key);
    while (true) {
      const auto comma = rest.find(',');
      out.push_back(parse_number(key, trim(rest.substr(0, comma))));
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    return out;
  }

  int axis(const std::string& key, int fallback) const {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = text(key);
    if (v == "x" || v == "0") return 0;
    if (v == "y" || v == "1") return 1;
    if (v == "z" || v == "2") return 2;
    fail(key, "expected x, y or z");
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = text(key);
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    fail(key, "expected on or off");
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : sec_.entries) {
      if (!used_.count(key)) {
        throw ParseError(source_, entry.line, "[" + sec_.kind + "] unknown key '" + key + "'");
      }
    }
  }

  int line() const { return sec_.line; }

private:
  double parse_number(const std::string& key, std::string_view s) const {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      fail(key, "expected a number, got '" + std::string(s) + "'");
    }
    return v;
  }

  std::string source_;
  const Section& sec_;
  mutable std::set<std::string> used_;
};

std::vector<Section> split_sections(std::string_view text, const std::string& source) {
  std::vector<Section> sections;
  int lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(source, lineno, "unterminated section header");
      }
      std::istringstream hs(std::string(line.substr(1, line.size() - 2)));
      Section sec;
      sec.line = lineno;
      hs >> sec.kind >> sec.label;
      std::string extra;
      if (sec.kind.empty() || (hs >> extra)) {
        throw ParseError(source, lineno, "malformed section header");
      }
      sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, lineno, "expected 'key = value'");
    }
    if (sections.empty()) {
      throw ParseError(source, lineno, "key outside of any section");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || value.empty()) {
      throw ParseError(source, lineno, "empty key or value");
    }
    auto& entries = sections.back().entries;
    if (entries.count(key)) {
      throw ParseError(source, lineno, "duplicate key '" + key + "'");
    }
    entries[key] = {value, lineno};
  }
  return sections;
}

Point3 to_point(const Reader& r, const std::string& key, int dim) {
  const auto v = r.numbers(key);
  if (static_cast<int>(v.size()) != dim) {
    r.fail(key, "expected " + std::to_string(dim) + " values");
  }
  Point3 p{};
  std::copy(v.begin(), v.end(), p.begin());
  return p;
}

OutputKind output_kind(const Reader& r) {
  const auto& v = r.text("kind");
  for (auto k : {OutputKind::dose_csv_1d, OutputKind::dose_vtk, OutputKind::plane_integrated_csv,
                 OutputKind::reference_csv, OutputKind::energy_density_vtk}) {
    if (v == to_string(k)) {
      return k;
    }
  }
  r.fail("kind", "unknown output kind '" + v + "'");
}

} // namespace

Scenario parse_scenario_text(std::string_view text, const std::string& source) {
  const auto sections = split_sections(text, source);
  Scenario sc;
  sc.name = source;

  const Section* grid = nullptr;
  for (const auto& s : sections) {
    if (s.kind == "grid") {
      if (grid) {
        throw ParseError(source, s.line, "duplicate [grid] section");
      }
      grid = &s;
    }
  }
  if (!grid) {
    throw ParseError(source, 1, "missing [grid] section");
  }
  {
    Reader r(source, *grid);
    const double dim = r.number("dim");
    if (dim != 1 && dim != 2 && dim != 3) {
      r.fail("dim", "must be 1, 2 or 3");
    }
    sc.dim = static_cast<int>(dim);
    sc.lower = to_point(r, "lower", sc.dim);
    sc.upper = to_point(r, "upper", sc.dim);
    const auto n = to_point(r, "nodes", sc.dim);
    for (int k = 0; k < sc.dim; ++k) {
      if (n[k] != std::floor(n[k]) || n[k] < 2 || n[k] > 1e7) {
        r.fail("nodes", "node counts must be integers >= 2");
      }
      sc.nodes[k] = static_cast<int>(n[k]);
    }
    if (r.has("name")) {
      sc.name = r.text("name");
    }
    r.reject_unknown();
  }

  bool have_solver = false;
  for (const auto& s : sections) {
    Reader r(source, s);
    if (s.kind == "grid") {
      continue;
    }
    if (s.kind == "material") {
      if (s.label.empty()) {
        throw ParseError(source, s.line, "[material] needs a name: [material <name>]");
      }
      Material m;
      if (r.has("base")) {
        try {
          m = builtin_material(r.text("base"));
        } catch (const ValidationError& e) {
          r.fail("base", e.what());
        }
      }
      m.name = s.label;
      m.beta = r.number("beta", m.beta);
      m.p = r.number("p", m.p);
      m.rho = r.number("rho", m.rho);
      if (r.has("composition")) {
        const auto table = load_compositions(default_composition_file());
        const auto it = table.find(r.text("composition"));
        if (it == table.end()) {
          r.fail("composition", "not in the bundled composition table");
        }
        if (!r.has("rho")) {
          m.rho = it->second.rho;
        }
        m.x_s = scattering_length_from_composition(it->second.constituents, m.rho);
      }
      m.x_s = r.number("x_s", m.x_s);
      try {
        m.validate();
      } catch (const ValidationError& e) {
        throw ParseError(source, s.line, std::string("material '") + m.name + "': " + e.what());
      }
      for (const auto& other : sc.materials) {
        if (other.name == m.name) {
          throw ParseError(source, s.line, "duplicate material '" + m.name + "'");
        }
      }
      sc.materials.push_back(m);
    } else if (s.kind == "region") {
      RegionSpec reg;
      reg.line = s.line;
      reg.material = r.text("material");
      reg.lower = r.has("lower") ? to_point(r, "lower", sc.dim) : sc.lower;
      reg.upper = r.has("upper") ? to_point(r, "upper", sc.dim) : sc.upper;
      sc.regions.push_back(reg);
    } else if (s.kind == "beam") {
      const double e0 = r.number("energy");
      if (!(e0 > 0.0)) {
        r.fail("energy", "must be positive");
      }
      auto b = BeamSpec::make(e0, r.number("protons"), r.axis("axis", 0));
      if (b.axis >= sc.dim) {
        r.fail("axis", "beam axis outside the grid dimension");
      }
      b.energy_spread = r.number("energy_spread", b.energy_spread);
      b.spot_sigma = r.number("spot_sigma", b.spot_sigma);
      b.collimation = r.number("collimation", b.collimation);
      // Default isocentre: middle of the inflow face.
      for (int k = 0; k < sc.dim; ++k) {
        b.isocenter[k] = 0.5 * (sc.lower[k] + sc.upper[k]);
      }
      b.isocenter[b.axis] = sc.lower[b.axis];
      if (r.has("isocenter")) {
        b.isocenter = to_point(r, "isocenter", sc.dim);
      }
      if (b.protons < 0.0 || !(b.energy_spread > 0.0) || !(b.spot_sigma > 0.0) ||
          !(b.collimation >= 0.0 && b.collimation < 1.0)) {
        throw ParseError(source, s.line,
                         "beam needs protons >= 0, positive spreads and 0 <= collimation < 1");
      }
      sc.beams.push_back(b);
    } else if (s.kind == "solver") {
      if (have_solver) {
        throw ParseError(source, s.line, "duplicate [solver] section");
      }
      have_solver = true;
      sc.solver.cfl = r.number("cfl", 0.5);
      if (!(sc.solver.cfl > 0.0 && sc.solver.cfl <= 1.0)) {
        r.fail("cfl", "must lie in (0, 1]");
      }
      if (r.has("mode")) {
        const auto& m = r.text("mode");
        if (m == "low") {
          sc.solver.scheme = Scheme::low_order;
        } else if (m == "mcl") {
          sc.solver.scheme = Scheme::mcl;
        } else {
          r.fail("mode", "expected low or mcl");
        }
      }
      sc.solver.scattering = r.flag("scattering", true);
      if (r.has("e_max")) {
        sc.e_max = r.number("e_max");
        if (!(*sc.e_max > constants::min_energy)) {
          r.fail("e_max", "must exceed the cutoff energy");
        }
      }
      if (r.has("checkpoints")) {
        sc.checkpoints = r.numbers("checkpoints");
      }
    } else if (s.kind == "output") {
      OutputRequest out;
      out.kind = output_kind(r);
      out.file = r.text("file");
      out.axis = r.axis("axis", 0);
      if (r.has("slice")) {
        out.slice = r.number("slice");
      }
      if (out.axis >= sc.dim) {
        r.fail("axis", "axis outside the grid dimension");
      }
      sc.outputs.push_back(out);
    } else {
      throw ParseError(source, s.line, "unknown section [" + s.kind + "]");
    }
    r.reject_unknown();
  }

  if (sc.beams.empty()) {
    throw ParseError(source, 1, "no [beam] section");
  }
  if (sc.regions.empty()) {
    throw ParseError(source, 1, "no [region] section");
  }
  for (const auto& reg : sc.regions) {
    try {
      sc.material(reg.material);
    } catch (const ValidationError& e) {
      throw ParseError(source, reg.line, e.what());
    }
  }
  try {
    sc.validate();
  } catch (const ValidationError& e) {
    throw ParseError(source, 1, e.what());
  }
  return sc;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open scenario file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto sc = parse_scenario_text(buf.str(), path.string());
  sc.source = path;
  if (sc.name == path.string()) {
    sc.name = path.stem().string();
  }
  return sc;
}

std::filesystem::path resolve_scenario_path(const std::string& name) {
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates{name, fs::path(M1DOSE_SCENARIO_DIR) / name};
  if (fs::path(name).extension().empty()) {
    candidates.push_back(fs::path(M1DOSE_SCENARIO_DIR) / (name + ".ini"));
  }
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) {
      return c;
    }
  }
  return name;
}

double Scenario::max_energy() const {
  if (e_max) {
    return *e_max;
  }
  double e0 = 0.0;
  for (const auto& b : beams) {
    e0 = std::max(e0, b.energy);
  }
  return 1.1 * e0;
}

const Material& Scenario::material(std::string_view name) const {
  for (const auto& m : materials) {
    if (m.name == name) {
      return m;
    }
  }
  return builtin_material(name);
}

StructuredGrid Scenario::grid() const {
  return build_grid(dim, std::span<const double>(lower.data(), dim),
                    std::span<const double>(upper.data(), dim),
                    std::span<const int>(nodes.data(), dim));
}

void Scenario::validate() const {
  for (int k = 0; k < dim; ++k) {
    if (!(upper[k] > lower[k])) {
      throw ValidationError("grid: upper must exceed lower on every axis");
    }
  }
  if (!(solver.cfl > 0.0 && solver.cfl <= 1.0)) {
    throw ValidationError("solver: cfl must lie in (0, 1]");
  }
  const double scale = [&] {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      s = std::max({s, std::abs(lower[k]), std::abs(upper[k])});
    }
    return s;
  }();
  const double tol = 1e-12 * std::max(1.0, scale);

  double total = 0.0;
  for (std::size_t a = 0; a < regions.size(); ++a) {
    const auto& ra = regions[a];
    double vol = 1.0;
    for (int k = 0; k < dim; ++k) {
      if (ra.lower[k] < lower[k] - tol || ra.upper[k] > upper[k] + tol) {
        throw ValidationError("region at line " + std::to_string(ra.line) +
                              " extends outside the grid box");
      }
      if (!(ra.upper[k] - ra.lower[k] > tol)) {
        throw ValidationError("region at line " + std::to_string(ra.line) + " is empty");
      }
      vol *= ra.upper[k] - ra.lower[k];
    }
    total += vol;
    for (std::size_t b = a + 1; b < regions.size(); ++b) {
      const auto& rb = regions[b];
      bool overlap = true;
      for (int k = 0; k < dim; ++k) {
        const double lo = std::max(ra.lower[k], rb.lower[k]);
        const double hi = std::min(ra.upper[k], rb.upper[k]);
        overlap = overlap && hi - lo > tol;
      }
      if (overlap) {
        throw ValidationError("regions at lines " + std::to_string(ra.line) + " and " +
                              std::to_string(rb.line) + " overlap");
      }
    }
  }
  double box = 1.0;
  for (int k = 0; k < dim; ++k) {
    box *= upper[k] - lower[k];
  }
  if (std::abs(total - box) > 1e-9 * box) {
    throw ValidationError("regions do not cover the grid box");
  }
  for (const auto& out : outputs) {
    if (out.slice && (*out.slice < lower[out.axis] - tol || *out.slice > upper[out.axis] + tol)) {
      throw ValidationError("output '" + out.file + "': slice position outside the domain");
    }
    if (out.kind == OutputKind::plane_integrated_csv && dim < 2) {
      throw ValidationError("output '" + out.file + "': plane integration needs dim >= 2");
    }
    if ((out.kind == OutputKind::dose_vtk || out.kind == OutputKind::energy_density_vtk) &&
        dim < 2) {
      throw ValidationError("output '" + out.file + "': VTK output needs dim >= 2");
    }
  }
}

MaterialMap Scenario::material_map(const StructuredGrid& grid) const {
  MaterialMap map;
  std::vector<int> region_material(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& mat = material(regions[r].material);
    const auto it = std::find_if(map.materials.begin(), map.materials.end(),
                                 [&](const Material& m) { return m.name == mat.name; });
    if (it == map.materials.end()) {
      region_material[r] = static_cast<int>(map.materials.size());
      map.materials.push_back(mat);
    } else {
      region_material[r] = static_cast<int>(it - map.materials.begin());
    }
  }
  const auto cells = grid.cells();
  map.cell_material.assign(grid.num_cells(), -1);
  for (int k = 0; k < cells[2]; ++k) {
    for (int j = 0; j < cells[1]; ++j) {
      for (int i = 0; i < cells[0]; ++i) {
        const Index3 c{i, j, k};
        const auto x = grid.cell_center(c);
        for (std::size_t r = 0; r < regions.size(); ++r) {
          bool inside = true;
          for (int a = 0; a < dim; ++a) {
            inside = inside && x[a] >= regions[r].lower[a] && x[a] < regions[r].upper[a];
          }
          if (inside) {
            map.cell_material[grid.cell_index(c)] = region_material[r];
            break;
          }
        }
        if (map.cell_material[grid.cell_index(c)] < 0) {
          throw ValidationError("a cell centre lies in no region");
        }
      }
    }
  }
  return map;
}

} // namespace m1dose
