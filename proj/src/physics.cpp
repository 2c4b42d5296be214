#include "m1dose/physics.hpp"

#include "m1dose/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace m1dose {

namespace {

void require_positive_energy(double energy, const char* what) {
  if (!(energy > 0.0)) {
    throw std::domain_error(std::string(what) + ": energy must be positive, got " +
                            std::to_string(energy));
  }
}

} // namespace

void Material::validate() const {
  if (!(beta > 0.0) || !(p >= 1.0 && p <= 2.0) || !(x_s > 0.0) || !(rho > 0.0)) {
    throw ValidationError("material '" + name +
                          "': require beta > 0, 1 <= p <= 2, x_s > 0, rho > 0");
  }
}

double stopping_power(const Material& mat, double energy) {
  require_positive_energy(energy, "stopping_power");
  return std::pow(energy, 1.0 - mat.p) / (mat.beta * mat.p);
}

double range(const Material& mat, double energy) {
  if (energy < 0.0) {
    throw std::domain_error("range: energy must be non-negative");
  }
  return mat.beta * std::pow(energy, mat.p);
}

double residual_stopping_power(const Material& mat) {
  return constants::min_energy / range(mat, constants::min_energy);
}

double pv(double energy) {
  require_positive_energy(energy, "pv");
  const double tau = energy / constants::proton_rest_energy;
  return (tau + 2.0) / (tau + 1.0) * energy;
}

double scattering_power(const Material& mat, double energy) {
  const double ratio = constants::rossi_energy / pv(energy);
  return ratio * ratio / mat.x_s;
}

double inverse_mass_scattering_length(double z, double a) {
  using namespace constants;
  return fine_structure * avogadro * electron_radius * electron_radius * z * z / a *
         (2.0 * std::log(33219.0 * std::cbrt(1.0 / (a * z))) - 1.0);
}

double scattering_length_from_composition(std::span<const Constituent> constituents, double rho) {
  if (constituents.empty() || !(rho > 0.0)) {
    throw ValidationError("composition: need at least one constituent and rho > 0");
  }
  double total_weight = 0.0;
  double inverse = 0.0;
  for (const auto& c : constituents) {
    if (!(c.z > 0.0) || !(c.a > 0.0) || c.weight_fraction < 0.0) {
      throw ValidationError("composition: Z, A must be positive and weights non-negative");
    }
    total_weight += c.weight_fraction;
    inverse += c.weight_fraction * inverse_mass_scattering_length(c.z, c.a);
  }
  if (std::abs(total_weight - 1.0) > 1e-6) {
    throw ValidationError("composition: weight fractions sum to " + std::to_string(total_weight) +
                          ", expected 1");
  }
  return 1.0 / (rho * inverse);
}

std::map<std::string, Composition> load_compositions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open composition file " + path.string());
  }
  std::map<std::string, Composition> table;
  Composition* current = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) {
      continue;
    }
    if (first == "material") {
      Composition comp;
      if (!(ls >> comp.name >> comp.rho)) {
        throw ParseError(path.string(), lineno, "expected 'material <name> <rho>'");
      }
      current = &(table[comp.name] = std::move(comp));
      continue;
    }
    if (current == nullptr) {
      throw ParseError(path.string(), lineno, "constituent before any 'material' line");
    }
    Constituent c;
    std::istringstream row(line);
    if (!(row >> c.z >> c.a >> c.weight_fraction)) {
      throw ParseError(path.string(), lineno, "expected '<Z> <A> <weight>'");
    }
    current->constituents.push_back(c);
  }
  return table;
}

std::filesystem::path default_composition_file() {
  return std::filesystem::path(M1DOSE_DATA_DIR) / "compositions.dat";
}

const std::vector<Material>& builtin_materials() {
  static const std::vector<Material> table = {
      {"water", 0.0022, 1.77, 46.88, 1.0},
      {"muscle", 0.0021, 1.75, 45.88, 1.04},
      {"lung", 0.0033, 1.74, 175.58, 0.3},
      {"bone", 0.0011, 1.77, 17.93, 1.85},
  };
  return table;
}

const Material& builtin_material(std::string_view name) {
  for (const auto& m : builtin_materials()) {
    if (m.name == name) {
      return m;
    }
  }
  throw ValidationError("unknown material '" + std::string(name) + "'");
}

} // namespace m1dose
