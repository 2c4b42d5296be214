#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace m1dose {

namespace constants {
/// Rossi constant E_s [MeV].
inline constexpr double rossi_energy = 15.0;
/// Proton rest energy mc^2 [MeV].
inline constexpr double proton_rest_energy = 938.272;
/// Energy cutoff of the backward march [MeV].
inline constexpr double min_energy = 1e-5;
/// Global upper bound of the M1 wave speed.
inline constexpr double max_wave_speed = 1.0;

inline constexpr double fine_structure = 1.0 / 137.035999;
inline constexpr double avogadro = 6.0221408e23;
/// Classical electron radius [cm].
inline constexpr double electron_radius = 2.81796e-13;
/// MeV/g -> Gy.
inline constexpr double mev_per_gram_to_gray = 1.602176634e-10;
} // namespace constants

/// Bragg-Kleeman range parameters, scattering length and density of one medium.
struct Material {
  std::string name;
  double beta = 0.0; ///< cm MeV^-p
  double p = 0.0;
  double x_s = 0.0; ///< scattering length [cm]
  double rho = 0.0; ///< g/cm^3

  /// Throws ValidationError unless beta > 0, 1 <= p <= 2, x_s > 0, rho > 0.
  void validate() const;
};

/// Stopping power S(E) = E^(1-p) / (beta p) [MeV/cm].
double stopping_power(const Material& mat, double energy);

/// Continuous slowing down range R(E) = beta E^p [cm].
double range(const Material& mat, double energy);

/// Stopping power that deposits the residual energy below the cutoff locally,
/// S0 = E_min / R(E_min).
double residual_stopping_power(const Material& mat);

/// Momentum times velocity of a proton with kinetic energy `energy` [MeV].
double pv(double energy);

/// Rossi scattering power T(E) = (E_s / pv)^2 / X_S [1/cm].
double scattering_power(const Material& mat, double energy);

struct Constituent {
  double weight_fraction = 0.0;
  double z = 0.0;
  double a = 0.0;
};

/// 1/(rho X_S) of a single element [cm^2/g].
double inverse_mass_scattering_length(double z, double a);

/// Scattering length from an elemental composition via the Bragg mixing rule.
double scattering_length_from_composition(std::span<const Constituent> constituents, double rho);

struct Composition {
  std::string name;
  double rho = 0.0;
  std::vector<Constituent> constituents;
};

/// Reads the composition table format:
///
///     # comment
///     material <name> <rho>
///     <Z> <A> <weight fraction>
///     ...
std::map<std::string, Composition> load_compositions(const std::filesystem::path& path);

/// Path of the bundled composition table.
std::filesystem::path default_composition_file();

/// Water, muscle, lung and bone with the tabulated reference parameters.
const std::vector<Material>& builtin_materials();

/// Throws ValidationError for an unknown name.
const Material& builtin_material(std::string_view name);

} // namespace m1dose
