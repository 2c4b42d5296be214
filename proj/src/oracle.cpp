#include "m1dose/oracle.hpp"

#include "m1dose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace m1dose {

InflowSpectrum InflowSpectrum::gaussian(double psi_total, double e0, double sigma_e) {
  if (!(e0 > 0.0) || !(sigma_e > 0.0) || psi_total < 0.0) {
    throw ValidationError("spectrum: need e0 > 0, sigma_e > 0 and psi_total >= 0");
  }
  return {psi_total, e0, sigma_e};
}

double InflowSpectrum::density(double e) const {
  if (e < lo() || e > hi()) {
    return 0.0;
  }
  const double z = (e - e0) / sigma_e;
  return psi_total / (std::sqrt(2.0 * std::numbers::pi) * sigma_e) * std::exp(-0.5 * z * z);
}

// A proton found at depth x with energy E entered with energy (E^p + x/beta)^(1/p).
double reference_dose(const Material& mat, const InflowSpectrum& spectrum, double x, double e_max,
                      double rel_tol) {
  if (x < 0.0) {
    throw std::domain_error("reference_dose: negative depth");
  }
  if (!(e_max > 0.0)) {
    throw std::domain_error("reference_dose: e_max must be positive");
  }
  const double p = mat.p;
  const double shift = x / mat.beta;
  const double lo_p = std::pow(std::max(spectrum.lo(), 0.0), p) - shift;
  const double hi_p = std::pow(spectrum.hi(), p) - shift;
  if (hi_p <= 0.0) {
    return 0.0;
  }
  const double a = lo_p > 0.0 ? std::pow(lo_p, 1.0 / p) : 0.0;
  const double b = std::min(std::pow(hi_p, 1.0 / p), e_max);
  if (!(b > a)) {
    return 0.0;
  }
  auto integrand = [&](double e) {
    const double arg = std::pow(e, p) + shift;
    return std::pow(arg, (1.0 - p) / p) * spectrum.density(std::pow(arg, 1.0 / p));
  };
  return adaptive_simpson(integrand, a, b, rel_tol) / (mat.beta * p * mat.rho);
}

std::vector<double> reference_curve(const Material& mat, const InflowSpectrum& spectrum,
                                    std::span<const double> xs, double e_max) {
  std::vector<double> out(xs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(xs.size()); ++k) {
    out[k] = reference_dose(mat, spectrum, xs[k], e_max);
  }
  return out;
}

void write_reference_csv(const std::filesystem::path& path, std::span<const double> xs,
                         std::span<const double> dose) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  os << "x_cm,dose_MeV_per_g\n";
  char buf[64];
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", xs[k], dose[k]);
    os << buf;
  }
}

} // namespace m1dose
