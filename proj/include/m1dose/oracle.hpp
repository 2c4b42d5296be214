#pragma once

#include "m1dose/physics.hpp"

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

namespace m1dose {

/// Gaussian inflow spectrum g(E) = psi_total N(E; e0, sigma_e^2) on e0 +- 6 sigma_e.
struct InflowSpectrum {
  double psi_total = 0.0;
  double e0 = 0.0;
  double sigma_e = 0.0;

  static InflowSpectrum gaussian(double psi_total, double e0, double sigma_e);

  double lo() const { return e0 - 6.0 * sigma_e; }
  double hi() const { return e0 + 6.0 * sigma_e; }
  /// Zero outside [lo, hi].
  double density(double e) const;
};

/// Scattering-free depth dose of a broad collimated beam [MeV/g].
double reference_dose(const Material& mat, const InflowSpectrum& spectrum, double x, double e_max,
                      double rel_tol = 1e-8);

std::vector<double> reference_curve(const Material& mat, const InflowSpectrum& spectrum,
                                    std::span<const double> xs, double e_max);

/// Columns x_cm, dose_MeV_per_g.
void write_reference_csv(const std::filesystem::path& path, std::span<const double> xs,
                         std::span<const double> dose);

/// Adaptive Simpson on [a, b] to relative tolerance rel_tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol);

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol) {
  if (!(b > a)) {
    return 0.0;
  }
  // A coarse composite pass sets the absolute scale for the tolerance.
  constexpr int panels = 64;
  const double h = (b - a) / panels;
  std::vector<double> fx(2 * panels + 1);
  for (int k = 0; k <= 2 * panels; ++k) {
    fx[k] = f(a + 0.5 * h * k);
  }
  double coarse = 0.0;
  for (int k = 0; k < panels; ++k) {
    coarse += h / 6.0 * (fx[2 * k] + 4.0 * fx[2 * k + 1] + fx[2 * k + 2]);
  }
  const double tol = rel_tol * std::abs(coarse) / panels;
  if (tol == 0.0) {
    return coarse;
  }
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + h * k;
    const double whole = h / 6.0 * (fx[2 * k] + 4.0 * fx[2 * k + 1] + fx[2 * k + 2]);
    sum += detail::simpson_step(f, lo, lo + h, fx[2 * k], fx[2 * k + 1], fx[2 * k + 2], whole, tol,
                                40);
  }
  return sum;
}

} // namespace m1dose
