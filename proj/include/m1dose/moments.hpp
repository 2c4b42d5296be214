#pragma once

// M1 state algebra: realizability, Levermore closure, flux and the global
// Lax-Friedrichs interface flux. Everything here is templated on the spatial
// dimension and header-only so the solver loops inline it.

#include "m1dose/errors.hpp"
#include "m1dose/physics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace m1dose {

template <int Dim>
using Vec = std::array<double, Dim>;

template <int Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (int k = 0; k < Dim; ++k) {
    s += a[k] * b[k];
  }
  return s;
}

template <int Dim>
double norm(const Vec<Dim>& a) {
  return std::sqrt(dot<Dim>(a, a));
}

/// Zeroth and first angular moment at one node.
template <int Dim>
struct Moment {
  static_assert(Dim >= 1 && Dim <= 3);
  static constexpr int num_components = Dim + 1;

  double psi0 = 0.0;
  Vec<Dim> psi1{};

  /// Component k: 0 is psi0, 1..Dim are the entries of psi1.
  double operator[](int k) const { return k == 0 ? psi0 : psi1[k - 1]; }
  double& operator[](int k) { return k == 0 ? psi0 : psi1[k - 1]; }

  Moment& operator+=(const Moment& o) {
    psi0 += o.psi0;
    for (int k = 0; k < Dim; ++k) {
      psi1[k] += o.psi1[k];
    }
    return *this;
  }
  Moment& operator-=(const Moment& o) {
    psi0 -= o.psi0;
    for (int k = 0; k < Dim; ++k) {
      psi1[k] -= o.psi1[k];
    }
    return *this;
  }
  Moment& operator*=(double s) {
    psi0 *= s;
    for (int k = 0; k < Dim; ++k) {
      psi1[k] *= s;
    }
    return *this;
  }

  friend Moment operator+(Moment a, const Moment& b) { return a += b; }
  friend Moment operator-(Moment a, const Moment& b) { return a -= b; }
  friend Moment operator*(double s, Moment a) { return a *= s; }
  friend Moment operator*(Moment a, double s) { return a *= s; }
  friend bool operator==(const Moment&, const Moment&) = default;
};

/// Row 0 is psi1, rows 1..Dim the closed second moment psi2 = D(v) psi0.
template <int Dim>
struct FluxTensor {
  Vec<Dim> row0{};
  std::array<Vec<Dim>, Dim> rows1{};

  /// Contraction with a vector: (psi1 . n, psi2 n).
  Moment<Dim> dot(const Vec<Dim>& n) const {
    Moment<Dim> r;
    r.psi0 = m1dose::dot<Dim>(row0, n);
    for (int a = 0; a < Dim; ++a) {
      r.psi1[a] = m1dose::dot<Dim>(rows1[a], n);
    }
    return r;
  }

  FluxTensor& operator-=(const FluxTensor& o) {
    for (int a = 0; a < Dim; ++a) {
      row0[a] -= o.row0[a];
      for (int b = 0; b < Dim; ++b) {
        rows1[a][b] -= o.rows1[a][b];
      }
    }
    return *this;
  }
  friend FluxTensor operator-(FluxTensor a, const FluxTensor& b) { return a -= b; }
};

/// Reduced flux v = psi1 / psi0 and its magnitude.
template <int Dim>
struct ReducedFlux {
  Vec<Dim> v{};
  double f = 0.0;
};

/// Below this |psi1| / psi0 the closure direction is undefined and the
/// isotropic tensor is returned.
inline constexpr double zero_velocity_threshold = 1e-14;

/// psi0 > 0 and |psi1| < psi0, both strict.
template <int Dim>
bool is_realizable(const Moment<Dim>& u) {
  if (!(u.psi0 > 0.0)) {
    return false;
  }
  // Compare squares to avoid the rounding of sqrt near the boundary.
  return dot<Dim>(u.psi1, u.psi1) < u.psi0 * u.psi0;
}

template <int Dim>
ReducedFlux<Dim> reduced_flux(const Moment<Dim>& u) {
  ReducedFlux<Dim> r;
  for (int k = 0; k < Dim; ++k) {
    r.v[k] = u.psi1[k] / u.psi0;
  }
  r.f = norm<Dim>(r.v);
  return r;
}

/// Levermore's Eddington factor chi(f) = (3 + 4 f^2) / (5 + 2 sqrt(4 - 3 f^2)).
inline double eddington_factor(double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw std::domain_error("eddington_factor: f must lie in [0, 1], got " + std::to_string(f));
  }
  const double f2 = f * f;
  return (3.0 + 4.0 * f2) / (5.0 + 2.0 * std::sqrt(4.0 - 3.0 * f2));
}

template <int Dim>
using Matrix = std::array<Vec<Dim>, Dim>;

namespace detail {

template <int Dim>
[[noreturn]] void throw_not_realizable(const Moment<Dim>& u, const char* where) {
  std::string msg = std::string(where) + ": state not realizable (psi0=" + std::to_string(u.psi0) +
                    ", |psi1|=" + std::to_string(norm<Dim>(u.psi1)) + ")";
  throw InvariantViolation(msg);
}

// Eddington tensor from the reduced flux; no realizability check.
template <int Dim>
Matrix<Dim> eddington_tensor_unchecked(const ReducedFlux<Dim>& r) {
  Matrix<Dim> d{};
  if (r.f <= zero_velocity_threshold) {
    for (int a = 0; a < Dim; ++a) {
      d[a][a] = 1.0 / 3.0;
    }
    return d;
  }
  // sqrt may round |v| up to 1 for states that pass the squared test.
  const double chi = eddington_factor(r.f < 1.0 ? r.f : 1.0);
  const double iso = 0.5 * (1.0 - chi);
  const double aniso = 0.5 * (3.0 * chi - 1.0) / (r.f * r.f);
  for (int a = 0; a < Dim; ++a) {
    for (int b = 0; b < Dim; ++b) {
      d[a][b] = aniso * r.v[a] * r.v[b];
    }
    d[a][a] += iso;
  }
  return d;
}

} // namespace detail

/// D(v) = (1 - chi)/2 I + (3 chi - 1)/2 v (x) v / |v|^2.
template <int Dim>
Matrix<Dim> eddington_tensor(const Moment<Dim>& u) {
  if (!is_realizable(u)) {
    detail::throw_not_realizable(u, "eddington_tensor");
  }
  return detail::eddington_tensor_unchecked(reduced_flux(u));
}

/// Flux of a state already known to be realizable. Used on the hot path.
template <int Dim>
FluxTensor<Dim> flux_unchecked(const Moment<Dim>& u) {
  FluxTensor<Dim> f;
  f.row0 = u.psi1;
  const auto r = reduced_flux(u);
  const auto d = detail::eddington_tensor_unchecked(r);
  for (int a = 0; a < Dim; ++a) {
    for (int b = 0; b < Dim; ++b) {
      f.rows1[a][b] = d[a][b] * u.psi0;
    }
  }
  return f;
}

/// f(u) = (psi1; D(psi1/psi0) psi0).
template <int Dim>
FluxTensor<Dim> flux(const Moment<Dim>& u) {
  if (!is_realizable(u)) {
    detail::throw_not_realizable(u, "flux");
  }
  return flux_unchecked(u);
}

/// Global Lax-Friedrichs flux F(u, u_hat; n) = (f(u) + f(u_hat)) n / 2 - lambda (u_hat - u) / 2.
template <int Dim>
Moment<Dim> glf_interface_flux(const Moment<Dim>& u, const Moment<Dim>& u_hat,
                               const std::type_identity_t<Vec<Dim>>& n) {
  const auto fu = flux(u).dot(n);
  const auto fh = flux(u_hat).dot(n);
  return 0.5 * (fu + fh) - (0.5 * constants::max_wave_speed) * (u_hat - u);
}

} // namespace m1dose
