#pragma once

// Monolithic convex limiting for the M1 system. The per-edge kernels below
// work on one unordered edge {i, j}; a flux is stored once, as seen from i,
// and enters node j with the opposite sign.

#include "m1dose/grid.hpp"
#include "m1dose/moments.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <type_traits>
#include <stdexcept>
#include <vector>

namespace m1dose {

/// Safety factor of the quadratic realizability constraint.
inline constexpr double idp_epsilon = 1e-15;

/// Corrected bar states also keep psi0^2 - |psi1|^2 >= rounding_margin psi0^2.
/// Without it a single correction may move a state to within one ulp of the
/// cone boundary, where rounding in the nodal update can cross it.
inline constexpr double rounding_margin = 1e-12;

template <int Dim>
using AntidiffusiveFlux = Moment<Dim>;

template <int Dim>
Vec<Dim> to_vec(const Point3& p) {
  Vec<Dim> v{};
  for (int k = 0; k < Dim; ++k) {
    v[k] = p[k];
  }
  return v;
}

/// Bar state (u_i + u_j)/2 - (f_j - f_i) c_ij / (2 d_ij) with precomputed fluxes.
template <int Dim>
Moment<Dim> bar_state(const Moment<Dim>& u_i, const Moment<Dim>& u_j, const FluxTensor<Dim>& f_i,
                      const FluxTensor<Dim>& f_j, const std::type_identity_t<Vec<Dim>>& c_ij,
                      double d_ij) {
  const double s = 0.5 / d_ij;
  Moment<Dim> r;
  double df = 0.0;
  for (int b = 0; b < Dim; ++b) {
    df += (f_j.row0[b] - f_i.row0[b]) * c_ij[b];
  }
  r.psi0 = 0.5 * (u_i.psi0 + u_j.psi0) - s * df;
  for (int a = 0; a < Dim; ++a) {
    df = 0.0;
    for (int b = 0; b < Dim; ++b) {
      df += (f_j.rows1[a][b] - f_i.rows1[a][b]) * c_ij[b];
    }
    r.psi1[a] = 0.5 * (u_i.psi1[a] + u_j.psi1[a]) - s * df;
  }
  return r;
}

template <int Dim>
Moment<Dim> bar_state(const Moment<Dim>& u_i, const Moment<Dim>& u_j,
                      const std::type_identity_t<Vec<Dim>>& c_ij,
                      double d_ij) {
  if (!(d_ij > 0.0)) {
    throw std::domain_error("bar_state: d_ij must be positive");
  }
  return bar_state(u_i, u_j, flux(u_i), flux(u_j), c_ij, d_ij);
}

/// Per-node, per-component bounds.
template <int Dim>
struct LocalBounds {
  std::vector<Moment<Dim>> min;
  std::vector<Moment<Dim>> max;
};

/// Bar states of every edge, in both directions.
template <int Dim>
struct EdgeBarStates {
  std::vector<Moment<Dim>> ij;
  std::vector<Moment<Dim>> ji;
};

/// Bounds over {u_j : j in N_i} and {bar u_ij : j in N_i^*}.
template <int Dim>
void local_bounds(std::span<const Moment<Dim>> u, const EdgeBarStates<Dim>& bars,
                  const DiscreteOperators& ops, LocalBounds<Dim>& b) {
  const std::size_t n = u.size();
  b.min.resize(n);
  b.max.resize(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto lo = u[i];
    auto hi = u[i];
    for (const auto& ne : ops.node_edges(i)) {
      const auto& uj = u[ne.other];
      const auto& bar = ne.is_first ? bars.ij[ne.edge] : bars.ji[ne.edge];
      lo.psi0 = std::min(lo.psi0, std::min(uj.psi0, bar.psi0));
      hi.psi0 = std::max(hi.psi0, std::max(uj.psi0, bar.psi0));
      for (int k = 0; k < Dim; ++k) {
        lo.psi1[k] = std::min(lo.psi1[k], std::min(uj.psi1[k], bar.psi1[k]));
        hi.psi1[k] = std::max(hi.psi1[k], std::max(uj.psi1[k], bar.psi1[k]));
      }
    }
    b.min[i] = lo;
    b.max[i] = hi;
  }
}

template <int Dim>
LocalBounds<Dim> local_bounds(std::span<const Moment<Dim>> u, const EdgeBarStates<Dim>& bars,
                              const DiscreteOperators& ops) {
  LocalBounds<Dim> b;
  local_bounds<Dim>(u, bars, ops, b);
  return b;
}

/// Raw antidiffusive fluxes
///   f_ij = m_ij (r_i - r_j) + (d_ij + m_ij^sigma)(u_i - u_j),
/// where r is the low-order rate (Su)' in the direction of decreasing energy,
/// i.e. r = -d(Su)/dE, and m_ij^sigma scales only the first moment.
template <int Dim>
AntidiffusiveFlux<Dim> raw_antidiffusive_flux(const Edge& e, std::span<const Moment<Dim>> u,
                                              std::span<const Moment<Dim>> rates, double mt) {
  const auto du = u[e.i] - u[e.j];
  auto fe = e.mass * (rates[e.i] - rates[e.j]) + e.viscosity * du;
  for (int k = 0; k < Dim; ++k) {
    fe.psi1[k] += mt * du.psi1[k];
  }
  return fe;
}

template <int Dim>
void raw_antidiffusive_fluxes(std::span<const Moment<Dim>> u, const DiscreteOperators& ops,
                              std::span<const Moment<Dim>> rates, std::span<const double> edge_mt,
                              std::vector<AntidiffusiveFlux<Dim>>& f) {
  f.resize(ops.edges.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ee = 0; ee < static_cast<std::ptrdiff_t>(ops.edges.size()); ++ee) {
    f[ee] = raw_antidiffusive_flux<Dim>(ops.edges[ee], u, rates,
                                        edge_mt.empty() ? 0.0 : edge_mt[ee]);
  }
}

template <int Dim>
std::vector<AntidiffusiveFlux<Dim>> raw_antidiffusive_fluxes(std::span<const Moment<Dim>> u,
                                                             const DiscreteOperators& ops,
                                                             std::span<const Moment<Dim>> rates,
                                                             std::span<const double> edge_mt) {
  std::vector<AntidiffusiveFlux<Dim>> f;
  raw_antidiffusive_fluxes<Dim>(u, ops, rates, edge_mt, f);
  return f;
}

/// Clamp each component of f_ij into the bounding fluxes so that both flux
/// corrected bar states respect the local bounds of their nodes.
template <int Dim>
AntidiffusiveFlux<Dim> limit_components(const AntidiffusiveFlux<Dim>& f_raw,
                                        const Moment<Dim>& bar_ij, const Moment<Dim>& bar_ji,
                                        const Moment<Dim>& min_i, const Moment<Dim>& max_i,
                                        const Moment<Dim>& min_j, const Moment<Dim>& max_j,
                                        double d_ij) {
  AntidiffusiveFlux<Dim> out;
  const double two_d = 2.0 * d_ij;
  for (int k = 0; k <= Dim; ++k) {
    const double f_min = two_d * std::max(min_i[k] - bar_ij[k], bar_ji[k] - max_j[k]);
    const double f_max = two_d * std::min(max_i[k] - bar_ij[k], bar_ji[k] - min_j[k]);
    out[k] = std::max(f_min, std::min(f_max, f_raw[k]));
  }
  return out;
}

/// Coefficients of the quadratic realizability constraint P(alpha) < Q for
/// the bar state `bar` corrected by alpha f / (2 d).
struct QuadraticConstraint {
  double q = 0.0;       ///< (2d)^2 (psi0^2 - |psi1|^2)
  double q_tilde = 0.0; ///< (1 - eps) q
  double bound = 0.0;   ///< min(q_tilde, q - rounding_margin (2d psi0)^2), may be negative
  double a = 0.0;       ///< alpha^2 coefficient of P
  double b = 0.0;       ///< alpha coefficient of P
  double r = 0.0;       ///< max(0, a) + b, so that P(alpha) <= alpha r on [0, 1]

  double p(double alpha) const { return a * alpha * alpha + b * alpha; }
};

template <int Dim>
QuadraticConstraint quadratic_constraint(const AntidiffusiveFlux<Dim>& f, const Moment<Dim>& bar,
                                         double d_ij) {
  const double two_d = 2.0 * d_ij;
  QuadraticConstraint c;
  c.q = two_d * two_d * (bar.psi0 * bar.psi0 - dot<Dim>(bar.psi1, bar.psi1));
  c.q_tilde = (1.0 - idp_epsilon) * c.q;
  c.bound = std::min(c.q_tilde, c.q - rounding_margin * two_d * two_d * bar.psi0 * bar.psi0);
  c.a = dot<Dim>(f.psi1, f.psi1) - f.psi0 * f.psi0;
  c.b = 2.0 * two_d * (dot<Dim>(bar.psi1, f.psi1) - bar.psi0 * f.psi0);
  c.r = std::max(0.0, c.a) + c.b;
  return c;
}

template <int Dim>
struct IdpCorrection {
  double alpha = 1.0;
  AntidiffusiveFlux<Dim> flux;
};

/// Largest admissible alpha for one constraint. R <= 0 means the correction
/// never moves the bar state towards the cone boundary.
inline double idp_ratio(const QuadraticConstraint& c) {
  if (c.r <= std::max(c.bound, 0.0)) {
    return 1.0;
  }
  return c.bound > 0.0 ? c.bound / c.r : 0.0;
}

/// Scale a component-limited flux by alpha in [0, 1] so that both
/// bar_ij + alpha f / (2d) and bar_ji - alpha f / (2d) stay realizable.
template <int Dim>
IdpCorrection<Dim> idp_correction(const AntidiffusiveFlux<Dim>& f_star, const Moment<Dim>& bar_ij,
                                  const Moment<Dim>& bar_ji, double d_ij) {
  if (!is_realizable(bar_ij) || !is_realizable(bar_ji)) {
    detail::throw_not_realizable(is_realizable(bar_ij) ? bar_ji : bar_ij, "idp_correction");
  }
  const auto cij = quadratic_constraint(f_star, bar_ij, d_ij);
  const auto cji = quadratic_constraint(-1.0 * f_star, bar_ji, d_ij);
  const double alpha = std::min(idp_ratio(cij), idp_ratio(cji));
  return {alpha, alpha * f_star};
}

} // namespace m1dose
