#pragma once

#include "m1dose/limiter.hpp"
#include "m1dose/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace testing_support {

template <int Dim>
m1dose::Vec<Dim> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  m1dose::Vec<Dim> v{};
  double n = 0.0;
  while (n < 1e-8) {
    for (auto& c : v) {
      c = g(rng);
    }
    n = m1dose::norm<Dim>(v);
  }
  for (auto& c : v) {
    c /= n;
  }
  return v;
}

/// Realizable state with psi0 spread over many decades and f biased towards 0 and 1;
/// the closest approach to f = 1 is 1 - 10^-(1 + near_one_decades).
template <int Dim>
m1dose::Moment<Dim> random_realizable(std::mt19937_64& rng, double near_one_decades = 8.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  m1dose::Moment<Dim> s;
  s.psi0 = std::pow(10.0, -6.0 + 12.0 * u(rng));
  double f = u(rng);
  const double pick = u(rng);
  if (pick < 0.2) {
    f = 1.0 - std::pow(10.0, -1.0 - near_one_decades * u(rng));
  } else if (pick < 0.3) {
    f = std::pow(10.0, -16.0 * u(rng));
  }
  const auto dir = random_unit<Dim>(rng);
  for (int k = 0; k < Dim; ++k) {
    s.psi1[k] = f * s.psi0 * dir[k];
  }
  return s;
}

template <int Dim>
m1dose::Moment<Dim> random_moment(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  m1dose::Moment<Dim> m;
  m.psi0 = scale * u(rng);
  for (auto& c : m.psi1) {
    c = scale * u(rng);
  }
  return m;
}

struct LemmaResult {
  int failures = 0;
  /// Largest |psi1| - psi0 of a failing bar state in units of eps max(psi0_i, psi0_j).
  double worst_deficit = 0.0;
};

/// Bar states of `trials` random pairs with d >= |c|.
template <int Dim>
LemmaResult bar_state_lemma(std::uint64_t seed, int trials, double near_one_decades = 8.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LemmaResult res;
  for (int t = 0; t < trials; ++t) {
    const auto ui = random_realizable<Dim>(rng, near_one_decades);
    auto uj = random_realizable<Dim>(rng, near_one_decades);
    if (u(rng) < 0.5) {
      // Comparable magnitudes exercise cancellation in the flux difference.
      uj = (ui.psi0 / uj.psi0 * (0.5 + u(rng))) * uj;
    }
    const auto dir = random_unit<Dim>(rng);
    const double cn = std::pow(10.0, -3.0 + 3.0 * u(rng));
    m1dose::Vec<Dim> c{};
    for (int k = 0; k < Dim; ++k) {
      c[k] = cn * dir[k];
    }
    const double d = u(rng) < 0.5 ? cn : cn * (1.0 + 3.0 * u(rng));
    const auto bar = m1dose::bar_state<Dim>(ui, uj, c, d);
    if (!m1dose::is_realizable(bar)) {
      ++res.failures;
      const double ulp = std::numeric_limits<double>::epsilon() * std::max(ui.psi0, uj.psi0);
      res.worst_deficit =
          std::max(res.worst_deficit, (m1dose::norm<Dim>(bar.psi1) - bar.psi0) / ulp);
    }
  }
  return res;
}

template <int Dim>
struct EdgeCase {
  m1dose::Moment<Dim> bar_ij, bar_ji, min_i, max_i, min_j, max_j;
  double d = 0.0;
};

// Two bar states and bounds that contain them, drawn from random states
// around a common neighbourhood.
template <int Dim>
EdgeCase<Dim> random_edge(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EdgeCase<Dim> e;
  e.d = 0.1 + u(rng);
  e.bar_ij = random_realizable<Dim>(rng);
  e.bar_ji = random_realizable<Dim>(rng);
  e.bar_ji = (e.bar_ij.psi0 / e.bar_ji.psi0 * (0.2 + u(rng))) * e.bar_ji;
  const double spread = e.bar_ij.psi0;
  for (int k = 0; k <= Dim; ++k) {
    e.min_i[k] = e.bar_ij[k] - spread * u(rng);
    e.max_i[k] = e.bar_ij[k] + spread * u(rng);
    e.min_j[k] = e.bar_ji[k] - spread * u(rng);
    e.max_j[k] = e.bar_ji[k] + spread * u(rng);
  }
  return e;
}

} // namespace testing_support
