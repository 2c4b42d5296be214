#include "random_states.hpp"

#include "m1dose/errors.hpp"
#include "m1dose/moments.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace m1dose;
using testing_support::random_realizable;

namespace {

template <int Dim>
Matrix<Dim> rotate(const Matrix<Dim>& q, const Matrix<Dim>& m) {
  Matrix<Dim> out{};
  for (int a = 0; a < Dim; ++a) {
    for (int b = 0; b < Dim; ++b) {
      for (int c = 0; c < Dim; ++c) {
        for (int d = 0; d < Dim; ++d) {
          out[a][b] += q[a][c] * m[c][d] * q[b][d];
        }
      }
    }
  }
  return out;
}

// Symmetric 3x3 eigenvalues are checked through the characteristic invariants.
template <int Dim>
void check_spectrum(const Matrix<Dim>& d, double chi) {
  double trace = 0.0;
  for (int a = 0; a < Dim; ++a) {
    trace += d[a][a];
    for (int b = 0; b < Dim; ++b) {
      CHECK(d[a][b] == doctest::Approx(d[b][a]).epsilon(1e-12));
    }
  }
  CHECK(trace == doctest::Approx(chi + (Dim - 1) * 0.5 * (1.0 - chi)).epsilon(1e-12));
}

} // namespace

TEST_CASE("is_realizable examples") {
  CHECK(is_realizable(Moment<3>{1.0, {0, 0, 0}}));
  CHECK_FALSE(is_realizable(Moment<3>{1.0, {1, 0, 0}}));
  CHECK_FALSE(is_realizable(Moment<3>{0.0, {0, 0, 0}}));
  CHECK_FALSE(is_realizable(Moment<1>{-1.0, {0}}));
  CHECK(is_realizable(Moment<2>{1.0, {0.6, 0.79}}));
  CHECK_FALSE(is_realizable(Moment<2>{1.0, {0.6, 0.8}}));
}

TEST_CASE("eddington factor") {
  CHECK(eddington_factor(0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(eddington_factor(1.0) == 1.0);
  CHECK(eddington_factor(0.5) == doctest::Approx(0.46482).epsilon(1e-5));
  CHECK(eddington_factor(0.5) == doctest::Approx(4.0 / (5.0 + 2.0 * std::sqrt(3.25))).epsilon(1e-15));
  CHECK_THROWS_AS(eddington_factor(-1e-3), std::domain_error);
  CHECK_THROWS_AS(eddington_factor(1.0 + 1e-12), std::domain_error);

  double previous = eddington_factor(0.0);
  for (int k = 0; k <= 100000; ++k) {
    const double f = k == 100000 ? 1.0 - 1e-9 : k / 100000.0;
    const double chi = eddington_factor(f);
    CHECK(chi >= f * f);
    CHECK(chi <= 1.0);
    CHECK(chi >= previous);
    previous = chi;
  }
}

TEST_CASE("eddington tensor examples") {
  const auto iso = eddington_tensor(Moment<3>{1.0, {0, 0, 0}});
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      CHECK(iso[a][b] == doctest::Approx(a == b ? 1.0 / 3.0 : 0.0));
    }
  }
  const auto beam = eddington_tensor(Moment<3>{1.0, {0.9999, 0, 0}});
  const double chi = eddington_factor(0.9999);
  CHECK(beam[0][0] == doctest::Approx(chi).epsilon(1e-15));
  CHECK(beam[1][1] == doctest::Approx(0.5 * (1.0 - chi)).epsilon(1e-12));
  CHECK(beam[0][0] > 0.999);
  CHECK(beam[1][1] < 1e-3);

  CHECK_THROWS_AS(eddington_tensor(Moment<2>{1.0, {1.0, 0.0}}), InvariantViolation);

  // Below the zero-velocity threshold the isotropic tensor is exact.
  const auto tiny = eddington_tensor(Moment<2>{1.0, {1e-15, 0.0}});
  CHECK(tiny[0][0] == 1.0 / 3.0);
  CHECK(tiny[0][1] == 0.0);
}

TEST_CASE("eddington tensor is frame covariant") {
  std::mt19937_64 rng(3);
  const double c = std::cos(0.7);
  const double s = std::sin(0.7);
  const Matrix<3> q{{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  for (int t = 0; t < 1000; ++t) {
    const auto u = random_realizable<3>(rng);
    Moment<3> r{u.psi0, {}};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        r.psi1[a] += q[a][b] * u.psi1[b];
      }
    }
    const auto expected = rotate<3>(q, eddington_tensor(u));
    const auto got = eddington_tensor(r);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        CHECK(std::abs(got[a][b] - expected[a][b]) < 1e-12);
      }
    }
  }
}

TEST_CASE("eddington tensor spectrum and definiteness") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20000; ++t) {
    const auto u3 = random_realizable<3>(rng);
    const auto r = reduced_flux(u3);
    const double chi = eddington_factor(std::min(r.f, 1.0));
    const auto d = eddington_tensor(u3);
    check_spectrum<3>(d, r.f <= zero_velocity_threshold ? 1.0 / 3.0 : chi);
    // Eigenvalues chi along v and (1 - chi)/2 across are both in [0, 1];
    // the quadratic form bounds follow.
    const auto w = testing_support::random_unit<3>(rng);
    double form = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        form += w[a] * d[a][b] * w[b];
      }
    }
    CHECK(form >= -1e-12);
    CHECK(form <= 1.0 + 1e-12);
  }
}

TEST_CASE("flux examples and homogeneity") {
  const auto f0 = flux(Moment<2>{1.0, {0.0, 0.0}});
  CHECK(f0.row0[0] == 0.0);
  CHECK(f0.rows1[0][0] == doctest::Approx(1.0 / 3.0));
  CHECK(f0.rows1[1][1] == doctest::Approx(1.0 / 3.0));

  const auto f = flux(Moment<2>{2.0, {1.0, 0.0}});
  const double chi = eddington_factor(0.5);
  CHECK(f.row0[0] == 1.0);
  CHECK(f.rows1[0][0] == doctest::Approx(2.0 * chi).epsilon(1e-15));
  CHECK(f.rows1[1][1] == doctest::Approx(1.0 - chi).epsilon(1e-15));
  CHECK(f.rows1[0][1] == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> scale(1e-6, 1e3);
  for (int t = 0; t < 10000; ++t) {
    const auto u = random_realizable<3>(rng);
    const double c = scale(rng);
    const auto a = flux(c * u);
    const auto b = flux(u);
    for (int i = 0; i < 3; ++i) {
      CHECK(a.row0[i] == doctest::Approx(c * b.row0[i]).epsilon(1e-13));
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(a.rows1[i][j] - c * b.rows1[i][j]) <= 1e-13 * c * u.psi0);
      }
    }
  }
}

TEST_CASE("GLF interface flux") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 1000; ++t) {
    const auto u = random_realizable<2>(rng);
    const auto w = random_realizable<2>(rng);
    const auto n = testing_support::random_unit<2>(rng);
    const auto same = glf_interface_flux(u, u, n);
    const auto exact = flux(u).dot(n);
    for (int k = 0; k < 3; ++k) {
      CHECK(same[k] == exact[k]);
    }
    const Vec<2> m{-n[0], -n[1]};
    const auto a = glf_interface_flux(u, w, n);
    const auto b = glf_interface_flux(w, u, m);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(a[k] + b[k]) <= 1e-14 * (u.psi0 + w.psi0));
    }
  }
  const Moment<1> u{1.0, {0.2}};
  const Moment<1> uh{3.0, {0.5}};
  const auto g = glf_interface_flux(u, uh, Vec<1>{1.0});
  CHECK(g.psi0 == doctest::Approx(0.5 * (0.2 + 0.5) - 0.5 * (3.0 - 1.0)));
  CHECK_THROWS_AS(glf_interface_flux(Moment<1>{1.0, {1.0}}, uh, Vec<1>{1.0}), InvariantViolation);
}

TEST_CASE("realizable set is a convex cone") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> theta(0.0, 1.0);
  for (int t = 0; t < 100000; ++t) {
    const auto u = random_realizable<3>(rng);
    const auto w = random_realizable<3>(rng);
    const double th = theta(rng);
    CHECK(is_realizable(th * u + (1.0 - th) * w));
    CHECK(is_realizable(1e3 * u));
  }
}
