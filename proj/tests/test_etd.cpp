#include "kss/etd.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using kss::EtdTable;
using kss::etd_phi1;
using kss::etd_phi2;
using kss::make_etd_table;

namespace {

// Independent references in extended precision. The direct formulas cancel
// catastrophically near zero, so below |z| = 0.25 the references switch to a
// forward-summed 30-term Taylor series (the implementation uses a different
// cutoff, term count, and evaluation order).
long double phi1_ref(long double z) {
  if (std::fabs(z) < 0.25L) {
    long double term = 1.0L, sum = 0.0L;
    for (int j = 0; j <= 30; ++j) {
      sum += term / (j + 1.0L);
      term *= z / (j + 1.0L);
    }
    return sum;
  }
  return (std::exp(z) - 1.0L) / z;
}

long double phi2_ref(long double z) {
  if (std::fabs(z) < 0.25L) {
    long double term = 1.0L, sum = 0.0L;
    for (int j = 0; j <= 30; ++j) {
      sum += term / ((j + 1.0L) * (j + 2.0L));
      term *= z / (j + 1.0L);
    }
    return sum;
  }
  return (std::exp(z) - 1.0L - z) / (z * z);
}

}  // namespace

TEST_CASE("phi1/phi2 match extended-precision references across the series crossover") {
  const std::vector<double> zs = {-400.0, -50.0,    -8.0,  -2.0,  -0.5,  -0.11, -0.1000001,
                                  -0.0999999, -0.03, -1e-4, -1e-9, 1e-9,  1e-4,  0.03,
                                  0.0999999,  0.1000001, 0.11,  0.5,   2.0};
  for (double z : zs) {
    CAPTURE(z);
    const double p1 = static_cast<double>(phi1_ref(z));
    const double p2 = static_cast<double>(phi2_ref(z));
    CHECK(std::fabs(etd_phi1(z) - p1) <= 1e-15 * std::max(1.0, std::fabs(p1)));
    CHECK(std::fabs(etd_phi2(z) - p2) <= 1e-15 * std::max(1.0, std::fabs(p2)));
  }
  CHECK(etd_phi1(0.0) == 1.0);
  CHECK(etd_phi2(0.0) == 0.5);
}

TEST_CASE("table entries are E = e^{lambda dt}, P1 = dt phi1, P2 = dt phi2") {
  const std::vector<double> lambda = {0.0, -1.0, -17.5, -2048.0};
  const double dt = 7.5e-3;
  EtdTable t = make_etd_table(lambda.data(), lambda.size(), dt);
  REQUIRE(t.E.size() == lambda.size());
  REQUIRE(t.P1.size() == lambda.size());
  REQUIRE(t.P2.size() == lambda.size());
  CHECK(t.dt == dt);
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    CAPTURE(lambda[i]);
    const double z = lambda[i] * dt;
    CHECK(t.E[i] == doctest::Approx(std::exp(z)).epsilon(1e-15));
    CHECK(t.P1[i] == doctest::Approx(dt * static_cast<double>(phi1_ref(z))).epsilon(1e-14));
    CHECK(t.P2[i] == doctest::Approx(dt * static_cast<double>(phi2_ref(z))).epsilon(1e-14));
  }
}

TEST_CASE("predictor/corrector recursion is exact for constant forcing") {
  // u' = lambda u + c has solution u(t) = e^{lambda t} u0 + c (e^{lambda t} - 1)/lambda.
  // With N constant the corrector vanishes and the scheme telescopes to the
  // closed form, so the error is pure roundoff regardless of step count.
  for (double lambda : {-0.5, -7.3, -120.0}) {
    CAPTURE(lambda);
    const double dt = 0.02, c = 1.9, u0 = 0.7;
    EtdTable t = make_etd_table(&lambda, 1, dt);
    double u = u0;
    int nsteps = 200;
    for (int s = 0; s < nsteps; ++s) {
      const double a = t.E[0] * u + t.P1[0] * c;
      u = a + t.P2[0] * (c - c);
    }
    const double time = nsteps * dt;
    const double exact = std::exp(lambda * time) * u0 + c * std::expm1(lambda * time) / lambda;
    CHECK(std::fabs(u - exact) <= 1e-12 * std::max(1.0, std::fabs(exact)));
  }
}

TEST_CASE("second-order convergence on a time-dependent scalar problem") {
  // u' = lambda u + sin(3t); closed-form particular solution gives the exact
  // endpoint. Halving dt should cut the error by about four.
  const double lambda = -4.0, T = 1.0, u0 = 0.3;
  auto exact_at = [&](double t) {
    // Particular solution A sin(3t) + B cos(3t) with A = -lambda/(lambda^2+9),
    // B = -3/(lambda^2+9); homogeneous part matches u(0) = u0.
    const double den = lambda * lambda + 9.0;
    const double A = -lambda / den, B = -3.0 / den;
    return A * std::sin(3.0 * t) + B * std::cos(3.0 * t) + (u0 - B) * std::exp(lambda * t);
  };
  auto solve = [&](int nsteps) {
    const double dt = T / nsteps;
    EtdTable t = make_etd_table(&lambda, 1, dt);
    double u = u0, time = 0.0;
    for (int s = 0; s < nsteps; ++s) {
      const double n1 = std::sin(3.0 * time);
      const double a = t.E[0] * u + t.P1[0] * n1;
      const double n2 = std::sin(3.0 * (time + dt));
      u = a + t.P2[0] * (n2 - n1);
      time += dt;
    }
    return std::fabs(u - exact_at(T));
  };
  const double e1 = solve(50), e2 = solve(100), e3 = solve(200);
  CHECK(std::log2(e1 / e2) > 1.9);
  CHECK(std::log2(e2 / e3) > 1.9);
}
