#include "kss/norms.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "kss/errors.hpp"
#include "kss/transform.hpp"
#include "oracles.hpp"

using kss::Grid;
using kss::NormSpec;
using kss::ScalarField;
using kss::Transform;
using kss::VectorField;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("Lp norms of constants and resolved trig modes are exact") {
  auto g = Grid::make_cube(3, 16, kTwoPi);
  const double V = g->volume();

  ScalarField c(g, -2.5);
  CHECK(kss::lp_norm(c, 2.0) == doctest::Approx(2.5 * std::sqrt(V)).epsilon(1e-13));
  CHECK(kss::lp_norm(c, kInf) == 2.5);
  CHECK(kss::integral(c) == doctest::Approx(-2.5 * V).epsilon(1e-13));
  CHECK(kss::min_value(c) == -2.5);

  ScalarField s(g);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      for (int k = 0; k < 16; ++k) s.v[g->real_index(i, j, k)] = std::sin(g->coord(0, i));
  // Uniform-grid quadrature of trig polynomials below Nyquist is exact.
  CHECK(kss::lp_norm(s, 2.0) == doctest::Approx(std::sqrt(0.5 * V)).epsilon(1e-13));
  CHECK(kss::lp_norm(s, 4.0) == doctest::Approx(std::pow(0.375 * V, 0.25)).epsilon(1e-13));
  CHECK(kss::lp_norm(s, kInf) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("W1inf norm via the spectral gradient") {
  auto g = Grid::make_cube(3, 64, kTwoPi);
  Transform tf(g);
  ScalarField s(g);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      for (int k = 0; k < 64; ++k) s.v[g->real_index(i, j, k)] = std::sin(g->coord(0, i));
  CHECK(kss::w1inf_norm(tf, s) == doctest::Approx(1.0).epsilon(1e-12));
  // Amplified gradient: 3*sin(2x) has sup 3 but derivative sup 6.
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      for (int k = 0; k < 64; ++k) s.v[g->real_index(i, j, k)] = 3.0 * std::sin(2.0 * g->coord(0, i));
  CHECK(kss::w1inf_norm(tf, s) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(kss::norm(tf, s, NormSpec::w1inf()) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("vector norms reduce pointwise to the Euclidean magnitude") {
  auto g = Grid::make_cube(2, 8, kTwoPi);
  VectorField w(g);
  for (auto& x : w.comp[0]) x = 3.0;
  for (auto& x : w.comp[1]) x = -4.0;
  CHECK(kss::lp_norm(w, kInf) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(kss::lp_norm(w, 2.0) == doctest::Approx(5.0 * std::sqrt(g->volume())).epsilon(1e-13));
  CHECK(kss::lp_norm(w, 3.0) == doctest::Approx(5.0 * std::pow(g->volume(), 1.0 / 3.0)).epsilon(1e-13));
}

TEST_CASE("fractional exponents agree with a direct quadrature loop") {
  auto g = Grid::make_cube(2, 32, kTwoPi);
  auto f = oracle::random_smooth_field(g, 8);
  const double p = 2.5;
  long double acc = 0.0L;
  for (double x : f.v) acc += std::pow(std::fabs(static_cast<long double>(x)), static_cast<long double>(p));
  const double ref = static_cast<double>(std::pow(acc * g->cell_volume(), 1.0L / p));
  CHECK(kss::lp_norm(f, p) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("invalid exponents are rejected") {
  auto g = Grid::make_cube(2, 8, kTwoPi);
  ScalarField f(g, 1.0);
  CHECK_THROWS_AS(kss::lp_norm(f, 0.5), kss::param_error);
  CHECK_THROWS_AS(NormSpec::lp(0.0), kss::param_error);
  CHECK(NormSpec::lp(kInf).kind == NormSpec::Kind::Linf);
}
