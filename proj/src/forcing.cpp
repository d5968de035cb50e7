#include "kss/forcing.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kss/errors.hpp"
#include "kss/norms.hpp"

namespace kss {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodic 1D Gaussian factor: sum of images j*L around the wrapped offset.
double periodic_gauss(double dx, double L, double w) {
  double s = 0.0;
  for (int j = -3; j <= 3; ++j) {
    const double d = dx + j * L;
    s += std::exp(-d * d / (2.0 * w * w));
  }
  return s;
}
}  // namespace

void validate_forcing(const ForcingSpec& spec, const Grid& g) {
  if (!(spec.amplitude > 0.0)) throw param_error("forcing amplitude must be positive");
  if (!(spec.mass > 0.0)) throw param_error("forcing mass bound must be positive");
  if (spec.family != ForcingSpec::Family::SingleMode) {
    if (!(spec.width > 0.0)) throw param_error("forcing width must be positive");
  } else if (spec.amplitude * g.volume() > spec.mass * (1.0 + 1e-12)) {
    throw param_error("single-mode forcing mass amplitude*volume exceeds the mass bound");
  }
}

std::string lp_profile_description(const ForcingSpec& spec) {
  switch (spec.family) {
    case ForcingSpec::Family::MovingGaussian:
      return "translating fixed-shape bump: every ||f(.,t)||_Lp is constant in t";
    case ForcingSpec::Family::StaticGaussian:
      return "time-independent bump: every ||f(.,t)||_Lp is constant in t";
    case ForcingSpec::Family::SingleMode:
      return "time-independent single Fourier mode: every ||f(.,t)||_Lp is constant in t";
  }
  return "";
}

ScalarField eval_forcing(const ForcingSpec& spec, const GridPtr& g, double t) {
  validate_forcing(spec, *g);
  const int dim = g->dim();
  ScalarField f(g);

  if (spec.family == ForcingSpec::Family::SingleMode) {
    const double L0 = g->box_length(0);
    const int n[3] = {g->points(0), g->points(1), dim == 3 ? g->points(2) : 1};
    std::size_t j = 0;
    for (int i0 = 0; i0 < n[0]; ++i0) {
      const double v = spec.amplitude * (1.0 + std::sin(kTwoPi * g->coord(0, i0) / L0));
      for (int i1 = 0; i1 < n[1]; ++i1)
        for (int i2 = 0; i2 < n[2]; ++i2, ++j) f.v[j] = v;
    }
    return f;
  }

  const double w = spec.width * std::pow(spec.amplitude, -1.0 / dim);
  double x0[3];
  for (int a = 0; a < dim; ++a) {
    const double drift = spec.family == ForcingSpec::Family::MovingGaussian ? spec.speed[a] * t : 0.0;
    x0[a] = spec.center_frac[a] * g->box_length(a) + drift;
  }

  // Separable product of per-axis periodic Gaussian factors; precompute the
  // factors once per axis line.
  std::array<std::vector<double>, 3> axis_factor;
  for (int a = 0; a < dim; ++a) {
    const double L = g->box_length(a);
    axis_factor[a].resize(g->points(a));
    for (int i = 0; i < g->points(a); ++i) {
      double dx = g->coord(a, i) - x0[a];
      dx -= L * std::floor(dx / L + 0.5);  // wrap to [-L/2, L/2)
      axis_factor[a][i] = periodic_gauss(dx, L, w);
    }
  }

  const int n[3] = {g->points(0), g->points(1), dim == 3 ? g->points(2) : 1};
  std::size_t j = 0;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2, ++j) {
        double v = axis_factor[0][i0] * axis_factor[1][i1];
        if (dim == 3) v *= axis_factor[2][i2];
        f.v[j] = v;
      }

  const double total = integral(f);
  const double scale = spec.mass / total;
  for (auto& v : f.v) v *= scale;
  return f;
}

ScalarField make_potential(const GridPtr& g, double g_amp) {
  ScalarField phi(g);
  if (g_amp == 0.0) return phi;
  const int d = g->dim() - 1;
  const double L = g->box_length(d);
  const int n[3] = {g->points(0), g->points(1), g->dim() == 3 ? g->points(2) : 1};
  std::size_t j = 0;
  for (int i0 = 0; i0 < n[0]; ++i0)
    for (int i1 = 0; i1 < n[1]; ++i1)
      for (int i2 = 0; i2 < n[2]; ++i2, ++j) {
        const int idx = d == 0 ? i0 : (d == 1 ? i1 : i2);
        phi.v[j] = g_amp * std::sin(kTwoPi * g->coord(d, idx) / L) * (L / kTwoPi);
      }
  return phi;
}

}  // namespace kss
