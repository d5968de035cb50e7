#pragma once

#include <array>
#include <string>

#include "kss/field.hpp"
#include "kss/grid.hpp"

namespace kss {

// Source-term families for the auxiliary linear system. All families produce
// f >= 0 pointwise by construction.
//
// Gaussian families hold the total mass fixed at `mass` (the bump is
// renormalized on the grid so its discrete integral is exactly that) while
// `amplitude` concentrates it: the effective width is width/amplitude^(1/dim),
// so growing amplitude raises every L^p norm (p > 1) without touching L^1.
// MovingGaussian translates the center at `speed`; StaticGaussian ignores it.
//
// SingleMode is f = amplitude * (1 + sin(2*pi*x_1/L_1)): a time-independent
// single-Fourier-mode profile for closed-form response tests. Its mass is
// amplitude * volume and must not exceed `mass`.
struct ForcingSpec {
  enum class Family { MovingGaussian, StaticGaussian, SingleMode };
  Family family = Family::StaticGaussian;
  double amplitude = 1.0;
  double width = 1.0;
  std::array<double, 3> speed = {0.0, 0.0, 0.0};
  double mass = 1.0;
  std::array<double, 3> center_frac = {0.5, 0.5, 0.5};  // bump center as a box fraction

  ForcingSpec with_amplitude(double a) const {
    ForcingSpec s = *this;
    s.amplitude = a;
    return s;
  }

  friend bool operator==(const ForcingSpec&, const ForcingSpec&) = default;
};

// Throws param_error on nonpositive amplitude/width/mass or a SingleMode
// profile whose mass exceeds the bound.
void validate_forcing(const ForcingSpec& spec, const Grid& g);

// One-line description of how ||f(.,t)||_{L^p} evolves in time for this family.
std::string lp_profile_description(const ForcingSpec& spec);

// Evaluate f(.,t) on the grid. Gaussians are evaluated pointwise in physical
// space (positivity exact) as a 7-image periodic sum per axis, then scaled so
// the discrete integral equals `mass`.
ScalarField eval_forcing(const ForcingSpec& spec, const GridPtr& g, double t);

// Periodic potential with a controlled gradient bound: g_amp * sin(2*pi*x_d/L_d)
// * L_d/(2*pi) on the last axis, so max|grad Phi| = g_amp. g_amp = 0 gives the
// constant (decoupled-fluid) potential.
ScalarField make_potential(const GridPtr& g, double g_amp);

}  // namespace kss
