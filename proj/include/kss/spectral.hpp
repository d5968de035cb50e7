#pragma once

#include <vector>

#include "kss/field.hpp"
#include "kss/grid.hpp"
#include "kss/transform.hpp"

namespace kss {

// Diagonal multiplier in Fourier space: one of the operator families the
// estimates are phrased in. B = -laplace + 1 acts as |k|^2+1 per mode; the
// Stokes operator restricted to zero-mean solenoidal fields acts as |k|^2.
struct SpectralOperator {
  enum class Kind { HeatPower, HeatSemigroup, StokesPower, StokesSemigroup, InverseHelmholtzShift };
  Kind kind;
  double parameter;  // beta / theta / t; ignored for InverseHelmholtzShift

  static SpectralOperator heat_power(double beta) { return {Kind::HeatPower, beta}; }
  static SpectralOperator heat_semigroup(double t) { return {Kind::HeatSemigroup, t}; }
  static SpectralOperator stokes_power(double theta) { return {Kind::StokesPower, theta}; }
  static SpectralOperator stokes_semigroup(double t) { return {Kind::StokesSemigroup, t}; }
  static SpectralOperator inverse_helmholtz_shift() { return {Kind::InverseHelmholtzShift, 0.0}; }

  bool is_stokes() const { return kind == Kind::StokesPower || kind == Kind::StokesSemigroup; }
};

// Multiplier tables (length grid.nmodes()).
std::vector<double> multiplier_table(const Grid& g, const SpectralOperator& op);

// --- raw spectral-array operations (interleaved complex, length 2*nmodes) ---

// out_a = i*k_a .* spec; Nyquist modes of each axis are zeroed (the first
// derivative of the interpolant has no well-defined Nyquist sign).
void gradient_spec(const Grid& g, const double* spec, double* const out[3]);

// out = sum_a i*k_a .* comp_a (same Nyquist treatment).
void divergence_spec(const Grid& g, const double* const comp[3], double* out);

// In-place Leray projection with the zero-momentum convention: removes the
// k (k.v)/|k|^2 part on every mode and zeroes the k=0 mode of each component.
void project_solenoidal_spec(const Grid& g, double* const comp[3]);

// In-place 2/3-rule truncation.
void dealias_spec(const Grid& g, double* spec);

// max_k |k.v(k)| / max_k |k||v(k)|; 0 for the zero field. Used both as a test
// diagnostic and as the runtime contract check for Stokes-kind operators.
double solenoidality_residual(const Grid& g, const double* const comp[3]);

// Largest |coefficient| of the mean (k=0) mode across components.
double mean_mode_magnitude(const Grid& g, const double* const comp[3]);

// --- field-level wrappers ---

void gradient(Transform& tf, const ScalarField& f, VectorField& out);
double divergence_linf(Transform& tf, const VectorField& w);  // max |div w| in physical space

VectorField project_solenoidal(Transform& tf, const VectorField& w);

// Applies the diagonal operator through forward/inverse transforms. Stokes
// kinds require solenoidal zero-mean input (relative spectral divergence and
// relative mean both <= 1e-8) and throw contract_error otherwise.
ScalarField apply_operator(Transform& tf, const ScalarField& f, const SpectralOperator& op);
VectorField apply_operator(Transform& tf, const VectorField& w, const SpectralOperator& op);

// Spectral-side application (no transforms); same Stokes contract.
void apply_operator_spec(const Grid& g, const SpectralOperator& op, double* spec);
void apply_operator_spec(const Grid& g, const SpectralOperator& op, double* const comp[3]);

}  // namespace kss
