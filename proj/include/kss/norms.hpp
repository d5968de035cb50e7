#pragma once

#include "kss/field.hpp"
#include "kss/transform.hpp"

namespace kss {

// Which norm to take: L^p for finite p >= 1, L^inf, or W^{1,inf} (the latter
// differentiates spectrally, so it needs a Transform).
struct NormSpec {
  enum class Kind { Lp, Linf, W1inf };
  Kind kind;
  double p = 0.0;

  static NormSpec lp(double p);  // p == infinity maps to Linf; p < 1 is a parameter error
  static NormSpec linf() { return {Kind::Linf, 0.0}; }
  static NormSpec w1inf() { return {Kind::W1inf, 0.0}; }
};

// Quadrature norms on the grid: finite p uses (sum |phi|^p * cell_volume)^{1/p},
// p = inf the max of |phi|. Vector fields reduce pointwise to the Euclidean
// magnitude first.
double lp_norm(const ScalarField& f, double p);
double lp_norm(const VectorField& w, double p);

double w1inf_norm(Transform& tf, const ScalarField& f);

double norm(Transform& tf, const ScalarField& f, const NormSpec& spec);
double norm(Transform& tf, const VectorField& w, const NormSpec& spec);

// sum phi * cell_volume (the mass functional).
double integral(const ScalarField& f);
double min_value(const ScalarField& f);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& w);

}  // namespace kss
