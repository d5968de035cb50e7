#include "kss/norms.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kss/errors.hpp"
#include "kss/kernels.hpp"
#include "kss/spectral.hpp"

namespace kss {

NormSpec NormSpec::lp(double p) {
  if (std::isinf(p) && p > 0) return linf();
  if (!(p >= 1.0)) throw param_error("norm exponent must be >= 1, got " + std::to_string(p));
  return {Kind::Lp, p};
}

double lp_norm(const ScalarField& f, double p) {
  const auto& ops = kernels::active();
  if (std::isinf(p)) return ops.max_abs(f.data(), f.size());
  if (!(p >= 1.0)) throw param_error("norm exponent must be >= 1, got " + std::to_string(p));
  const double s = kernels::sum_abs_pow(f.data(), p, f.size());
  return std::pow(s * f.grid->cell_volume(), 1.0 / p);
}

double lp_norm(const VectorField& w, double p) {
  const Grid& g = *w.grid;
  const auto& ops = kernels::active();
  std::vector<double> magsq(g.nreal());
  if (g.dim() == 2) {
    ops.magnitude_sq2(magsq.data(), w.data(0), w.data(1), g.nreal());
  } else {
    ops.magnitude_sq3(magsq.data(), w.data(0), w.data(1), w.data(2), g.nreal());
  }
  if (std::isinf(p)) return std::sqrt(ops.max_abs(magsq.data(), magsq.size()));
  if (!(p >= 1.0)) throw param_error("norm exponent must be >= 1, got " + std::to_string(p));
  const double s = kernels::sum_abs_pow(magsq.data(), p / 2.0, magsq.size());
  return std::pow(s * g.cell_volume(), 1.0 / p);
}

double w1inf_norm(Transform& tf, const ScalarField& f) {
  VectorField grad;
  gradient(tf, f, grad);
  const double inf = std::numeric_limits<double>::infinity();
  return std::max(lp_norm(f, inf), lp_norm(grad, inf));
}

double norm(Transform& tf, const ScalarField& f, const NormSpec& spec) {
  switch (spec.kind) {
    case NormSpec::Kind::Lp:
      return lp_norm(f, spec.p);
    case NormSpec::Kind::Linf:
      return lp_norm(f, std::numeric_limits<double>::infinity());
    case NormSpec::Kind::W1inf:
      return w1inf_norm(tf, f);
  }
  throw contract_error("unreachable norm kind");
}

double norm(Transform&, const VectorField& w, const NormSpec& spec) {
  switch (spec.kind) {
    case NormSpec::Kind::Lp:
      return lp_norm(w, spec.p);
    case NormSpec::Kind::Linf:
      return lp_norm(w, std::numeric_limits<double>::infinity());
    case NormSpec::Kind::W1inf:
      throw param_error("W1inf norm is defined here for scalar fields only");
  }
  throw contract_error("unreachable norm kind");
}

double integral(const ScalarField& f) {
  return kernels::active().sum(f.data(), f.size()) * f.grid->cell_volume();
}

double min_value(const ScalarField& f) { return kernels::active().min_val(f.data(), f.size()); }

double max_abs(const ScalarField& f) { return kernels::active().max_abs(f.data(), f.size()); }

double max_abs(const VectorField& w) {
  double m = 0.0;
  for (int a = 0; a < w.grid->dim(); ++a)
    m = std::max(m, kernels::active().max_abs(w.data(a), w.grid->nreal()));
  return m;
}

}  // namespace kss
