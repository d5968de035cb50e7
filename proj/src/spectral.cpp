#include "kss/spectral.hpp"

#include <cmath>
#include <cstring>

#include "kss/errors.hpp"
#include "kss/kernels.hpp"

namespace kss {

namespace {

constexpr double kStokesContractTol = 1e-8;

void check_stokes_contract(const Grid& g, const double* const comp[3]) {
  const double div = solenoidality_residual(g, comp);
  if (div > kStokesContractTol)
    throw contract_error("Stokes-kind operator applied to a non-solenoidal field (relative spectral divergence " +
                         std::to_string(div) + ")");
  // Relative mean: compare the k=0 coefficient against the largest coefficient.
  double peak = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const double* c = comp[a];
    for (std::size_t m = 0; m < g.nmodes(); ++m)
      peak = std::max(peak, std::hypot(c[2 * m], c[2 * m + 1]));
  }
  if (peak > 0.0 && mean_mode_magnitude(g, comp) > kStokesContractTol * peak)
    throw contract_error("Stokes-kind operator applied to a field with nonzero mean");
}

}  // namespace

std::vector<double> multiplier_table(const Grid& g, const SpectralOperator& op) {
  std::vector<double> m(g.nmodes());
  const double* k2 = g.k2();
  switch (op.kind) {
    case SpectralOperator::Kind::HeatPower:
      if (op.parameter == 0.0) {
        m.assign(g.nmodes(), 1.0);
      } else {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::pow(k2[i] + 1.0, op.parameter);
      }
      break;
    case SpectralOperator::Kind::HeatSemigroup:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(-op.parameter * (k2[i] + 1.0));
      break;
    case SpectralOperator::Kind::StokesPower:
      m[0] = 0.0;  // zero-mean domain; the mean mode carries nothing
      for (std::size_t i = 1; i < m.size(); ++i)
        m[i] = op.parameter == 0.0 ? 1.0 : std::pow(k2[i], op.parameter);
      break;
    case SpectralOperator::Kind::StokesSemigroup:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(-op.parameter * k2[i]);
      break;
    case SpectralOperator::Kind::InverseHelmholtzShift:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1.0 / (k2[i] + 1.0);
      break;
  }
  return m;
}

void gradient_spec(const Grid& g, const double* spec, double* const out[3]) {
  const auto& ops = kernels::active();
  for (int a = 0; a < g.dim(); ++a) ops.mode_grad(out[a], spec, g.kgrad(a), g.nmodes());
}

void divergence_spec(const Grid& g, const double* const comp[3], double* out) {
  const auto& ops = kernels::active();
  ops.mode_grad(out, comp[0], g.kgrad(0), g.nmodes());
  std::vector<double> tmp(2 * g.nmodes());
  for (int a = 1; a < g.dim(); ++a) {
    ops.mode_grad(tmp.data(), comp[a], g.kgrad(a), g.nmodes());
    ops.add(out, out, tmp.data(), 2 * g.nmodes());
  }
}

void project_solenoidal_spec(const Grid& g, double* const comp[3]) {
  const auto& ops = kernels::active();
  if (g.dim() == 2) {
    ops.leray2(comp[0], comp[1], g.kfull(0), g.kfull(1), g.inv_k2(), g.nmodes());
  } else {
    ops.leray3(comp[0], comp[1], comp[2], g.kfull(0), g.kfull(1), g.kfull(2), g.inv_k2(), g.nmodes());
  }
  for (int a = 0; a < g.dim(); ++a) comp[a][0] = comp[a][1] = 0.0;  // zero-momentum convention
}

void dealias_spec(const Grid& g, double* spec) {
  kernels::active().mode_scale(spec, spec, g.dealias_mask(), g.nmodes());
}

double solenoidality_residual(const Grid& g, const double* const comp[3]) {
  double num = 0.0;  // max |k.v|
  double den = 0.0;  // max |k||v|
  for (std::size_t m = 0; m < g.nmodes(); ++m) {
    double dre = 0.0, dim = 0.0, magsq = 0.0, ksq = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double k = g.kfull(a)[m];
      const double re = comp[a][2 * m];
      const double im = comp[a][2 * m + 1];
      dre += k * re;
      dim += k * im;
      magsq += re * re + im * im;
      ksq += k * k;
    }
    num = std::max(num, std::hypot(dre, dim));
    den = std::max(den, std::sqrt(ksq * magsq));
  }
  return den > 0.0 ? num / den : 0.0;
}

double mean_mode_magnitude(const Grid& g, const double* const comp[3]) {
  double m = 0.0;
  for (int a = 0; a < g.dim(); ++a) m = std::max(m, std::hypot(comp[a][0], comp[a][1]));
  return m;
}

void gradient(Transform& tf, const ScalarField& f, VectorField& out) {
  const Grid& g = tf.grid();
  require_same_grid(*f.grid, g, "gradient");
  if (out.comp[0].empty()) out = VectorField(f.grid);
  SpectralScalar spec(f.grid);
  tf.forward(f, spec);
  SpectralVector gs(f.grid);
  double* comps[3] = {gs.data(0), gs.data(1), g.dim() == 3 ? gs.data(2) : nullptr};
  gradient_spec(g, spec.data(), comps);
  tf.inverse(gs, out);
}

double divergence_linf(Transform& tf, const VectorField& w) {
  const Grid& g = tf.grid();
  SpectralVector ws(w.grid);
  tf.forward(w, ws);
  const double* comps[3] = {ws.data(0), ws.data(1), g.dim() == 3 ? ws.data(2) : nullptr};
  std::vector<double> div(2 * g.nmodes());
  divergence_spec(g, comps, div.data());
  ScalarField d(w.grid);
  tf.inverse(div.data(), d.data());
  return kernels::active().max_abs(d.data(), d.size());
}

VectorField project_solenoidal(Transform& tf, const VectorField& w) {
  const Grid& g = tf.grid();
  require_same_grid(*w.grid, g, "project_solenoidal");
  for (int a = 1; a < g.dim(); ++a)
    if (w.comp[a].size() != w.comp[0].size())
      throw structural_error("project_solenoidal: component sizes disagree");
  SpectralVector ws(w.grid);
  tf.forward(w, ws);
  double* comps[3] = {ws.data(0), ws.data(1), g.dim() == 3 ? ws.data(2) : nullptr};
  project_solenoidal_spec(g, comps);
  VectorField out(w.grid);
  tf.inverse(ws, out);
  return out;
}

void apply_operator_spec(const Grid& g, const SpectralOperator& op, double* spec) {
  if (op.is_stokes())
    throw contract_error("Stokes-kind operator is defined on vector fields only");
  const auto table = multiplier_table(g, op);
  kernels::active().mode_scale(spec, spec, table.data(), g.nmodes());
}

void apply_operator_spec(const Grid& g, const SpectralOperator& op, double* const comp[3]) {
  if (op.is_stokes()) check_stokes_contract(g, comp);
  const auto table = multiplier_table(g, op);
  for (int a = 0; a < g.dim(); ++a) kernels::active().mode_scale(comp[a], comp[a], table.data(), g.nmodes());
}

ScalarField apply_operator(Transform& tf, const ScalarField& f, const SpectralOperator& op) {
  require_same_grid(*f.grid, tf.grid(), "apply_operator");
  SpectralScalar spec(f.grid);
  tf.forward(f, spec);
  apply_operator_spec(tf.grid(), op, spec.data());
  ScalarField out(f.grid);
  tf.inverse(spec, out);
  return out;
}

VectorField apply_operator(Transform& tf, const VectorField& w, const SpectralOperator& op) {
  require_same_grid(*w.grid, tf.grid(), "apply_operator");
  SpectralVector ws(w.grid);
  tf.forward(w, ws);
  double* comps[3] = {ws.data(0), ws.data(1), tf.grid().dim() == 3 ? ws.data(2) : nullptr};
  apply_operator_spec(tf.grid(), op, comps);
  VectorField out(w.grid);
  tf.inverse(ws, out);
  return out;
}

}  // namespace kss
