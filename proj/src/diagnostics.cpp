#include "kss/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kss/errors.hpp"
#include "kss/kernels.hpp"
#include "kss/norms.hpp"
#include "kss/spectral.hpp"

namespace kss {

const char* probe_target_name(ProbeTarget t) {
  switch (t) {
    case ProbeTarget::VTheta:
      return "v_theta_l2";
    case ProbeTarget::VLr:
      return "v_lr";
    case ProbeTarget::ZLq:
      return "z_lq";
    case ProbeTarget::ZW1inf:
      return "z_w1inf";
    case ProbeTarget::ZFractional:
      return "z_fractional";
  }
  return "?";
}

ProbeTarget probe_target_from_name(const std::string& name) {
  for (int i = 0; i < kNumProbeTargets; ++i) {
    const auto t = static_cast<ProbeTarget>(i);
    if (name == probe_target_name(t)) return t;
  }
  throw param_error("unknown probe target '" + name +
                    "' (expected v_theta_l2, v_lr, z_lq, z_w1inf or z_fractional)");
}

void validate_estimate_spec(const EstimateSpec& s) {
  if (!(s.p >= 2.0)) throw param_error("estimate.p must be >= 2");
  if (!(s.q >= 2.0)) throw param_error("estimate.q must be >= 2");
  if (!(s.r > 3.0)) throw param_error("estimate.r must be > 3");
  if (!(s.theta_init > 0.75 && s.theta_init < 1.0))
    throw param_error("estimate.theta_init must lie in (3/4, 1)");
  if (!(s.theta > 0.25 && s.theta <= s.theta_init))
    throw param_error("estimate.theta must lie in (1/4, theta_init]");
  if (!(s.beta > 0.5 && s.beta < 1.0)) throw param_error("estimate.beta must lie in (1/2, 1)");
  if (!(s.eta > 0.0)) throw param_error("estimate.eta must be positive");
}

void validate_estimate_spec(const EstimateSpec& s, ProbeTarget target) {
  validate_estimate_spec(s);
  if (target == ProbeTarget::ZW1inf && !(s.p > 3.0))
    throw param_error("the z_w1inf target requires p > 3 (got p = " + std::to_string(s.p) + ")");
  if (target == ProbeTarget::ZFractional) {
    if (!(s.q * (2.0 * s.beta - 1.0) > 3.0))
      throw param_error("the z_fractional target requires q*(2*beta - 1) > 3 (got " +
                        std::to_string(s.q * (2.0 * s.beta - 1.0)) + ")");
    if (!(2.0 * s.p * (1.0 - s.beta) >= 3.0))
      throw param_error("the z_fractional target requires 2*p*(1 - beta) >= 3 (got " +
                        std::to_string(2.0 * s.p * (1.0 - s.beta)) + ")");
  }
}

double target_ceiling(const EstimateSpec& s, ProbeTarget target) {
  const double pfac = s.p / (s.p - 1.0);
  switch (target) {
    case ProbeTarget::VTheta:
      return pfac * ((4.0 * s.theta - 1.0) / 6.0 + s.eta);
    case ProbeTarget::VLr:
      return pfac * ((s.r - 3.0) / (3.0 * s.r) + s.eta);
    case ProbeTarget::ZLq:
      return pfac * (s.q - 1.0) / (3.0 * s.q);
    case ProbeTarget::ZW1inf:
      return pfac * (2.0 / 3.0 + s.eta);
    case ProbeTarget::ZFractional:
      return pfac * ((2.0 * s.q * s.beta + s.q - 1.0) / (3.0 * s.q) + s.eta);
  }
  throw contract_error("unreachable probe target");
}

InitBounds make_init_bounds(Transform& tf, double K, ScalarField z0, VectorField v0,
                            double theta_init) {
  if (!(K > 0.0)) throw param_error("init bound K must be positive");
  if (!(theta_init > 0.75 && theta_init < 1.0))
    throw param_error("init theta_init must lie in (3/4, 1)");
  if (min_value(z0) < 0.0) throw param_error("z0 must be nonnegative");
  const double z0n = w1inf_norm(tf, z0);
  if (z0n > K * (1.0 + 1e-12))
    throw param_error("||z0||_{W^{1,inf}} = " + std::to_string(z0n) + " exceeds the bound K = " +
                      std::to_string(K));
  VectorField v0p = project_solenoidal(tf, v0);
  // A projection residue below roundoff of the input (e.g. v0 was a pure
  // gradient) is numerical dust whose relative divergence is meaningless;
  // snap it to the exact zero field before the Stokes-power contract check.
  if (max_abs(v0p) <= 1e-13 * max_abs(v0))
    for (int a = 0; a < v0p.grid->dim(); ++a) std::fill(v0p.comp[a].begin(), v0p.comp[a].end(), 0.0);
  const double v0n = lp_norm(apply_operator(tf, v0p, SpectralOperator::stokes_power(theta_init)), 2.0);
  if (v0n > K * (1.0 + 1e-12))
    throw param_error("||A^theta_init v0||_{L^2} = " + std::to_string(v0n) +
                      " exceeds the bound K = " + std::to_string(K));
  InitBounds b;
  b.K = K;
  b.z0 = std::move(z0);
  b.v0 = std::move(v0p);
  b.theta_init = theta_init;
  return b;
}

double DiagnosticSeries::sup_response(ProbeTarget t) const {
  const std::vector<double>* col = nullptr;
  switch (t) {
    case ProbeTarget::VTheta:
      col = &v_theta_norm;
      break;
    case ProbeTarget::VLr:
      col = &v_r_norm;
      break;
    case ProbeTarget::ZLq:
      col = &z_q_norm;
      break;
    case ProbeTarget::ZW1inf:
      col = &z_w1inf;
      break;
    case ProbeTarget::ZFractional:
      // N_qbeta already carries 1 + sup of the fractional difference; recover
      // the raw sup instead so all targets report plain response norms.
      return N_qbeta.empty() ? 0.0 : N_qbeta.back() - 1.0;
  }
  double m = 0.0;
  for (double x : *col) m = std::max(m, x);
  return m;
}

DiagnosticRecorder::DiagnosticRecorder(Transform& tf, const EstimateSpec& spec,
                                       const SpectralScalar& z0_spec)
    : tf_(tf), spec_(spec), z0_spec_(z0_spec) {
  validate_estimate_spec(spec_);
}

void DiagnosticRecorder::record(double t, const SpectralScalar& z, const SpectralVector& v,
                                const ScalarField& f) {
  const Grid& g = tf_.grid();
  const GridPtr& gp = tf_.grid_ptr();
  const double inf = std::numeric_limits<double>::infinity();

  // Forcing norm drives M_p.
  sup_f_lp_ = std::max(sup_f_lp_, lp_norm(f, spec_.p));

  // Physical z and its gradient once; reused by several columns.
  ScalarField z_phys(gp);
  tf_.inverse(z, z_phys);
  const double z_min = min_value(z_phys);
  undershoot_max_ = std::max(undershoot_max_, std::max(0.0, -z_min));
  z_linf_max_ = std::max(z_linf_max_, lp_norm(z_phys, inf));

  // zdiff = z - e^{-tB} z0 (spectral).
  SpectralScalar zdiff = z0_spec_;
  apply_operator_spec(g, SpectralOperator::heat_semigroup(t), zdiff.data());
  kernels::active().sub(zdiff.data(), z.data(), zdiff.data(), 2 * g.nmodes());

  // ||B^beta zdiff||_{L^q} feeds N_qbeta.
  {
    SpectralScalar bz = zdiff;
    apply_operator_spec(g, SpectralOperator::heat_power(spec_.beta), bz.data());
    ScalarField bz_phys(gp);
    tf_.inverse(bz, bz_phys);
    sup_bdiff_ = std::max(sup_bdiff_, lp_norm(bz_phys, spec_.q));
  }

  // ||zdiff||_{W^{1,inf}}.
  double zhat_norm;
  {
    ScalarField zd_phys(gp);
    tf_.inverse(zdiff, zd_phys);
    zhat_norm = w1inf_norm(tf_, zd_phys);
  }

  // Fluid norms: A^theta in L^2 and the plain L^r norm.
  SpectralVector av = v;
  double* comps[3] = {av.data(0), av.data(1), g.dim() == 3 ? av.data(2) : nullptr};
  apply_operator_spec(g, SpectralOperator::stokes_power(spec_.theta), comps);
  VectorField av_phys(gp);
  tf_.inverse(av, av_phys);
  VectorField v_phys(gp);
  tf_.inverse(v, v_phys);

  series_.times.push_back(t);
  series_.M_p.push_back(1.0 + sup_f_lp_);
  series_.N_qbeta.push_back(1.0 + sup_bdiff_);
  series_.v_theta_norm.push_back(lp_norm(av_phys, 2.0));
  series_.v_r_norm.push_back(lp_norm(v_phys, spec_.r));
  series_.z_q_norm.push_back(lp_norm(z_phys, spec_.q));
  series_.z_w1inf.push_back(w1inf_norm(tf_, z_phys));
  series_.zhat_w1inf.push_back(zhat_norm);
}

DiagnosticSeries record_diagnostics(Transform& tf, const std::vector<LinearSample>& history,
                                    const EstimateSpec& spec, const InitBounds& init) {
  validate_estimate_spec(spec);
  if (history.empty()) throw param_error("diagnostic history is empty");
  for (std::size_t i = 1; i < history.size(); ++i)
    if (!(history[i].t > history[i - 1].t))
      throw param_error("diagnostic history times must be strictly increasing");

  SpectralScalar z0_spec(tf.grid_ptr());
  tf.forward(init.z0, z0_spec);
  DiagnosticRecorder rec(tf, spec, z0_spec);
  for (const auto& s : history) {
    SpectralScalar zs(tf.grid_ptr());
    tf.forward(s.z, zs);
    SpectralVector vs(tf.grid_ptr());
    tf.forward(s.v, vs);
    rec.record(s.t, zs, vs, s.f);
  }
  return rec.series();
}

FitResult fit_scaling_exponent(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 4)
    throw param_error("scaling fit needs at least 4 points, got " + std::to_string(pairs.size()));
  double xmin = std::numeric_limits<double>::infinity(), xmax = 0.0;
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0)) throw param_error("scaling fit needs positive values");
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  FitResult fit;
  fit.points = static_cast<int>(pairs.size());
  fit.decades = std::log10(xmax / xmin);
  if (fit.decades < 1.0)
    throw param_error("scaling fit x-range spans only " + std::to_string(fit.decades) +
                      " decades; at least one decade is required");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(pairs.size());
  for (const auto& [x, y] : pairs) {
    const double lx = std::log(x);
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (const auto& [x, y] : pairs) {
    const double e = std::log(y) - (fit.intercept + fit.slope * std::log(x));
    ss_res += e * e;
  }
  fit.r2 = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace kss
