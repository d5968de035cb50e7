#pragma once

#include <string>
#include <vector>

#include "kss/field.hpp"
#include "kss/transform.hpp"

namespace kss {

// Which conditional estimate a sweep is probing: the response norm whose
// growth against M_p = 1 + sup_s ||f(.,s)||_{L^p} gets a fitted exponent.
enum class ProbeTarget {
  VTheta,       // ||A^theta v||_{L^2}
  VLr,          // ||v||_{L^r}
  ZLq,          // ||z||_{L^q}
  ZW1inf,       // ||z||_{W^{1,inf}}
  ZFractional,  // ||B^beta (z - e^{-tB} z0)||_{L^q}
};
constexpr int kNumProbeTargets = 5;

const char* probe_target_name(ProbeTarget t);
ProbeTarget probe_target_from_name(const std::string& name);

// Exponent parameters of the conditional estimates.
struct EstimateSpec {
  double p = 4.0;           // forcing norm index, >= 2
  double q = 2.0;           // signal norm index, >= 2
  double r = 6.0;           // fluid norm index, > 3
  double theta = 0.8;       // Stokes fractional power, in (1/4, theta_init]
  double theta_init = 0.85; // fractional power bounding the initial fluid data, in (3/4, 1)
  double beta = 0.75;       // heat fractional power, in (1/2, 1)
  double eta = 0.05;        // slack added to the near-critical exponents, > 0

  friend bool operator==(const EstimateSpec&, const EstimateSpec&) = default;
};

// Unconditional parameter-range checks; throws param_error naming the key.
void validate_estimate_spec(const EstimateSpec& s);
// Additional conditions that only bind for particular probe targets:
// the W^{1,inf} target needs p > 3; the fractional-difference target needs
// q*(2*beta - 1) > 3 and 2*p*(1 - beta) >= 3.
void validate_estimate_spec(const EstimateSpec& s, ProbeTarget target);

// The theoretical exponent the fitted slope is compared against, as a
// function of the spec parameters (p/(p-1) times a target-specific factor).
double target_ceiling(const EstimateSpec& s, ProbeTarget target);

// Bounds on the initial data of the linear system. make_init_bounds projects
// v0 (the fractional Stokes power is only defined on solenoidal zero-mean
// fields) and then checks z0 >= 0, ||z0||_{W^{1,inf}} <= K and
// ||A^{theta_init} v0||_{L^2} <= K numerically.
struct InitBounds {
  double K = 1.0;
  ScalarField z0;
  VectorField v0;
  double theta_init = 0.85;
};

InitBounds make_init_bounds(Transform& tf, double K, ScalarField z0, VectorField v0,
                            double theta_init);

// Per-sample records of the probe functionals. M_p and N_qbeta are running
// 1 + sup forms and therefore nondecreasing and >= 1.
struct DiagnosticSeries {
  std::vector<double> times;
  std::vector<double> M_p;
  std::vector<double> N_qbeta;
  std::vector<double> v_theta_norm;  // ||A^theta v||_{L^2}
  std::vector<double> v_r_norm;      // ||v||_{L^r}
  std::vector<double> z_q_norm;      // ||z||_{L^q}
  std::vector<double> z_w1inf;       // ||z||_{W^{1,inf}}
  std::vector<double> zhat_w1inf;    // ||z - e^{-tB} z0||_{W^{1,inf}}

  std::size_t size() const { return times.size(); }
  // Largest recorded value of the response norm behind a probe target.
  double sup_response(ProbeTarget t) const;
};

// Incremental recorder fed once per output time with the spectral state and
// the physical forcing snapshot.
class DiagnosticRecorder {
 public:
  DiagnosticRecorder(Transform& tf, const EstimateSpec& spec, const SpectralScalar& z0_spec);

  void record(double t, const SpectralScalar& z, const SpectralVector& v, const ScalarField& f);
  const DiagnosticSeries& series() const { return series_; }
  double undershoot_max() const { return undershoot_max_; }  // max over samples of (-min z)+
  double z_linf_max() const { return z_linf_max_; }

 private:
  Transform& tf_;
  EstimateSpec spec_;
  SpectralScalar z0_spec_;
  DiagnosticSeries series_;
  double sup_f_lp_ = 0.0;
  double sup_bdiff_ = 0.0;
  double undershoot_max_ = 0.0;
  double z_linf_max_ = 0.0;
};

// Batch form over a prerecorded history (physical-space states).
struct LinearSample {
  double t;
  ScalarField z;
  VectorField v;
  ScalarField f;
};

DiagnosticSeries record_diagnostics(Transform& tf, const std::vector<LinearSample>& history,
                                    const EstimateSpec& spec, const InitBounds& init);

// Ordinary least squares on (log x, log y).
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;  // in natural-log coordinates
  double r2 = 0.0;
  double decades = 0.0;  // log10 spread of x
  int points = 0;
};

// Requires >= 4 positive pairs; refuses (param_error) when the x values span
// less than one decade. Callers decide what slope to compare against.
FitResult fit_scaling_exponent(const std::vector<std::pair<double, double>>& pairs);

}  // namespace kss
