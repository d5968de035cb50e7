#pragma once

#include <array>
#include <string>
#include <vector>

#include "kss/diagnostics.hpp"
#include "kss/etd.hpp"
#include "kss/field.hpp"
#include "kss/forcing.hpp"
#include "kss/transform.hpp"

namespace kss {

// One-way coupled linear system: the fluid v is driven by f*grad(Phi) through
// the Stokes semigroup, and the signal z rides on v by advection while being
// produced by f and damped/diffused by B = -laplace + 1.
//
// Time stepping is the second-order exponential integrator: the stiff
// diagonal parts (damped heat for z, Stokes for v) are exact per mode, the
// advection and forcing terms enter through the phi1/phi2 weights, products
// are formed in physical space and dealiased, and the pressure never appears
// because the v-forcing is Leray-projected.
class LinearStepper {
 public:
  LinearStepper(Transform& tf, ForcingSpec forcing, double potential_g, double cfl_safety);

  void initialize(const InitBounds& init);

  // One step of size dt. Throws cfl_error (state untouched, suggested dt
  // attached) when dt violates the advective bound, numerical_abort when the
  // updated state stops being finite.
  void step(double dt);

  double time() const { return t_; }
  long step_index() const { return step_; }
  const SpectralScalar& z_spec() const { return z_; }
  const SpectralVector& v_spec() const { return v_; }
  ScalarField z_physical();
  VectorField v_physical();
  ScalarField forcing_at(double t) const;
  // Largest advective step the current velocity admits.
  double stable_dt();

 private:
  struct Nonlin {
    SpectralScalar z;
    SpectralVector v;
  };
  // Evaluates N at (z, v, t); returns the CFL speed sum of the velocity used.
  double eval_nonlinear(const SpectralScalar& z, const SpectralVector& v, double t, Nonlin& out);
  void ensure_tables(double dt);

  Transform& tf_;
  ForcingSpec forcing_;
  double cfl_safety_;
  bool f_cached_ = false;  // time-independent forcing already materialized
  VectorField grad_phi_;   // physical gradient of the potential
  SpectralScalar z_;
  SpectralVector v_;
  ScalarField f_phys_, tmp_phys_, adv_phys_, dz_phys_, vel_phys_;
  SpectralScalar gz_spec_;
  SpectralScalar az_;
  SpectralVector av_;
  double t_ = 0.0;
  long step_ = 0;
  EtdTable table_z_, table_v_;
  Nonlin n1_, n2_;
  double last_speed_sum_ = 0.0;
};

struct LinearProbeParams {
  GridPtr grid;
  ForcingSpec forcing;
  EstimateSpec estimate;
  double init_K = 10.0;
  double potential_g = 1.0;
  double T = 2.0;
  double dt = 1e-3;
  int output_every = 10;  // diagnostics sampled every this many steps
  double cfl_safety = 0.8;
};

struct LinearRunResult {
  double amplitude = 0.0;
  bool completed = false;
  bool in_fit = false;  // completed and carrying a usable (positive) response
  std::string failure;  // set when not completed
  long abort_step = -1;
  DiagnosticSeries series;
  double sup_Mp = 1.0;
  std::array<double, kNumProbeTargets> sup_response{};
  double undershoot_max = 0.0;   // largest negative excursion of z
  double undershoot_rel = 0.0;   // relative to the max of ||z||_inf
  double sol_residual_max = 0.0; // worst spectral divergence of v at samples
};

// Integrates one configuration to time T at fixed dt and records diagnostics
// every output_every steps (plus t=0 and the final time). A null init means
// z0 = 0, v0 = 0.
LinearRunResult run_linear(Transform& tf, const LinearProbeParams& params,
                           const InitBounds* init = nullptr);

struct SweepReport {
  ProbeTarget target{};
  EstimateSpec estimate;
  double ceiling = 0.0;
  std::vector<double> amplitudes;
  std::vector<LinearRunResult> runs;
  FitResult fit;
  int survivors = 0;
};

// Runs the amplitude sweep (concurrently across runs when threads > 1), fits
// log response against log M_p over the surviving runs, and reports the
// theoretical ceiling next to the fitted slope. Amplitude 0 entries run with
// f = 0 but are excluded from the fit.
SweepReport probe_estimate(const LinearProbeParams& base, ProbeTarget target,
                           const std::vector<double>& amplitudes, int threads = 1);

// probe_series.csv / probe_runs.csv / probe_summary.csv under out_dir.
void write_sweep_csv(const SweepReport& report, const std::string& out_dir);

}  // namespace kss
