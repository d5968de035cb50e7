#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kss/diagnostics.hpp"
#include "kss/etd.hpp"
#include "kss/field.hpp"
#include "kss/transform.hpp"

namespace kss {

// Flux limiter F(xi) = K_F * (1 + xi)^(-alpha/2): nonincreasing, F(0) = K_F,
// and |F| <= K_F (1+xi)^(-alpha/2) holds with equality. lower_const is the
// optional lower-bound constant k_F of super-limited experiments; it is
// carried for reporting and never enters the update.
struct FluxLimiter {
  double K_F = 1.0;
  double alpha = 0.5;
  std::optional<double> lower_const;
};

double flux_limiter_eval(const FluxLimiter& f, double xi);

// Full nonlinear problem: cell density n, signal c, Stokes fluid u driven by
// n*grad(phi), chemotactic flux n F(|grad c|^2) grad c.
struct KSSParams {
  GridPtr grid;
  FluxLimiter limiter;
  ScalarField phi;  // periodic potential (see make_potential)
  ScalarField n0, c0;
  VectorField u0;
  bool fluid_free = false;  // freeze u at 0: the chemotaxis-only comparison system
};

// Throws param_error on missing fields, sign violations of n0/c0, or bad
// limiter constants.
void validate_kss_params(const KSSParams& p);

struct KSSState {
  double t = 0.0;
  ScalarField n, c;
  VectorField u;
};

// One ETD2RK step of the coupled system. The stiff diagonal parts (heat for
// n, damped heat for c, Stokes for u) are exact per mode; chemotaxis and
// advection enter through the phi1/phi2 weights with every cross term of an
// evaluation reading one consistent state. The n nonlinearity is kept in
// divergence form -div(n F grad c + n u), whose k = 0 mode vanishes
// identically, so the discrete mass integral of n never moves at all.
class KSSStepper {
 public:
  KSSStepper(Transform& tf, const KSSParams& params, double cfl_safety);

  void step(double dt);  // cfl_error (state untouched) / numerical_abort
  double time() const { return t_; }
  long step_index() const { return step_; }
  const SpectralScalar& n_spec() const { return n_; }
  const SpectralScalar& c_spec() const { return c_; }
  const SpectralVector& u_spec() const { return u_; }
  ScalarField n_physical();
  ScalarField c_physical();
  VectorField u_physical();
  KSSState state();
  double mass() const;  // discrete integral of n, read off the mean mode
  double stable_dt();   // from the speeds of the last accepted evaluation

 private:
  struct Nonlin {
    SpectralScalar n, c;
    SpectralVector u;
  };
  double eval_nonlinear(const SpectralScalar& n, const SpectralScalar& c, const SpectralVector& u,
                        Nonlin& out);
  void ensure_tables(double dt);

  Transform& tf_;
  FluxLimiter limiter_;
  bool fluid_free_;
  double cfl_safety_;
  VectorField grad_phi_;
  SpectralScalar n_, c_;
  SpectralVector u_;
  // scratch
  ScalarField n_phys_, u_ax_, f_field_, tmp_, tmp2_, flux_, adv_c_;
  VectorField grad_c_;
  SpectralScalar spec_tmp_, grad_tmp_;
  Nonlin n1_, n2_;
  SpectralScalar an_, ac_;
  SpectralVector au_;
  double t_ = 0.0;
  long step_ = 0;
  EtdTable table_heat_;  // lambda = -|k|^2 (n diffusion and Stokes share it)
  EtdTable table_c_;     // lambda = -(|k|^2 + 1)
  double last_speed_sum_ = 0.0;
};

// Per-sample rows of a nonlinear run. n_lp uses the monitor's p, u_theta_l2
// its theta, exactly as in the linear diagnostics.
struct SimSeries {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> min_n;
  std::vector<double> n_linf;
  std::vector<double> n_lp;
  std::vector<double> c_w1inf;
  std::vector<double> u_theta_l2;
  std::size_t size() const { return times.size(); }
};

struct SimEvent {
  enum class Kind { PositivityUndershoot, BlowupSuspected, CflCollapse };
  double t;
  Kind kind;
  std::string detail;
};

const char* sim_event_kind_name(SimEvent::Kind k);

// Centered-difference audit of the L^p energy inequality
//   d/dt int n^p + (2(p-1)/p) int |grad n^{p/2}|^2
//     <= (p(p-1) K_F^2 / 2) int n^p |grad c|^{2-2alpha}
// evaluated on consecutive recorded states. Interior sample times only.
struct LpInequalityPoint {
  double t;
  double ddt_lhs;    // centered d/dt of int n^p
  double grad_lhs;   // (2(p-1)/p) int |grad n^{p/2}|^2
  double rhs;        // (p(p-1) K_F^2/2) int n^p |grad c|^{2-2alpha}
  double residual;   // rhs - (ddt_lhs + grad_lhs)
};

std::vector<LpInequalityPoint> check_lp_inequality(Transform& tf,
                                                   const std::vector<KSSState>& window, double p,
                                                   const FluxLimiter& limiter);

// Fraction of points whose residual dips below -slack_frac * |rhs|.
double lp_inequality_violation_fraction(const std::vector<LpInequalityPoint>& pts,
                                        double slack_frac);

enum class BlowupVerdict { NoBlowup, BlowupSuspected };

struct BlowupCriterion {
  double growth_factor = 10.0;
  double dt_floor = 0.0;
  // Last-quarter log-slope must exceed the first-quarter one by more than
  // this to count as accelerating; 0 makes exactly-geometric growth qualify.
  double slope_tolerance = 0.0;
};

// Inspects the recorded ||n||_inf history (and the current adaptive dt, when
// given) for the extensibility-criterion signature: strong growth that is not
// decelerating, or a collapsing time step.
BlowupVerdict detect_blowup(const std::vector<double>& times, const std::vector<double>& n_linf,
                            const BlowupCriterion& crit,
                            double current_dt = std::numeric_limits<double>::infinity());

struct SimControls {
  double cfl_safety = 0.8;
  int output_every = 10;
  double dt_floor_frac = 1e-9;  // dt floor as a fraction of T
  BlowupCriterion blowup;
  double undershoot_tol = 1e-6;  // of ||n||_inf, raises PositivityUndershoot
};

struct RunReport {
  bool completed = false;
  std::string failure;  // empty unless the run stopped early
  SimSeries series;
  std::vector<SimEvent> events;
  std::vector<LpInequalityPoint> inequality;  // audited at the sample cadence
  KSSState final_state;
  double sol_residual_max = 0.0;
  double mass_drift_rel = 0.0;  // max |mass - mass0| / mass0 over samples
};

// Advances to time T with adaptive dt (halve on CFL refusal, grow 1.1x when
// comfortably inside the bound) and records the monitor quantities every
// output_every accepted steps. Stops early on BlowupSuspected or CflCollapse,
// with the event recorded.
RunReport run_simulation(Transform& tf, const KSSParams& params, double T, double dt,
                         const EstimateSpec& monitor, const SimControls& ctl = {});

// run_series.csv / run_inequality.csv / run_events.csv under out_dir.
void write_run_csv(const RunReport& report, const std::string& out_dir);

}  // namespace kss
