#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kss/kss_sim.hpp"  // FluxLimiter, BlowupCriterion, detect_blowup

namespace kss {

// Uniform finite-volume mesh on the radius [0, R] of a ball. Cell i spans
// [faces[i], faces[i+1]]; unknowns live at the cell centers. face_area is
// the sphere surface through the face (zero at r = 0, which encodes the
// symmetry condition for free), shell_volume the exact integral of the
// surface element over the cell. dim generalizes the Laplacian stencil to
// N-dimensional balls; only dim = 3 is exercised beyond smoke level.
struct RadialGrid {
  double R = 1.0;
  int cells = 0;
  int dim = 3;
  std::vector<double> faces;         // cells+1, strictly increasing, 0 .. R
  std::vector<double> centers;       // cells
  std::vector<double> face_area;     // cells+1
  std::vector<double> shell_volume;  // cells

  static RadialGrid make(double R, int cells, int dim = 3);
  double spacing() const { return R / cells; }
};

struct RadialState {
  double t = 0.0;
  std::vector<double> n;
  std::vector<double> c;
};

// Total mass sum(n_i * shell_volume_i).
double radial_mass(const RadialGrid& g, const std::vector<double>& n);

// Solves the elliptic signal equation c'' + ((dim-1)/r) c' - c + n = 0 with
// c'(0) = c'(R) = 0 by conservative second-order finite volumes and
// tridiagonal elimination. The discrete operator is an M-matrix, so n >= 0
// gives c >= 0 and min n <= c <= max n. Scaled residual of the returned
// solution is checked against 1e-12 (a violation cannot occur for -Delta+1
// and is reported as a contract error).
std::vector<double> solve_c_radial(const RadialGrid& g, const std::vector<double>& n);

// One first-order-in-time step of the fluid-free parabolic-elliptic system:
// the signal is re-solved from n, the chemotactic face flux
// n_upwind * F(c_r^2) * c_r is integrated explicitly, diffusion of n
// implicitly (backward Euler, tridiagonal). Face fluxes vanish at r = 0 and
// r = R, so the discrete mass telescopes exactly. Throws cfl_error (state
// unaffected, suggested dt attached) when dt exceeds the positivity bound
// of the explicit advection, numerical_abort on non-finite values.
RadialState step_radial(const RadialGrid& g, const RadialState& state, const FluxLimiter& limiter,
                        double dt, double cfl_safety = 0.9);

// Gaussian-like bump exp(-(r/width)^2) scaled so the discrete mass is
// exactly `mass`.
std::vector<double> radial_bump(const RadialGrid& g, double mass, double width);

struct RadialControls {
  double cfl_safety = 0.9;
  int output_every = 10;
  BlowupCriterion blowup{10.0, 1e-10, 0.0};
  double dt_max_factor = 1.0;  // cap on dt growth relative to the initial dt
};

struct RadialSeries {
  std::vector<double> times, mass, n_inf, min_n;
  std::size_t size() const { return times.size(); }
};

struct RadialRunReport {
  bool completed = false;
  BlowupVerdict verdict = BlowupVerdict::NoBlowup;
  std::string failure;     // nonempty when the run ended on an error
  double flag_time = 0.0;  // time of the blow-up flag, when raised
  double max_n_inf = 0.0;
  RadialSeries series;
  RadialState final_state;
};

// Adaptive-dt driver (halve on CFL refusal, grow 1.1x when comfortably
// admissible): advances to T or to the first blow-up flag, whichever is
// first.
RadialRunReport run_radial(const RadialGrid& g, const std::vector<double>& n0,
                           const FluxLimiter& limiter, double T, double dt,
                           const RadialControls& ctl = {});

// The alpha sweep across the blow-up/boundedness dichotomy. Each alpha runs
// the same initial bump (total mass `mass`, width R/concentration) on its
// own mesh; failures of individual runs are recorded as Inconclusive rows
// rather than aborting the sweep.
enum class DichotomyVerdict { NoBlowup, BlowupSuspected, Inconclusive };
const char* dichotomy_verdict_name(DichotomyVerdict v);

struct DichotomyParams {
  double R = 1.0;
  int cells = 256;
  int dim = 3;
  double mass = 1.0;
  double concentration = 8.0;  // bump width = R / concentration
  double T = 10.0;
  double dt = 1e-4;
  FluxLimiter limiter;  // alpha is overridden per run
  RadialControls controls;
};

struct DichotomyRow {
  double alpha = 0.0;
  DichotomyVerdict verdict = DichotomyVerdict::Inconclusive;
  double max_n_inf = 0.0;
  double flag_time = 0.0;  // 0 when no flag was raised
  double end_time = 0.0;
  std::string note;
};

std::vector<DichotomyRow> dichotomy_experiment(const std::vector<double>& alphas,
                                               const DichotomyParams& params, int threads = 1);

// dichotomy.csv under out_dir: one row per alpha.
void write_dichotomy_csv(const std::vector<DichotomyRow>& rows, const std::string& out_dir);

}  // namespace kss
