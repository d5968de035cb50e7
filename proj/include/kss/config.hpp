#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kss/diagnostics.hpp"
#include "kss/forcing.hpp"

namespace kss {

// What an experiment run does; selected by the CLI subcommand or the
// sectionless `mode` key of the config document.
enum class RunMode { Simulate, ProbeLinear, SweepAlpha, Radial, Verify };

const char* run_mode_name(RunMode m);
RunMode run_mode_from_name(const std::string& name);

// Periodic box. For dim = 2 the third axis is pinned to one point of length 1.
struct GridConfig {
  int dim = 2;
  std::array<int, 3> points = {64, 64, 1};
  std::array<double, 3> lengths = {6.2831853071795862, 6.2831853071795862, 1.0};
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Physics of the nonlinear system: flux limiter and gravitational potential.
struct ParamsConfig {
  double K_F = 1.0;
  double alpha = 0.5;
  std::optional<double> lower_const;  // enforce F >= lower_const when set
  double g = 1.0;                     // max |grad Phi| of the potential
  bool fluid_free = false;
  friend bool operator==(const ParamsConfig&, const ParamsConfig&) = default;
};

// Initial data for the nonlinear run: constant backgrounds plus fixed-mass
// Gaussian bumps (amplitude concentrates a bump without changing its mass);
// the fluid starts at rest.
struct InitialConfig {
  double n_background = 1.0;
  double n_mass = 6.0;
  double n_width = 0.5;
  double n_amplitude = 1.0;
  double c_background = 0.5;
  double c_mass = 3.0;
  double c_width = 0.6;
  double c_amplitude = 1.0;
  friend bool operator==(const InitialConfig&, const InitialConfig&) = default;
};

// Source family driving the linear probe, plus the bound K imposed on its
// initial data. The default bump carries enough mass that M_p = 1 + sup ||f||_p
// clears its floor of 1 across the whole default amplitude ladder.
struct ForcingConfig {
  ForcingSpec spec{.family = ForcingSpec::Family::StaticGaussian,
                   .amplitude = 1.0,
                   .width = 1.5,
                   .speed = {0.0, 0.0, 0.0},
                   .mass = 20.0,
                   .center_frac = {0.5, 0.5, 0.5}};
  double init_K = 10.0;
  friend bool operator==(const ForcingConfig&, const ForcingConfig&) = default;
};

// Time stepping and run-monitor thresholds shared by every mode.
struct NumericsConfig {
  double dt = 1e-3;
  double T = 10.0;
  int output_every = 10;
  double cfl_safety = 0.8;
  double dt_floor_frac = 1e-9;    // adaptive floor as a fraction of T
  double growth_factor = 10.0;    // ||n||_inf growth that arouses suspicion
  double slope_tolerance = 0.0;   // log-slope slack of the blow-up detector
  double undershoot_tol = 1e-6;   // relative negative excursion worth an event
  friend bool operator==(const NumericsConfig&, const NumericsConfig&) = default;
};

// Amplitude ladder (probe-linear), limiter-exponent ladder (sweep-alpha) and
// the response functional the probe fit is compared against.
struct SweepConfig {
  std::vector<double> amplitudes = {0.25, 1.0, 4.0, 8.0, 32.0};
  std::vector<double> alphas = {0.3, 0.45, 0.55, 0.8};
  ProbeTarget target = ProbeTarget::ZW1inf;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

// Radially symmetric runs on the ball of radius R. Defaults reproduce the
// shipped dichotomy experiment: the bump concentration sits just above the
// bisection boundary where the alpha = 0.3 run flags and alpha = 0.8 decays.
struct RadialConfig {
  double R = 1.0;
  int cells = 256;
  int dim = 3;
  double mass = 50.0;
  double concentration = 5.0;  // bump width = R / concentration
  double dt_floor = 1e-10;     // collapsing-step channel of the blow-up flag
  double dt_max_factor = 1.0;  // cap on adaptive dt growth over the initial dt
  friend bool operator==(const RadialConfig&, const RadialConfig&) = default;
};

struct OutputConfig {
  std::string dir = "runs";
  bool checkpoint = true;  // write the final state snapshot after a simulate run
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

// Fully resolved experiment description. parse_config fills defaults and
// validates everything up front, so holders of an ExperimentConfig never need
// to re-check ranges.
struct ExperimentConfig {
  RunMode mode = RunMode::Simulate;
  bool mode_explicit = false;  // whether the document or an override set mode
  GridConfig grid;
  ParamsConfig params;
  InitialConfig initial;
  ForcingConfig forcing;
  NumericsConfig numerics;
  EstimateSpec estimate;
  SweepConfig sweep;
  RadialConfig radial;
  OutputConfig output;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.mode == b.mode && a.grid == b.grid && a.params == b.params &&
           a.initial == b.initial && a.forcing == b.forcing && a.numerics == b.numerics &&
           a.estimate == b.estimate && a.sweep == b.sweep && a.radial == b.radial &&
           a.output == b.output;
  }
};

// Parses an INI-style document: `[section]` headers over `key = value` lines,
// `#`/`;` comments, the single sectionless key `mode`. Overrides are
// `section.key=value` strings (plain `mode=value` for the mode) applied on
// top of the document. Unknown sections or keys, duplicate keys, malformed
// values and invariant violations all throw param_error naming the key path.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {});

// parse_config over the contents of a file; io_error when unreadable.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

// Canonical document: every key in a fixed order, floats at 17 significant
// digits, lists comma-joined. parse_config(emit_config(c)) reproduces c
// exactly, and emission of the reparse is byte-identical.
std::string emit_config(const ExperimentConfig& c);

}  // namespace kss
