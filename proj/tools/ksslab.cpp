#include <CLI11.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "kss/checkpoint.hpp"
#include "kss/config.hpp"
#include "kss/csv.hpp"
#include "kss/errors.hpp"
#include "kss/forcing.hpp"
#include "kss/kernels.hpp"
#include "kss/kss_sim.hpp"
#include "kss/linear_probe.hpp"
#include "kss/norms.hpp"
#include "kss/radial.hpp"
#include "kss/spectral.hpp"
#include "kss/transform.hpp"

namespace fs = std::filesystem;
using namespace kss;

namespace {

// Exit codes: 0 clean, 2 config error, 3 numerical abort, 4 blow-up flag,
// 5 I/O error. A blow-up flag inside sweep-alpha is the expected outcome of
// the experiment and therefore exits 0; the code 4 is reserved for single
// runs that stop on the flag.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalAbort = 3;
constexpr int kBlowupFlag = 4;
constexpr int kIoError = 5;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int threads = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "experiment description file (defaults when omitted)");
  sub->add_option("--out", o.out_dir, "output directory (overrides output.dir)");
  sub->add_option("--threads", o.threads, "worker threads for sweep members")
      ->check(CLI::PositiveNumber);
  sub->add_option("--override", o.overrides, "key=value applied on top of the config (repeatable)");
}

// Loads, reconciles the mode with the subcommand, applies --out, then runs
// the document through one emit/parse cycle so every validation sees the
// final mode. The canonical text of the result is what config.ini records.
ExperimentConfig resolve_config(const CommonOpts& o, RunMode mode) {
  ExperimentConfig cfg = o.config_path.empty() ? parse_config("", o.overrides)
                                               : load_config(o.config_path, o.overrides);
  if (cfg.mode_explicit && cfg.mode != mode)
    throw param_error(std::string("mode = ") + run_mode_name(cfg.mode) +
                      " in the config does not match the '" + run_mode_name(mode) +
                      "' subcommand");
  cfg.mode = mode;
  if (!o.out_dir.empty()) cfg.output.dir = o.out_dir;
  return parse_config(emit_config(cfg));
}

FluxLimiter limiter_of(const ExperimentConfig& cfg) {
  FluxLimiter lim;
  lim.K_F = cfg.params.K_F;
  lim.alpha = cfg.params.alpha;
  lim.lower_const = cfg.params.lower_const;
  return lim;
}

RadialControls radial_controls_of(const ExperimentConfig& cfg) {
  RadialControls ctl;
  ctl.cfl_safety = cfg.numerics.cfl_safety;
  ctl.output_every = cfg.numerics.output_every;
  ctl.blowup = {cfg.numerics.growth_factor, cfg.radial.dt_floor, cfg.numerics.slope_tolerance};
  ctl.dt_max_factor = cfg.radial.dt_max_factor;
  return ctl;
}

// Constant background plus a fixed-mass Gaussian bump (mass 0 skips the bump).
ScalarField bumped_field(const GridPtr& g, double background, double mass, double width,
                         double amplitude) {
  ScalarField f(g, background);
  if (mass > 0.0) {
    ForcingSpec s;
    s.family = ForcingSpec::Family::StaticGaussian;
    s.amplitude = amplitude;
    s.width = width;
    s.mass = mass;
    const ScalarField bump = eval_forcing(s, g, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) f.v[i] += bump.v[i];
  }
  return f;
}

std::string num(double x) {
  std::ostringstream o;
  o << x;
  return o.str();
}

struct RunSummary {
  int code = kOk;
  std::vector<std::string> notes;
  std::vector<std::string> artifacts;
};

void write_manifest(const std::string& out, const std::string& command, int code,
                    const std::vector<std::string>& notes,
                    const std::vector<std::string>& artifacts) {
  const std::string path = out + "/manifest.txt";
  std::ofstream m(path, std::ios::binary);
  if (!m) throw io_error("cannot write '" + path + "'");
  m << "command = " << command << "\n";
  m << "exit = " << code << "\n";
  m << "artifact = config.ini\n";
  m << "artifact = manifest.txt\n";
  for (const auto& a : artifacts) m << "artifact = " << a << "\n";
  for (const auto& n : notes) m << "note = " << n << "\n";
  m.flush();
  if (!m) throw io_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------- simulate --

RunSummary cmd_simulate(const ExperimentConfig& cfg, const std::string& out, int) {
  GridPtr g = Grid::make(cfg.grid.dim, cfg.grid.points, cfg.grid.lengths);
  Transform tf(g);

  KSSParams p;
  p.grid = g;
  p.limiter = limiter_of(cfg);
  p.phi = make_potential(g, cfg.params.g);
  p.n0 = bumped_field(g, cfg.initial.n_background, cfg.initial.n_mass, cfg.initial.n_width,
                      cfg.initial.n_amplitude);
  p.c0 = bumped_field(g, cfg.initial.c_background, cfg.initial.c_mass, cfg.initial.c_width,
                      cfg.initial.c_amplitude);
  p.u0 = VectorField(g, 0.0);
  p.fluid_free = cfg.params.fluid_free;

  SimControls ctl;
  ctl.cfl_safety = cfg.numerics.cfl_safety;
  ctl.output_every = cfg.numerics.output_every;
  ctl.dt_floor_frac = cfg.numerics.dt_floor_frac;
  ctl.blowup = {cfg.numerics.growth_factor, 0.0, cfg.numerics.slope_tolerance};
  ctl.undershoot_tol = cfg.numerics.undershoot_tol;

  const RunReport rep = run_simulation(tf, p, cfg.numerics.T, cfg.numerics.dt, cfg.estimate, ctl);
  write_run_csv(rep, out);

  RunSummary s;
  s.artifacts = {"run_series.csv", "run_inequality.csv", "run_events.csv"};
  if (cfg.output.checkpoint) {
    write_checkpoint(out + "/final_state.kss", rep.final_state);
    s.artifacts.push_back("final_state.kss");
  }
  s.notes.push_back("reached t = " + num(rep.final_state.t) + " of T = " + num(cfg.numerics.T) +
                    " (" + std::to_string(rep.series.size()) + " samples)");
  s.notes.push_back("relative mass drift = " + num(rep.mass_drift_rel));
  s.notes.push_back("max solenoidality residual = " + num(rep.sol_residual_max));
  if (cfg.params.alpha <= 1.0)
    s.notes.push_back("inequality points audited = " + std::to_string(rep.inequality.size()));
  else
    s.notes.push_back("inequality audit skipped: the estimate assumes alpha <= 1");
  for (const auto& e : rep.events)
    s.notes.push_back(std::string("event: ") + sim_event_kind_name(e.kind) + " at t = " +
                      num(e.t) + " — " + e.detail);
  if (!rep.completed) {
    s.notes.push_back("stopped early: " + rep.failure);
    bool blowup = false;
    for (const auto& e : rep.events)
      if (e.kind == SimEvent::Kind::BlowupSuspected) blowup = true;
    s.code = blowup ? kBlowupFlag : kNumericalAbort;
  }
  return s;
}

// ------------------------------------------------------------ probe-linear --

RunSummary cmd_probe_linear(const ExperimentConfig& cfg, const std::string& out, int threads) {
  LinearProbeParams base;
  base.grid = Grid::make(cfg.grid.dim, cfg.grid.points, cfg.grid.lengths);
  base.forcing = cfg.forcing.spec;
  base.estimate = cfg.estimate;
  base.init_K = cfg.forcing.init_K;
  base.potential_g = cfg.params.g;
  base.T = cfg.numerics.T;
  base.dt = cfg.numerics.dt;
  base.output_every = cfg.numerics.output_every;
  base.cfl_safety = cfg.numerics.cfl_safety;

  const SweepReport rep = probe_estimate(base, cfg.sweep.target, cfg.sweep.amplitudes, threads);
  write_sweep_csv(rep, out);

  RunSummary s;
  s.artifacts = {"probe_series.csv", "probe_runs.csv", "probe_summary.csv"};
  std::ostringstream line;
  line << "target " << probe_target_name(rep.target) << ": fitted slope = " << rep.fit.slope
       << " against ceiling = " << rep.ceiling << " (r^2 = " << rep.fit.r2 << ", "
       << rep.fit.decades << " decades of M_p, " << rep.survivors << "/" << rep.runs.size()
       << " runs in fit)";
  s.notes.push_back(line.str());
  for (const auto& r : rep.runs)
    if (!r.completed)
      s.notes.push_back("amplitude " + num(r.amplitude) + ": stopped at step " +
                        std::to_string(r.abort_step) + " — " + r.failure);
  return s;
}

// ------------------------------------------------------------- sweep-alpha --

RunSummary cmd_sweep_alpha(const ExperimentConfig& cfg, const std::string& out, int threads) {
  DichotomyParams dp;
  dp.R = cfg.radial.R;
  dp.cells = cfg.radial.cells;
  dp.dim = cfg.radial.dim;
  dp.mass = cfg.radial.mass;
  dp.concentration = cfg.radial.concentration;
  dp.T = cfg.numerics.T;
  dp.dt = cfg.numerics.dt;
  dp.limiter = limiter_of(cfg);
  dp.controls = radial_controls_of(cfg);

  const std::vector<DichotomyRow> rows = dichotomy_experiment(cfg.sweep.alphas, dp, threads);
  write_dichotomy_csv(rows, out);

  RunSummary s;
  s.artifacts = {"dichotomy.csv"};
  for (const auto& r : rows) {
    std::string line = "alpha " + num(r.alpha) + ": " + dichotomy_verdict_name(r.verdict) +
                       " (max |n| = " + num(r.max_n_inf);
    if (r.verdict == DichotomyVerdict::BlowupSuspected)
      line += ", flagged at t = " + num(r.flag_time);
    else
      line += ", reached t = " + num(r.end_time);
    line += ")";
    if (!r.note.empty()) line += " — " + r.note;
    s.notes.push_back(line);
    if (r.verdict == DichotomyVerdict::Inconclusive) s.code = kNumericalAbort;
  }
  return s;
}

// ------------------------------------------------------------------ radial --

RunSummary cmd_radial(const ExperimentConfig& cfg, const std::string& out, int) {
  const RadialGrid g = RadialGrid::make(cfg.radial.R, cfg.radial.cells, cfg.radial.dim);
  const std::vector<double> n0 =
      radial_bump(g, cfg.radial.mass, cfg.radial.R / cfg.radial.concentration);
  const RadialRunReport rep =
      run_radial(g, n0, limiter_of(cfg), cfg.numerics.T, cfg.numerics.dt, radial_controls_of(cfg));

  {
    CsvWriter w(out + "/radial_series.csv",
                "radial series v1: shell-averaged density monitors at the sample cadence");
    w.header({"time", "mass", "n_inf", "min_n"});
    for (std::size_t i = 0; i < rep.series.size(); ++i)
      w.row({rep.series.times[i], rep.series.mass[i], rep.series.n_inf[i], rep.series.min_n[i]});
    w.close();
  }
  {
    CsvWriter w(out + "/radial_final.csv",
                "radial final v1: cell-centered density and signal at the last reached time");
    w.header({"r", "n", "c"});
    for (int i = 0; i < g.cells; ++i)
      w.row({g.centers[i], rep.final_state.n[i], rep.final_state.c[i]});
    w.close();
  }

  RunSummary s;
  s.artifacts = {"radial_series.csv", "radial_final.csv"};
  s.notes.push_back("reached t = " + num(rep.final_state.t) + " of T = " + num(cfg.numerics.T) +
                    " (" + std::to_string(rep.series.size()) + " samples)");
  s.notes.push_back("max |n| over the run = " + num(rep.max_n_inf));
  if (!rep.failure.empty()) {
    s.notes.push_back("stopped early: " + rep.failure);
    s.code = kNumericalAbort;
  } else if (rep.verdict == BlowupVerdict::BlowupSuspected) {
    s.notes.push_back("blow-up suspected, flagged at t = " + num(rep.flag_time));
    s.code = kBlowupFlag;
  }
  return s;
}

// ------------------------------------------------------------------ verify --

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error("cannot read '" + p.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_true(bool ok, const std::string& what) {
  if (!ok) throw contract_error(what);
}

void check_close(double a, double b, double tol, const std::string& what) {
  if (!(std::fabs(a - b) <= tol))
    throw contract_error(what + ": |" + num(a) + " - " + num(b) + "| > " + num(tol));
}

void verify_kernel_tables() {
  const std::size_t n = 10007;  // odd length exercises the vector tail paths
  std::vector<double> a(n), b(n), dst_active(n), dst_scalar(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::sin(0.37 * static_cast<double>(i)) + 0.1;
    b[i] = std::cos(0.218 * static_cast<double>(i));
    dst_active[i] = dst_scalar[i] = 0.25;
  }
  const auto& act = kernels::active();
  const auto& ref = kernels::scalar_ops();
  check_close(act.sum(a.data(), n), ref.sum(a.data(), n), 1e-11 * n, "sum");
  check_close(act.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-11 * n, "dot");
  check_close(act.sum_abs_pow_int(a.data(), 3, n), ref.sum_abs_pow_int(a.data(), 3, n), 1e-11 * n,
              "sum_abs_pow_int");
  check_true(act.max_abs(a.data(), n) == ref.max_abs(a.data(), n), "max_abs differs");
  check_true(act.min_val(a.data(), n) == ref.min_val(a.data(), n), "min_val differs");
  act.mul_add(dst_active.data(), a.data(), b.data(), n);
  ref.mul_add(dst_scalar.data(), a.data(), b.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    check_close(dst_active[i], dst_scalar[i], 1e-14 * (1.0 + std::fabs(dst_scalar[i])),
                "mul_add[" + std::to_string(i) + "]");
}

void verify_projection_idempotent() {
  GridPtr g = Grid::make_cube(3, 16, 6.283185307179586);
  Transform tf(g);
  VectorField w(g, 0.0);
  const Grid& gr = *g;
  for (int ix = 0; ix < 16; ++ix)
    for (int iy = 0; iy < 16; ++iy)
      for (int iz = 0; iz < 16; ++iz) {
        const std::size_t i = gr.real_index(ix, iy, iz);
        const double x = gr.coord(0, ix), y = gr.coord(1, iy), z = gr.coord(2, iz);
        w.comp[0][i] = std::sin(x) * std::cos(y) + 0.3 * std::cos(2.0 * z);
        w.comp[1][i] = std::cos(x + z) - 0.2 * std::sin(y);
        w.comp[2][i] = std::sin(y) * std::sin(z) + 0.5;
      }
  const VectorField p1 = project_solenoidal(tf, w);
  const VectorField p2 = project_solenoidal(tf, p1);
  const double scale = max_abs(p1);
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < gr.nreal(); ++i)
      check_close(p2.comp[a][i], p1.comp[a][i], 1e-13 * scale, "projection changed its own image");
  check_true(divergence_linf(tf, p1) <= 1e-10 * scale, "projected field is not divergence free");
}

void verify_operator_composition() {
  GridPtr g = Grid::make_cube(2, 32, 6.283185307179586);
  Transform tf(g);
  ScalarField f(g, 0.0);
  const Grid& gr = *g;
  for (int ix = 0; ix < 32; ++ix)
    for (int iy = 0; iy < 32; ++iy) {
      const double x = gr.coord(0, ix), y = gr.coord(1, iy);
      f.v[gr.real_index(ix, iy)] = std::sin(x) * std::cos(2.0 * y) + 0.3 * std::sin(3.0 * x);
    }
  // Fractional powers compose additively; semigroups compose in time.
  const ScalarField two = apply_operator(
      tf, apply_operator(tf, f, SpectralOperator::heat_power(0.4)), SpectralOperator::heat_power(0.35));
  const ScalarField one = apply_operator(tf, f, SpectralOperator::heat_power(0.75));
  for (std::size_t i = 0; i < gr.nreal(); ++i)
    check_close(two.v[i], one.v[i], 1e-11 * (1.0 + std::fabs(one.v[i])),
                "B^0.35 B^0.4 differs from B^0.75");
  const ScalarField half = apply_operator(tf, apply_operator(tf, f, SpectralOperator::heat_semigroup(0.05)),
                                          SpectralOperator::heat_semigroup(0.05));
  const ScalarField full = apply_operator(tf, f, SpectralOperator::heat_semigroup(0.1));
  for (std::size_t i = 0; i < gr.nreal(); ++i)
    check_close(half.v[i], full.v[i], 1e-12 * (1.0 + std::fabs(full.v[i])),
                "semigroup composition in time");

  // The Stokes branch on an exactly solenoidal velocity.
  VectorField w(g, 0.0);
  for (int ix = 0; ix < 32; ++ix)
    for (int iy = 0; iy < 32; ++iy) {
      const std::size_t i = gr.real_index(ix, iy);
      const double x = gr.coord(0, ix), y = gr.coord(1, iy);
      w.comp[0][i] = std::sin(x) * std::cos(y);
      w.comp[1][i] = -std::cos(x) * std::sin(y);
    }
  const VectorField a2 = apply_operator(
      tf, apply_operator(tf, w, SpectralOperator::stokes_power(0.45)), SpectralOperator::stokes_power(0.3));
  const VectorField a1 = apply_operator(tf, w, SpectralOperator::stokes_power(0.75));
  for (int a = 0; a < 2; ++a)
    for (std::size_t i = 0; i < gr.nreal(); ++i)
      check_close(a2.comp[a][i], a1.comp[a][i], 1e-11 * (1.0 + std::fabs(a1.comp[a][i])),
                  "A^0.3 A^0.45 differs from A^0.75");
}

void verify_norm_identities() {
  GridPtr g = Grid::make_cube(2, 32, 6.283185307179586);
  Transform tf(g);
  const double V = g->volume();
  ScalarField f(g, 0.0);
  const Grid& gr = *g;
  for (int ix = 0; ix < 32; ++ix)
    for (int iy = 0; iy < 32; ++iy)
      f.v[gr.real_index(ix, iy)] = 2.0 + std::sin(gr.coord(0, ix));
  check_close(integral(f), 2.0 * V, 1e-12 * V, "integral of 2 + sin");
  check_close(lp_norm(f, 2.0), std::sqrt(4.5 * V), 1e-12 * std::sqrt(4.5 * V),
              "L2 norm of 2 + sin");
  check_close(max_abs(f), 3.0, 1e-13, "sup of 2 + sin");
  check_close(min_value(f), 1.0, 1e-13, "min of 2 + sin");
  // W^{1,inf} is the max of the two sup norms; exercise both branches.
  check_close(w1inf_norm(tf, f), 3.0, 1e-11, "W^{1,inf} norm, function branch");
  ScalarField hf(g, 0.0);
  for (int ix = 0; ix < 32; ++ix)
    for (int iy = 0; iy < 32; ++iy)
      hf.v[gr.real_index(ix, iy)] = 0.1 * std::sin(4.0 * gr.coord(0, ix));
  check_close(w1inf_norm(tf, hf), 0.4, 1e-12, "W^{1,inf} norm, gradient branch");

  VectorField w(g, 0.0);
  for (int ix = 0; ix < 32; ++ix)
    for (int iy = 0; iy < 32; ++iy) {
      const std::size_t i = gr.real_index(ix, iy);
      w.comp[0][i] = std::sin(gr.coord(0, ix));
      w.comp[1][i] = std::cos(gr.coord(0, ix));
    }
  check_close(lp_norm(w, 2.0), std::sqrt(V), 1e-12 * std::sqrt(V), "L2 norm of a unit frame");
}

void verify_radial_positivity() {
  for (int dim : {2, 3}) {
    const RadialGrid g = RadialGrid::make(1.0, 64, dim);
    const std::vector<double> n = radial_bump(g, 5.0, 1.0 / 6.0);
    const std::vector<double> c = solve_c_radial(g, n);
    for (double v : c)
      check_true(v > 0.0, "signal solve went nonpositive for a nonnegative source");
    const std::vector<double> flat(static_cast<std::size_t>(g.cells), 2.5);
    const std::vector<double> cf = solve_c_radial(g, flat);
    for (double v : cf) check_close(v, 2.5, 1e-12, "signal solve on constant data");
  }
}

void verify_config_round_trip() {
  const ExperimentConfig base;
  check_true(parse_config(emit_config(base)) == base, "defaults do not round-trip");
  ExperimentConfig c;
  c.mode = RunMode::SweepAlpha;
  c.grid.dim = 3;
  c.grid.points = {12, 16, 20};
  c.grid.lengths = {6.0, 4.0, 5.0};
  c.params.alpha = 0.3;
  c.params.lower_const = 0.125;
  c.numerics.dt = 2.5e-4;
  c.sweep.alphas = {0.3, 0.7};
  c.output.dir = "elsewhere";
  const std::string doc = emit_config(c);
  check_true(parse_config(doc) == c, "canonical emission does not reparse to itself");
  check_true(emit_config(parse_config(doc)) == doc, "canonical emission is not idempotent");
}

void verify_determinism() {
  const fs::path root = fs::temp_directory_path() / "ksslab_verify";
  const fs::path sim_a = root / "sim_a";
  const fs::path sim_b = root / "sim_b";
  fs::create_directories(sim_a);
  fs::create_directories(sim_b);
  try {
    GridPtr g = Grid::make_cube(2, 16, 6.283185307179586);
    KSSParams p;
    p.grid = g;
    p.phi = make_potential(g, 1.0);
    p.n0 = bumped_field(g, 1.0, 2.0, 0.8, 1.0);
    p.c0 = bumped_field(g, 0.5, 1.0, 0.9, 1.0);
    p.u0 = VectorField(g, 0.0);
    SimControls ctl;
    ctl.output_every = 1;
    for (const fs::path& dir : {sim_a, sim_b}) {
      Transform tf(g);
      const RunReport rep = run_simulation(tf, p, 0.05, 1e-3, EstimateSpec{}, ctl);
      write_run_csv(rep, dir.string());
    }
    for (const char* name : {"run_series.csv", "run_inequality.csv", "run_events.csv"})
      check_true(slurp(sim_a / name) == slurp(sim_b / name),
                 std::string("repeated runs differ in ") + name);

    DichotomyParams dp;
    dp.cells = 48;
    dp.mass = 2.0;
    dp.concentration = 2.0;
    dp.T = 0.05;
    dp.dt = 1e-3;
    const std::vector<double> alphas{0.5, 0.9};
    write_dichotomy_csv(dichotomy_experiment(alphas, dp, 2), sim_a.string());
    write_dichotomy_csv(dichotomy_experiment(alphas, dp, 1), sim_b.string());
    check_true(slurp(sim_a / "dichotomy.csv") == slurp(sim_b / "dichotomy.csv"),
               "alpha sweep depends on the thread count");
  } catch (...) {
    fs::remove_all(root);
    throw;
  }
  fs::remove_all(root);
}

void verify_checkpoint_round_trip() {
  const fs::path path = fs::temp_directory_path() / "ksslab_verify_state.kss";
  GridPtr g = Grid::make(2, {12, 8, 1}, {6.283185307179586, 4.0, 1.0});
  KSSState st;
  st.t = 0.625;
  st.n = ScalarField(g, 0.0);
  st.c = ScalarField(g, 0.0);
  st.u = VectorField(g, 0.0);
  for (int ix = 0; ix < 12; ++ix)
    for (int iy = 0; iy < 8; ++iy) {
      const std::size_t i = g->real_index(ix, iy);
      const double x = g->coord(0, ix), y = g->coord(1, iy);
      st.n.v[i] = 1.0 + 0.5 * std::sin(x) * std::cos(y);
      st.c.v[i] = 0.25 + 0.1 * std::cos(x);
      st.u.comp[0][i] = 0.01 * std::sin(y);
      st.u.comp[1][i] = -0.02 * std::cos(x);
    }
  try {
    write_checkpoint(path.string(), st);
    const KSSState back = read_checkpoint(path.string(), g);
    check_true(back.t == st.t, "snapshot time changed");
    check_true(back.n.v == st.n.v && back.c.v == st.c.v && back.u.comp[0] == st.u.comp[0] &&
                   back.u.comp[1] == st.u.comp[1],
               "snapshot payload changed");
  } catch (...) {
    fs::remove(path);
    throw;
  }
  fs::remove(path);
}

RunSummary cmd_verify() {
  struct Check {
    const char* name;
    void (*fn)();
  };
  const Check checks[] = {
      {"kernel tables agree (scalar vs active)", verify_kernel_tables},
      {"solenoidal projection is idempotent", verify_projection_idempotent},
      {"fractional powers and semigroups compose", verify_operator_composition},
      {"norms match closed forms", verify_norm_identities},
      {"radial signal solve preserves positivity", verify_radial_positivity},
      {"config canonical form round-trips", verify_config_round_trip},
      {"repeated runs are byte-identical", verify_determinism},
      {"state snapshots round-trip bitwise", verify_checkpoint_round_trip},
  };
  RunSummary s;
  int passed = 0;
  for (const Check& c : checks) {
    std::string detail;
    try {
      c.fn();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (detail.empty()) {
      ++passed;
      s.notes.push_back(std::string("pass  ") + c.name);
    } else {
      s.notes.push_back(std::string("FAIL  ") + c.name + " — " + detail);
    }
  }
  s.notes.push_back(std::to_string(passed) + "/" + std::to_string(std::size(checks)) +
                    " checks passed");
  if (passed != static_cast<int>(std::size(checks))) s.code = kNumericalAbort;
  return s;
}

int dispatch(RunMode mode, const CommonOpts& opts) {
  if (mode == RunMode::Verify) {
    const RunSummary s = cmd_verify();
    for (const auto& n : s.notes) std::cout << n << "\n";
    return s.code;
  }

  const ExperimentConfig cfg = resolve_config(opts, mode);
  const std::string out = cfg.output.dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create output directory '" + out + "': " + ec.message());
  {
    const std::string path = out + "/config.ini";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write '" + path + "'");
    f << emit_config(cfg);
    f.flush();
    if (!f) throw io_error("failed writing '" + path + "'");
  }

  RunSummary s;
  try {
    switch (mode) {
      case RunMode::Simulate:
        s = cmd_simulate(cfg, out, opts.threads);
        break;
      case RunMode::ProbeLinear:
        s = cmd_probe_linear(cfg, out, opts.threads);
        break;
      case RunMode::SweepAlpha:
        s = cmd_sweep_alpha(cfg, out, opts.threads);
        break;
      case RunMode::Radial:
        s = cmd_radial(cfg, out, opts.threads);
        break;
      case RunMode::Verify:
        break;  // handled above
    }
  } catch (const std::exception& e) {
    // Log the failure to the manifest before letting main translate it.
    write_manifest(out, run_mode_name(mode), -1, {std::string("error: ") + e.what()}, {});
    throw;
  }

  write_manifest(out, run_mode_name(mode), s.code, s.notes, s.artifacts);
  for (const auto& n : s.notes) std::cout << n << "\n";
  std::cout << "output: " << out << "/ (config.ini";
  for (const auto& a : s.artifacts) std::cout << ", " << a;
  std::cout << ", manifest.txt)\n";
  return s.code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flux-limited chemotaxis-fluid lab: simulation, probes and sweeps"};
  app.require_subcommand(1);

  struct Sub {
    RunMode mode;
    CLI::App* cli;
    CommonOpts opts;
  };
  Sub subs[] = {
      {RunMode::Simulate,
       app.add_subcommand("simulate", "integrate the nonlinear system and record monitors"),
       {}},
      {RunMode::ProbeLinear,
       app.add_subcommand("probe-linear", "amplitude sweep of the linear response exponents"),
       {}},
      {RunMode::SweepAlpha,
       app.add_subcommand("sweep-alpha", "radial blow-up dichotomy across limiter exponents"),
       {}},
      {RunMode::Radial, app.add_subcommand("radial", "single radially symmetric run"), {}},
      {RunMode::Verify, app.add_subcommand("verify", "run the cross-module invariant suite"), {}},
  };
  for (Sub& s : subs) add_common(s.cli, s.opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ksslab: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    for (const Sub& s : subs)
      if (s.cli->parsed()) return dispatch(s.mode, s.opts);
    return kConfigError;  // unreachable with require_subcommand(1)
  } catch (const io_error& e) {
    std::cerr << "ksslab: " << e.what() << "\n";
    return kIoError;
  } catch (const param_error& e) {
    std::cerr << "ksslab: " << e.what() << "\n";
    return kConfigError;
  } catch (const structural_error& e) {
    std::cerr << "ksslab: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "ksslab: " << e.what() << "\n";
    return kNumericalAbort;
  }
}
