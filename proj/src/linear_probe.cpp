#include "kss/linear_probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "kss/csv.hpp"
#include "kss/errors.hpp"
#include "kss/kernels.hpp"
#include "kss/spectral.hpp"

namespace kss {

namespace {

// Beginning-of-step advective limit: dt * sum_a max|v_a| / h_a <= safety.
std::string cfl_message(double dt, double speed_sum, double safety) {
  std::ostringstream os;
  os << "advective limit exceeded: dt * sum_a max|v_a|/h_a = " << dt * speed_sum << " > " << safety;
  return os.str();
}

}  // namespace

LinearStepper::LinearStepper(Transform& tf, ForcingSpec forcing, double potential_g, double cfl_safety)
    : tf_(tf),
      forcing_(std::move(forcing)),
      cfl_safety_(cfl_safety),
      grad_phi_(tf.grid_ptr(), 0.0),
      z_(tf.grid_ptr()),
      v_(tf.grid_ptr()),
      f_phys_(tf.grid_ptr(), 0.0),
      tmp_phys_(tf.grid_ptr(), 0.0),
      adv_phys_(tf.grid_ptr(), 0.0),
      dz_phys_(tf.grid_ptr(), 0.0),
      vel_phys_(tf.grid_ptr(), 0.0),
      gz_spec_(tf.grid_ptr()),
      az_(tf.grid_ptr()),
      av_(tf.grid_ptr()) {
  if (!(cfl_safety_ > 0.0) || cfl_safety_ > 1.0)
    throw param_error("cfl safety factor must lie in (0, 1]");
  if (!std::isfinite(potential_g)) throw param_error("potential amplitude must be finite");
  // Amplitude 0 means "no forcing" and skips the forcing-shape validation.
  if (forcing_.amplitude != 0.0) validate_forcing(forcing_, tf_.grid());
  ScalarField phi = make_potential(tf_.grid_ptr(), potential_g);
  gradient(tf_, phi, grad_phi_);
  n1_.z = SpectralScalar(tf_.grid_ptr());
  n1_.v = SpectralVector(tf_.grid_ptr());
  n2_.z = SpectralScalar(tf_.grid_ptr());
  n2_.v = SpectralVector(tf_.grid_ptr());
}

void LinearStepper::initialize(const InitBounds& init) {
  if (!init.z0.grid || !init.v0.grid)
    throw param_error("initial data must be built before the stepper is initialized");
  require_same_grid(*init.z0.grid, tf_.grid(), "LinearStepper::initialize");
  require_same_grid(*init.v0.grid, tf_.grid(), "LinearStepper::initialize");
  const Grid& g = tf_.grid();
  tf_.forward(init.z0, z_);
  dealias_spec(g, z_.data());
  tf_.forward(init.v0, v_);
  double* comps[3] = {nullptr, nullptr, nullptr};
  for (int a = 0; a < g.dim(); ++a) {
    dealias_spec(g, v_.data(a));
    comps[a] = v_.data(a);
  }
  project_solenoidal_spec(g, comps);
  t_ = 0.0;
  step_ = 0;
  last_speed_sum_ = 0.0;
}

ScalarField LinearStepper::z_physical() {
  ScalarField out(tf_.grid_ptr(), 0.0);
  tf_.inverse(z_, out);
  return out;
}

VectorField LinearStepper::v_physical() {
  VectorField out(tf_.grid_ptr(), 0.0);
  tf_.inverse(v_, out);
  return out;
}

ScalarField LinearStepper::forcing_at(double t) const {
  if (forcing_.amplitude == 0.0) return ScalarField(tf_.grid_ptr(), 0.0);
  return eval_forcing(forcing_, tf_.grid_ptr(), t);
}

double LinearStepper::stable_dt() {
  if (last_speed_sum_ <= 0.0) return std::numeric_limits<double>::infinity();
  return cfl_safety_ / last_speed_sum_;
}

double LinearStepper::eval_nonlinear(const SpectralScalar& z, const SpectralVector& v, double t,
                                     Nonlin& out) {
  const Grid& g = tf_.grid();
  const auto& ops = kernels::active();
  const std::size_t nr = g.nreal();
  const std::size_t nm = g.nmodes();
  const int dim = g.dim();

  // Forcing snapshot; static families are evaluated once and reused.
  if (forcing_.amplitude == 0.0) {
    // f_phys_ already zero-filled at construction and never overwritten.
  } else if (forcing_.family == ForcingSpec::Family::MovingGaussian) {
    f_phys_ = eval_forcing(forcing_, tf_.grid_ptr(), t);
  } else if (!f_cached_) {
    f_phys_ = eval_forcing(forcing_, tf_.grid_ptr(), t);
    f_cached_ = true;
  }

  // Fluid forcing: Leray-projected, dealiased f * grad(Phi).
  double* comps[3] = {nullptr, nullptr, nullptr};
  for (int a = 0; a < dim; ++a) {
    ops.mul(tmp_phys_.data(), f_phys_.data(), grad_phi_.data(a), nr);
    tf_.forward(tmp_phys_.data(), out.v.data(a));
    dealias_spec(g, out.v.data(a));
    comps[a] = out.v.data(a);
  }
  project_solenoidal_spec(g, comps);

  // Signal source: f - v . grad z, formed in physical space then dealiased.
  std::fill(adv_phys_.v.begin(), adv_phys_.v.end(), 0.0);
  double speed_sum = 0.0;
  for (int a = 0; a < dim; ++a) {
    ops.mode_grad(gz_spec_.data(), z.data(), g.kgrad(a), nm);
    tf_.inverse(gz_spec_.data(), dz_phys_.data());
    tf_.inverse(v.data(a), vel_phys_.data());
    speed_sum += ops.max_abs(vel_phys_.data(), nr) / g.spacing(a);
    ops.mul_add(adv_phys_.data(), vel_phys_.data(), dz_phys_.data(), nr);
  }
  ops.sub(tmp_phys_.data(), f_phys_.data(), adv_phys_.data(), nr);
  tf_.forward(tmp_phys_.data(), out.z.data());
  dealias_spec(g, out.z.data());
  return speed_sum;
}

void LinearStepper::ensure_tables(double dt) {
  if (table_z_.dt == dt && !table_z_.E.empty()) return;
  const Grid& g = tf_.grid();
  const std::size_t nm = g.nmodes();
  const double* k2 = g.k2();
  std::vector<double> lambda(nm);
  for (std::size_t i = 0; i < nm; ++i) lambda[i] = -(k2[i] + 1.0);
  table_z_ = make_etd_table(lambda.data(), nm, dt);
  for (std::size_t i = 0; i < nm; ++i) lambda[i] = -k2[i];
  table_v_ = make_etd_table(lambda.data(), nm, dt);
}

void LinearStepper::step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw param_error("time step must be positive and finite");
  ensure_tables(dt);
  const Grid& g = tf_.grid();
  const auto& ops = kernels::active();
  const std::size_t nm = g.nmodes();
  const std::size_t n2m = 2 * nm;
  const int dim = g.dim();

  const double speed_sum = eval_nonlinear(z_, v_, t_, n1_);
  last_speed_sum_ = speed_sum;
  if (dt * speed_sum > cfl_safety_)
    throw cfl_error(cfl_message(dt, speed_sum, cfl_safety_), 0.9 * cfl_safety_ / speed_sum);

  ops.mode_blend(az_.data(), table_z_.E.data(), z_.data(), table_z_.P1.data(), n1_.z.data(), nm);
  for (int a = 0; a < dim; ++a)
    ops.mode_blend(av_.data(a), table_v_.E.data(), v_.data(a), table_v_.P1.data(), n1_.v.data(a), nm);

  eval_nonlinear(az_, av_, t_ + dt, n2_);

  // u_next = a + P2 * (N(a, t+dt) - N(u, t)), done per state array in place.
  ops.sub(n2_.z.data(), n2_.z.data(), n1_.z.data(), n2m);
  ops.mode_scale(n2_.z.data(), n2_.z.data(), table_z_.P2.data(), nm);
  ops.add(z_.data(), az_.data(), n2_.z.data(), n2m);
  bool finite = all_finite(z_.data(), n2m);
  for (int a = 0; a < dim; ++a) {
    ops.sub(n2_.v.data(a), n2_.v.data(a), n1_.v.data(a), n2m);
    ops.mode_scale(n2_.v.data(a), n2_.v.data(a), table_v_.P2.data(), nm);
    ops.add(v_.data(a), av_.data(a), n2_.v.data(a), n2m);
    finite = finite && all_finite(v_.data(a), n2m);
  }
  if (!finite) {
    std::ostringstream os;
    os << "state left the finite range during step " << (step_ + 1) << " (t = " << t_ << ")";
    throw numerical_abort(os.str(), step_ + 1);
  }
  t_ += dt;
  ++step_;
}

LinearRunResult run_linear(Transform& tf, const LinearProbeParams& params, const InitBounds* init) {
  if (!params.grid) throw param_error("probe run needs a grid");
  require_same_grid(*params.grid, tf.grid(), "run_linear");
  if (!(params.T > 0.0) || !std::isfinite(params.T))
    throw param_error("final time must be positive and finite");
  if (!(params.dt > 0.0) || !std::isfinite(params.dt))
    throw param_error("time step must be positive and finite");
  if (params.output_every < 1) throw param_error("output interval must be at least one step");
  validate_estimate_spec(params.estimate);

  LinearRunResult res;
  res.amplitude = params.forcing.amplitude;

  LinearStepper stepper(tf, params.forcing, params.potential_g, params.cfl_safety);
  if (init) {
    stepper.initialize(*init);
  } else {
    InitBounds zero = make_init_bounds(tf, params.init_K, ScalarField(params.grid, 0.0),
                                       VectorField(params.grid, 0.0), params.estimate.theta_init);
    stepper.initialize(zero);
  }

  DiagnosticRecorder recorder(tf, params.estimate, stepper.z_spec());
  const Grid& g = tf.grid();
  const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(params.T / params.dt - 1e-9)));
  const double dt = params.T / static_cast<double>(nsteps);  // integer step count lands on T

  auto sample = [&]() {
    recorder.record(stepper.time(), stepper.z_spec(), stepper.v_spec(),
                    stepper.forcing_at(stepper.time()));
    const double* comps[3] = {nullptr, nullptr, nullptr};
    for (int a = 0; a < g.dim(); ++a) comps[a] = stepper.v_spec().data(a);
    res.sol_residual_max = std::max(res.sol_residual_max, solenoidality_residual(g, comps));
  };

  sample();
  try {
    for (long s = 0; s < nsteps; ++s) {
      stepper.step(dt);
      if ((s + 1) % params.output_every == 0 || s + 1 == nsteps) sample();
    }
    res.completed = true;
  } catch (const cfl_error& e) {
    res.failure = e.what();
    res.abort_step = stepper.step_index() + 1;
  } catch (const numerical_abort& e) {
    res.failure = e.what();
    res.abort_step = e.step;
  }

  res.series = recorder.series();
  res.sup_Mp = res.series.M_p.back();
  for (int i = 0; i < kNumProbeTargets; ++i)
    res.sup_response[i] = res.series.sup_response(static_cast<ProbeTarget>(i));
  res.undershoot_max = recorder.undershoot_max();
  res.undershoot_rel =
      recorder.z_linf_max() > 0.0 ? recorder.undershoot_max() / recorder.z_linf_max() : 0.0;
  return res;
}

SweepReport probe_estimate(const LinearProbeParams& base, ProbeTarget target,
                           const std::vector<double>& amplitudes, int threads) {
  if (amplitudes.empty()) throw param_error("amplitude sweep needs at least one amplitude");
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    if (!std::isfinite(amplitudes[i]) || amplitudes[i] < 0.0)
      throw param_error("sweep amplitudes must be finite and nonnegative");
    if (i > 0 && !(amplitudes[i] > amplitudes[i - 1]))
      throw param_error("sweep amplitudes must be strictly increasing");
  }
  if (threads < 1) throw param_error("thread count must be at least 1");
  validate_estimate_spec(base.estimate, target);

  SweepReport report;
  report.target = target;
  report.estimate = base.estimate;
  report.ceiling = target_ceiling(base.estimate, target);
  report.amplitudes = amplitudes;
  report.runs.resize(amplitudes.size());

  const int nthreads = std::min<int>(threads, static_cast<int>(amplitudes.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    Transform tf(base.grid);
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= amplitudes.size()) break;
      LinearProbeParams p = base;
      p.forcing = base.forcing.with_amplitude(amplitudes[i]);
      try {
        report.runs[i] = run_linear(tf, p);
      } catch (const std::exception& e) {
        report.runs[i] = LinearRunResult{};
        report.runs[i].amplitude = amplitudes[i];
        report.runs[i].failure = e.what();
      }
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Completed, nonzero-amplitude runs with a usable positive response enter
  // the fit; the zero-amplitude baseline (if present) never does.
  std::vector<std::pair<double, double>> pairs;
  for (auto& r : report.runs) {
    if (!r.completed || r.amplitude == 0.0) continue;
    const double resp = r.sup_response[static_cast<int>(target)];
    if (!(resp > 0.0) || !std::isfinite(resp) || !(r.sup_Mp > 0.0)) continue;
    r.in_fit = true;
    pairs.emplace_back(r.sup_Mp, resp);
  }
  report.survivors = static_cast<int>(pairs.size());
  if (report.survivors < 4) {
    std::ostringstream os;
    os << "only " << report.survivors << " of " << amplitudes.size()
       << " sweep runs survive with a usable response; the scaling fit needs at least 4";
    throw param_error(os.str());
  }
  report.fit = fit_scaling_exponent(pairs);
  return report;
}

namespace {

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

void write_sweep_csv(const SweepReport& report, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir + ": " + ec.message());

  {
    CsvWriter w(out_dir + "/probe_series.csv",
                "probe series v1: one row per (amplitude, sample time); M_p and N_qbeta are the "
                "running 1+sup diagnostics, the rest are instantaneous norms");
    w.header({"amplitude", "time", "M_p", "N_qbeta", "v_theta_l2", "v_lr", "z_lq", "z_w1inf",
              "zhat_w1inf"});
    for (const auto& r : report.runs) {
      for (std::size_t i = 0; i < r.series.size(); ++i) {
        w.row({r.amplitude, r.series.times[i], r.series.M_p[i], r.series.N_qbeta[i],
               r.series.v_theta_norm[i], r.series.v_r_norm[i], r.series.z_q_norm[i],
               r.series.z_w1inf[i], r.series.zhat_w1inf[i]});
      }
    }
    w.close();
  }
  {
    CsvWriter w(out_dir + "/probe_runs.csv",
                "probe runs v1: per-run outcome, running suprema of every response norm, and "
                "monitoring extrema");
    w.header({"amplitude", "completed", "in_fit", "sup_Mp", "sup_v_theta_l2", "sup_v_lr",
              "sup_z_lq", "sup_z_w1inf", "sup_z_fractional", "undershoot_max", "undershoot_rel",
              "sol_residual_max", "failure"});
    for (const auto& r : report.runs) {
      w.row_mixed({format_g17(r.amplitude), r.completed ? "1" : "0", r.in_fit ? "1" : "0",
                   format_g17(r.sup_Mp), format_g17(r.sup_response[0]),
                   format_g17(r.sup_response[1]), format_g17(r.sup_response[2]),
                   format_g17(r.sup_response[3]), format_g17(r.sup_response[4]),
                   format_g17(r.undershoot_max), format_g17(r.undershoot_rel),
                   format_g17(r.sol_residual_max), csv_safe(r.failure)});
    }
    w.close();
  }
  {
    CsvWriter w(out_dir + "/probe_summary.csv",
                "probe summary v1: fitted scaling exponent of the target response against M_p, "
                "next to the admissible ceiling (margin = ceiling - slope)");
    w.header({"target", "p", "q", "r", "theta", "theta_init", "beta", "eta", "slope", "intercept",
              "r2", "decades", "points", "ceiling", "margin"});
    const EstimateSpec& s = report.estimate;
    w.row_mixed({probe_target_name(report.target), format_g17(s.p), format_g17(s.q),
                 format_g17(s.r), format_g17(s.theta), format_g17(s.theta_init),
                 format_g17(s.beta), format_g17(s.eta), format_g17(report.fit.slope),
                 format_g17(report.fit.intercept), format_g17(report.fit.r2),
                 format_g17(report.fit.decades), std::to_string(report.fit.points),
                 format_g17(report.ceiling), format_g17(report.ceiling - report.fit.slope)});
    w.close();
  }
}

}  // namespace kss
