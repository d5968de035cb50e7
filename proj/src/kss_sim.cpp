#include "kss/kss_sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <utility>

#include "kss/csv.hpp"
#include "kss/errors.hpp"
#include "kss/kernels.hpp"
#include "kss/norms.hpp"
#include "kss/spectral.hpp"

namespace kss {

double flux_limiter_eval(const FluxLimiter& f, double xi) {
  if (!(f.K_F > 0.0)) throw param_error("flux limiter K_F must be positive");
  if (!(f.alpha > 0.0)) throw param_error("flux limiter alpha must be positive");
  if (!(xi >= 0.0)) throw param_error("flux limiter argument must be nonnegative");
  return f.K_F * std::pow(1.0 + xi, -0.5 * f.alpha);
}

void validate_kss_params(const KSSParams& p) {
  if (!p.grid) throw param_error("simulation needs a grid");
  if (!(p.limiter.K_F > 0.0)) throw param_error("flux limiter K_F must be positive");
  if (!(p.limiter.alpha > 0.0)) throw param_error("flux limiter alpha must be positive");
  if (p.limiter.lower_const && !(*p.limiter.lower_const > 0.0))
    throw param_error("flux limiter lower constant must be positive when given");
  if (!p.phi.grid || !p.n0.grid || !p.c0.grid || !p.u0.grid)
    throw param_error("simulation initial fields must all be built on the grid");
  require_same_grid(*p.phi.grid, *p.grid, "validate_kss_params(phi)");
  require_same_grid(*p.n0.grid, *p.grid, "validate_kss_params(n0)");
  require_same_grid(*p.c0.grid, *p.grid, "validate_kss_params(c0)");
  require_same_grid(*p.u0.grid, *p.grid, "validate_kss_params(u0)");
  if (min_value(p.n0) < 0.0) throw param_error("n0 must be nonnegative");
  if (min_value(p.c0) < 0.0) throw param_error("c0 must be nonnegative");
  if (!all_finite(p.n0) || !all_finite(p.c0) || !all_finite(p.u0) || !all_finite(p.phi))
    throw param_error("simulation initial fields must be finite");
}

KSSStepper::KSSStepper(Transform& tf, const KSSParams& params, double cfl_safety)
    : tf_(tf),
      limiter_(params.limiter),
      fluid_free_(params.fluid_free),
      cfl_safety_(cfl_safety),
      grad_phi_(tf.grid_ptr(), 0.0),
      n_(tf.grid_ptr()),
      c_(tf.grid_ptr()),
      u_(tf.grid_ptr()),
      n_phys_(tf.grid_ptr(), 0.0),
      u_ax_(tf.grid_ptr(), 0.0),
      f_field_(tf.grid_ptr(), 0.0),
      tmp_(tf.grid_ptr(), 0.0),
      tmp2_(tf.grid_ptr(), 0.0),
      flux_(tf.grid_ptr(), 0.0),
      adv_c_(tf.grid_ptr(), 0.0),
      grad_c_(tf.grid_ptr(), 0.0),
      spec_tmp_(tf.grid_ptr()),
      grad_tmp_(tf.grid_ptr()),
      an_(tf.grid_ptr()),
      ac_(tf.grid_ptr()) {
  if (!(cfl_safety_ > 0.0) || cfl_safety_ > 1.0)
    throw param_error("cfl safety factor must lie in (0, 1]");
  validate_kss_params(params);
  require_same_grid(*params.grid, tf_.grid(), "KSSStepper");

  const Grid& g = tf_.grid();
  gradient(tf_, params.phi, grad_phi_);
  tf_.forward(params.n0, n_);
  dealias_spec(g, n_.data());
  tf_.forward(params.c0, c_);
  dealias_spec(g, c_.data());
  tf_.forward(params.u0, u_);
  double* comps[3] = {nullptr, nullptr, nullptr};
  for (int a = 0; a < g.dim(); ++a) {
    dealias_spec(g, u_.data(a));
    comps[a] = u_.data(a);
  }
  project_solenoidal_spec(g, comps);
  if (fluid_free_)
    for (int a = 0; a < g.dim(); ++a) std::fill(u_.comp[a].begin(), u_.comp[a].end(), 0.0);

  n1_.n = SpectralScalar(tf_.grid_ptr());
  n1_.c = SpectralScalar(tf_.grid_ptr());
  n1_.u = SpectralVector(tf_.grid_ptr());
  n2_.n = SpectralScalar(tf_.grid_ptr());
  n2_.c = SpectralScalar(tf_.grid_ptr());
  n2_.u = SpectralVector(tf_.grid_ptr());
  au_ = SpectralVector(tf_.grid_ptr());
}

ScalarField KSSStepper::n_physical() {
  ScalarField out(tf_.grid_ptr(), 0.0);
  tf_.inverse(n_, out);
  return out;
}

ScalarField KSSStepper::c_physical() {
  ScalarField out(tf_.grid_ptr(), 0.0);
  tf_.inverse(c_, out);
  return out;
}

VectorField KSSStepper::u_physical() {
  VectorField out(tf_.grid_ptr(), 0.0);
  tf_.inverse(u_, out);
  return out;
}

KSSState KSSStepper::state() {
  KSSState s;
  s.t = t_;
  s.n = n_physical();
  s.c = c_physical();
  s.u = u_physical();
  return s;
}

double KSSStepper::mass() const {
  // Unnormalized forward transform: the k = 0 coefficient is the plain sum.
  return n_.a[0] * tf_.grid().cell_volume();
}

double KSSStepper::stable_dt() {
  if (last_speed_sum_ <= 0.0) return std::numeric_limits<double>::infinity();
  return cfl_safety_ / last_speed_sum_;
}

double KSSStepper::eval_nonlinear(const SpectralScalar& n, const SpectralScalar& c,
                                  const SpectralVector& u, Nonlin& out) {
  const Grid& g = tf_.grid();
  const auto& ops = kernels::active();
  const std::size_t nr = g.nreal();
  const std::size_t nm = g.nmodes();
  const int dim = g.dim();

  tf_.inverse(n.data(), n_phys_.data());

  // Signal gradient, limiter value F(|grad c|^2) pointwise.
  for (int a = 0; a < dim; ++a) {
    ops.mode_grad(spec_tmp_.data(), c.data(), g.kgrad(a), nm);
    tf_.inverse(spec_tmp_.data(), grad_c_.data(a));
  }
  if (dim == 2)
    ops.magnitude_sq2(f_field_.data(), grad_c_.data(0), grad_c_.data(1), nr);
  else
    ops.magnitude_sq3(f_field_.data(), grad_c_.data(0), grad_c_.data(1), grad_c_.data(2), nr);
  {
    const double kf = limiter_.K_F, half_alpha = -0.5 * limiter_.alpha;
    double* fv = f_field_.data();
    for (std::size_t i = 0; i < nr; ++i) fv[i] = kf * std::pow(1.0 + fv[i], half_alpha);
  }

  // Per axis: advective speeds, c-advection, divergence-form n flux, u forcing.
  std::fill(adv_c_.v.begin(), adv_c_.v.end(), 0.0);
  std::fill(out.n.a.begin(), out.n.a.end(), 0.0);
  double speed_sum = 0.0;
  double* ucomps[3] = {nullptr, nullptr, nullptr};
  for (int a = 0; a < dim; ++a) {
    if (fluid_free_)
      std::fill(u_ax_.v.begin(), u_ax_.v.end(), 0.0);
    else
      tf_.inverse(u.data(a), u_ax_.data());
    ops.mul_add(adv_c_.data(), u_ax_.data(), grad_c_.data(a), nr);

    // chemotactic velocity component F * dc/dx_a, then total flux n*(F dc + u).
    ops.mul(tmp_.data(), f_field_.data(), grad_c_.data(a), nr);
    speed_sum += (ops.max_abs(u_ax_.data(), nr) + ops.max_abs(tmp_.data(), nr)) / g.spacing(a);
    ops.add(tmp2_.data(), tmp_.data(), u_ax_.data(), nr);
    ops.mul(flux_.data(), n_phys_.data(), tmp2_.data(), nr);
    tf_.forward(flux_.data(), spec_tmp_.data());
    dealias_spec(g, spec_tmp_.data());
    ops.mode_grad(grad_tmp_.data(), spec_tmp_.data(), g.kgrad(a), nm);
    ops.add(out.n.data(), out.n.data(), grad_tmp_.data(), 2 * nm);

    // Fluid forcing n * dphi/dx_a (projected below).
    if (!fluid_free_) {
      ops.mul(tmp_.data(), n_phys_.data(), grad_phi_.data(a), nr);
      tf_.forward(tmp_.data(), out.u.data(a));
      dealias_spec(g, out.u.data(a));
      ucomps[a] = out.u.data(a);
    }
  }
  ops.scale(out.n.data(), out.n.data(), -1.0, 2 * nm);  // N_n = -div(flux)
  if (!fluid_free_) project_solenoidal_spec(g, ucomps);
  else
    for (int a = 0; a < dim; ++a) std::fill(out.u.comp[a].begin(), out.u.comp[a].end(), 0.0);

  // N_c = n - u . grad c.
  ops.sub(tmp_.data(), n_phys_.data(), adv_c_.data(), nr);
  tf_.forward(tmp_.data(), out.c.data());
  dealias_spec(g, out.c.data());
  return speed_sum;
}

void KSSStepper::ensure_tables(double dt) {
  if (table_heat_.dt == dt && !table_heat_.E.empty()) return;
  const Grid& g = tf_.grid();
  const std::size_t nm = g.nmodes();
  const double* k2 = g.k2();
  std::vector<double> lambda(nm);
  for (std::size_t i = 0; i < nm; ++i) lambda[i] = -k2[i];
  table_heat_ = make_etd_table(lambda.data(), nm, dt);
  for (std::size_t i = 0; i < nm; ++i) lambda[i] = -(k2[i] + 1.0);
  table_c_ = make_etd_table(lambda.data(), nm, dt);
}

void KSSStepper::step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw param_error("time step must be positive and finite");
  ensure_tables(dt);
  const Grid& g = tf_.grid();
  const auto& ops = kernels::active();
  const std::size_t nm = g.nmodes();
  const std::size_t n2m = 2 * nm;
  const int dim = g.dim();

  const double speed_sum = eval_nonlinear(n_, c_, u_, n1_);
  last_speed_sum_ = speed_sum;
  if (dt * speed_sum > cfl_safety_) {
    std::ostringstream os;
    os << "advective limit exceeded: dt * sum_a (max|u_a| + max|F dc/dx_a|)/h_a = "
       << dt * speed_sum << " > " << cfl_safety_;
    throw cfl_error(os.str(), 0.9 * cfl_safety_ / speed_sum);
  }

  ops.mode_blend(an_.data(), table_heat_.E.data(), n_.data(), table_heat_.P1.data(), n1_.n.data(), nm);
  ops.mode_blend(ac_.data(), table_c_.E.data(), c_.data(), table_c_.P1.data(), n1_.c.data(), nm);
  for (int a = 0; a < dim; ++a)
    ops.mode_blend(au_.data(a), table_heat_.E.data(), u_.data(a), table_heat_.P1.data(),
                   n1_.u.data(a), nm);

  eval_nonlinear(an_, ac_, au_, n2_);

  auto correct = [&](SpectralScalar& state, const SpectralScalar& pred, SpectralScalar& d1,
                     SpectralScalar& d2, const EtdTable& table) {
    ops.sub(d2.data(), d2.data(), d1.data(), n2m);
    ops.mode_scale(d2.data(), d2.data(), table.P2.data(), nm);
    ops.add(state.data(), pred.data(), d2.data(), n2m);
  };
  correct(n_, an_, n1_.n, n2_.n, table_heat_);
  correct(c_, ac_, n1_.c, n2_.c, table_c_);
  bool finite = all_finite(n_.data(), n2m) && all_finite(c_.data(), n2m);
  for (int a = 0; a < dim; ++a) {
    ops.sub(n2_.u.data(a), n2_.u.data(a), n1_.u.data(a), n2m);
    ops.mode_scale(n2_.u.data(a), n2_.u.data(a), table_heat_.P2.data(), nm);
    ops.add(u_.data(a), au_.data(a), n2_.u.data(a), n2m);
    finite = finite && all_finite(u_.data(a), n2m);
  }
  if (!finite) {
    std::ostringstream os;
    os << "state left the finite range during step " << (step_ + 1) << " (t = " << t_ << ")";
    throw numerical_abort(os.str(), step_ + 1);
  }
  t_ += dt;
  ++step_;
}

const char* sim_event_kind_name(SimEvent::Kind k) {
  switch (k) {
    case SimEvent::Kind::PositivityUndershoot:
      return "positivity_undershoot";
    case SimEvent::Kind::BlowupSuspected:
      return "blowup_suspected";
    case SimEvent::Kind::CflCollapse:
      return "cfl_collapse";
  }
  throw contract_error("unknown simulation event kind");
}

std::vector<LpInequalityPoint> check_lp_inequality(Transform& tf,
                                                   const std::vector<KSSState>& window, double p,
                                                   const FluxLimiter& limiter) {
  if (!(p >= 2.0)) throw param_error("the L^p audit needs p >= 2");
  if (!(limiter.alpha <= 1.0))
    throw param_error("the L^p audit applies to limiter exponents alpha <= 1");
  if (window.size() < 3)
    throw param_error("the L^p audit needs at least 3 consecutive states for the centered d/dt");
  const Grid& g = tf.grid();
  for (const auto& s : window) require_same_grid(*s.n.grid, g, "check_lp_inequality");
  for (std::size_t i = 1; i < window.size(); ++i)
    if (!(window[i].t > window[i - 1].t))
      throw param_error("the L^p audit window must be strictly time-ordered");

  const std::size_t nr = g.nreal();
  const double h = g.cell_volume();
  auto int_np = [&](const ScalarField& n) {
    return kernels::sum_abs_pow(n.data(), p, nr) * h;  // n >= 0 up to undershoot
  };

  std::vector<LpInequalityPoint> pts;
  ScalarField npow(tf.grid_ptr(), 0.0), weight(tf.grid_ptr(), 0.0);
  VectorField gradv(tf.grid_ptr(), 0.0);
  for (std::size_t i = 1; i + 1 < window.size(); ++i) {
    const KSSState& s = window[i];
    LpInequalityPoint pt;
    pt.t = s.t;
    pt.ddt_lhs =
        (int_np(window[i + 1].n) - int_np(window[i - 1].n)) / (window[i + 1].t - window[i - 1].t);

    // (2(p-1)/p) int |grad n^{p/2}|^2, gradient taken spectrally.
    for (std::size_t j = 0; j < nr; ++j)
      npow.v[j] = std::pow(std::max(s.n.v[j], 0.0), 0.5 * p);
    gradient(tf, npow, gradv);
    double grad_sq = 0.0;
    for (int a = 0; a < g.dim(); ++a)
      grad_sq += kernels::active().dot(gradv.data(a), gradv.data(a), nr);
    pt.grad_lhs = (2.0 * (p - 1.0) / p) * grad_sq * h;

    // (p(p-1) K_F^2/2) int n^p |grad c|^{2-2 alpha}.
    gradient(tf, s.c, gradv);
    if (g.dim() == 2)
      kernels::active().magnitude_sq2(weight.data(), gradv.data(0), gradv.data(1), nr);
    else
      kernels::active().magnitude_sq3(weight.data(), gradv.data(0), gradv.data(1), gradv.data(2),
                                      nr);
    const double expo = 0.5 * (2.0 - 2.0 * limiter.alpha);  // of |grad c|^2
    double rhs_int = 0.0;
    for (std::size_t j = 0; j < nr; ++j)
      rhs_int += std::pow(std::max(s.n.v[j], 0.0), p) * std::pow(weight.v[j], expo);
    pt.rhs = 0.5 * p * (p - 1.0) * limiter.K_F * limiter.K_F * rhs_int * h;
    pt.residual = pt.rhs - (pt.ddt_lhs + pt.grad_lhs);
    pts.push_back(pt);
  }
  return pts;
}

double lp_inequality_violation_fraction(const std::vector<LpInequalityPoint>& pts,
                                        double slack_frac) {
  if (pts.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& pt : pts)
    if (pt.residual < -slack_frac * std::fabs(pt.rhs)) ++bad;
  return static_cast<double>(bad) / static_cast<double>(pts.size());
}

BlowupVerdict detect_blowup(const std::vector<double>& times, const std::vector<double>& n_linf,
                            const BlowupCriterion& crit, double current_dt) {
  if (times.empty() || times.size() != n_linf.size())
    throw param_error("blow-up detection needs a nonempty, aligned series");
  if (current_dt < crit.dt_floor) return BlowupVerdict::BlowupSuspected;
  const std::size_t nsz = times.size();
  if (nsz < 2) return BlowupVerdict::NoBlowup;
  const double base = n_linf.front();
  if (!(n_linf.back() >= crit.growth_factor * base)) return BlowupVerdict::NoBlowup;

  // Compare log-slopes over the first and last quarters of the series.
  auto log_slope = [&](std::size_t i0, std::size_t i1) {
    const double y0 = std::max(n_linf[i0], 1e-300), y1 = std::max(n_linf[i1], 1e-300);
    const double dtw = times[i1] - times[i0];
    return dtw > 0.0 ? (std::log(y1) - std::log(y0)) / dtw : 0.0;
  };
  const std::size_t q1 = std::max<std::size_t>(1, nsz / 4);
  const std::size_t q3 = std::min(nsz - 2, (3 * nsz) / 4);
  const double first = log_slope(0, q1);
  const double last = log_slope(q3, nsz - 1);
  return last >= first - crit.slope_tolerance ? BlowupVerdict::BlowupSuspected
                                              : BlowupVerdict::NoBlowup;
}

RunReport run_simulation(Transform& tf, const KSSParams& params, double T, double dt,
                         const EstimateSpec& monitor, const SimControls& ctl) {
  // T = 0 is the degenerate horizon: record the initial sample and return.
  if (!(T >= 0.0) || !std::isfinite(T)) throw param_error("final time must be nonnegative and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw param_error("time step must be positive and finite");
  if (ctl.output_every < 1) throw param_error("output interval must be at least one step");
  validate_estimate_spec(monitor);

  RunReport rep;
  KSSStepper st(tf, params, ctl.cfl_safety);
  const Grid& g = tf.grid();
  const double dt_floor =
      ctl.blowup.dt_floor > 0.0 ? ctl.blowup.dt_floor : ctl.dt_floor_frac * T;
  const double dt_max = dt;

  double mass0 = 0.0;
  std::vector<KSSState> audit;  // last three sampled states for the L^p audit
  const SpectralOperator theta_op = SpectralOperator::stokes_power(monitor.theta);

  auto sample = [&](bool& stop) {
    KSSState s = st.state();
    rep.series.times.push_back(s.t);
    const double m = kss::integral(s.n);
    rep.series.mass.push_back(m);
    const double nmin = kss::min_value(s.n);
    rep.series.min_n.push_back(nmin);
    const double ninf = kss::max_abs(s.n);
    rep.series.n_linf.push_back(ninf);
    rep.series.n_lp.push_back(kss::lp_norm(s.n, monitor.p));
    rep.series.c_w1inf.push_back(kss::w1inf_norm(tf, s.c));
    rep.series.u_theta_l2.push_back(kss::lp_norm(apply_operator(tf, s.u, theta_op), 2.0));

    const double* comps[3] = {nullptr, nullptr, nullptr};
    for (int a = 0; a < g.dim(); ++a) comps[a] = st.u_spec().data(a);
    rep.sol_residual_max = std::max(rep.sol_residual_max, solenoidality_residual(g, comps));

    if (rep.series.times.size() == 1) mass0 = m;
    if (mass0 != 0.0)
      rep.mass_drift_rel = std::max(rep.mass_drift_rel, std::fabs(m - mass0) / std::fabs(mass0));

    if (nmin < -ctl.undershoot_tol * ninf && ninf > 0.0) {
      std::ostringstream os;
      os << "min n = " << nmin << " against ||n||_inf = " << ninf;
      rep.events.push_back({s.t, SimEvent::Kind::PositivityUndershoot, os.str()});
    }

    audit.push_back(std::move(s));
    if (audit.size() > 3) audit.erase(audit.begin());
    if (audit.size() == 3 && params.limiter.alpha <= 1.0) {
      auto pts = check_lp_inequality(tf, audit, monitor.p, params.limiter);
      rep.inequality.push_back(pts.front());
    }

    if (rep.series.times.size() >= 8 &&
        detect_blowup(rep.series.times, rep.series.n_linf, ctl.blowup) ==
            BlowupVerdict::BlowupSuspected) {
      std::ostringstream os;
      os << "||n||_inf grew from " << rep.series.n_linf.front() << " to " << ninf
         << " without decelerating";
      rep.events.push_back({s.t, SimEvent::Kind::BlowupSuspected, os.str()});
      rep.failure = "blow-up suspected";
      stop = true;
    }
  };

  bool stop = false;
  sample(stop);
  long accepted = 0;
  double dt_cur = std::min(dt, T);
  try {
    while (!stop && st.time() < T * (1.0 - 1e-12)) {
      const double step_dt = std::min(dt_cur, T - st.time());
      try {
        st.step(step_dt);
      } catch (const cfl_error&) {
        dt_cur *= 0.5;
        if (dt_cur < dt_floor) {
          rep.events.push_back({st.time(), SimEvent::Kind::CflCollapse,
                                "adaptive step fell below the floor " + format_g17(dt_floor)});
          rep.failure = "time step collapsed";
          break;
        }
        continue;  // state untouched; retry with the halved step
      }
      ++accepted;
      // Grow the step back when the advective bound leaves comfortable room.
      if (dt_cur < dt_max && step_dt >= dt_cur * (1.0 - 1e-12) &&
          dt_cur * 1.1 <= 0.9 * st.stable_dt())
        dt_cur = std::min(dt_cur * 1.1, dt_max);
      if (accepted % ctl.output_every == 0 || st.time() >= T * (1.0 - 1e-12)) sample(stop);
    }
    rep.completed = rep.failure.empty();
  } catch (const numerical_abort& e) {
    rep.failure = e.what();
  }
  rep.final_state = st.state();
  return rep;
}

void write_run_csv(const RunReport& rep, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir + ": " + ec.message());

  {
    CsvWriter w(out_dir + "/run_series.csv",
                "run series v1: per-sample monitors of the nonlinear system (mass is the discrete "
                "integral of n; u_theta_l2 uses the monitor theta)");
    w.header({"time", "mass", "min_n", "n_linf", "n_lp", "c_w1inf", "u_theta_l2"});
    for (std::size_t i = 0; i < rep.series.size(); ++i)
      w.row({rep.series.times[i], rep.series.mass[i], rep.series.min_n[i], rep.series.n_linf[i],
             rep.series.n_lp[i], rep.series.c_w1inf[i], rep.series.u_theta_l2[i]});
    w.close();
  }
  {
    CsvWriter w(out_dir + "/run_inequality.csv",
                "run inequality v1: centered-difference audit of the L^p energy inequality; "
                "residual = rhs - (ddt_lhs + grad_lhs), nonnegative up to slack when the bound "
                "holds");
    w.header({"time", "ddt_lhs", "grad_lhs", "rhs", "residual"});
    for (const auto& pt : rep.inequality)
      w.row({pt.t, pt.ddt_lhs, pt.grad_lhs, pt.rhs, pt.residual});
    w.close();
  }
  {
    CsvWriter w(out_dir + "/run_events.csv", "run events v1: time-ordered anomalies of the run");
    w.header({"time", "kind", "detail"});
    for (const auto& e : rep.events) {
      std::string detail = e.detail;
      std::replace(detail.begin(), detail.end(), ',', ';');
      w.row_mixed({format_g17(e.t), sim_event_kind_name(e.kind), detail});
    }
    w.close();
  }
}

}  // namespace kss
