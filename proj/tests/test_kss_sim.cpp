#include "kss/kss_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "kss/errors.hpp"
#include "kss/forcing.hpp"
#include "kss/norms.hpp"
#include "kss/spectral.hpp"

using kss::BlowupCriterion;
using kss::BlowupVerdict;
using kss::cfl_error;
using kss::check_lp_inequality;
using kss::detect_blowup;
using kss::EstimateSpec;
using kss::flux_limiter_eval;
using kss::FluxLimiter;
using kss::ForcingSpec;
using kss::Grid;
using kss::KSSParams;
using kss::KSSState;
using kss::KSSStepper;
using kss::param_error;
using kss::RunReport;
using kss::run_simulation;
using kss::ScalarField;
using kss::SimControls;
using kss::SimEvent;
using kss::structural_error;
using kss::Transform;
using kss::VectorField;

namespace {

constexpr double kPi = std::numbers::pi;

// Smooth positive bump of the given integral on top of a constant background.
ScalarField bump_plus_const(const kss::GridPtr& g, double background, double mass, double width) {
  ForcingSpec spec;
  spec.family = ForcingSpec::Family::StaticGaussian;
  spec.amplitude = 1.0;
  spec.width = width;
  spec.mass = mass;
  ScalarField f = kss::eval_forcing(spec, g, 0.0);
  for (double& v : f.v) v += background;
  return f;
}

KSSParams gaussian_params(const kss::GridPtr& g, double alpha, double g_amp) {
  KSSParams p;
  p.grid = g;
  p.limiter.K_F = 1.0;
  p.limiter.alpha = alpha;
  p.phi = kss::make_potential(g, g_amp);
  p.n0 = bump_plus_const(g, 1.0, 6.0, 0.5);
  p.c0 = bump_plus_const(g, 0.5, 3.0, 0.6);
  p.u0 = VectorField(g, 0.0);
  return p;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

double spec_max_abs(const kss::SpectralVector& u, int dim) {
  double m = 0.0;
  for (int a = 0; a < dim; ++a)
    for (double v : u.comp[a]) m = std::max(m, std::fabs(v));
  return m;
}

EstimateSpec monitor_p4() {
  EstimateSpec s;
  s.p = 4.0;
  return s;
}

}  // namespace

TEST_CASE("flux limiter formula and refusals") {
  CHECK(flux_limiter_eval({1.0, 1.0, {}}, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(flux_limiter_eval({2.0, 0.5, {}}, 15.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(flux_limiter_eval({3.7, 0.9, {}}, 0.0) == 3.7);  // F(0) = K_F exactly
  // Nonincreasing on a few sample points.
  double prev = flux_limiter_eval({1.3, 0.8, {}}, 0.0);
  for (double xi : {0.5, 1.0, 4.0, 100.0}) {
    const double cur = flux_limiter_eval({1.3, 0.8, {}}, xi);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK_THROWS_AS(flux_limiter_eval({1.0, 1.0, {}}, -0.1), param_error);
  CHECK_THROWS_AS(flux_limiter_eval({0.0, 1.0, {}}, 1.0), param_error);
  CHECK_THROWS_AS(flux_limiter_eval({1.0, -2.0, {}}, 1.0), param_error);
}

TEST_CASE("parameter validation refusals") {
  auto g = Grid::make_cube(2, 16, 2.0 * kPi);
  KSSParams p = gaussian_params(g, 0.7, 0.5);
  CHECK_NOTHROW(kss::validate_kss_params(p));

  KSSParams bad = p;
  bad.n0.v[3] = -0.2;
  CHECK_THROWS_AS(kss::validate_kss_params(bad), param_error);
  bad = p;
  bad.c0.v[0] = -1e-3;
  CHECK_THROWS_AS(kss::validate_kss_params(bad), param_error);
  bad = p;
  bad.limiter.alpha = 0.0;
  CHECK_THROWS_AS(kss::validate_kss_params(bad), param_error);
  bad = p;
  bad.limiter.lower_const = -0.1;
  CHECK_THROWS_AS(kss::validate_kss_params(bad), param_error);
  bad = p;
  bad.n0 = ScalarField(Grid::make_cube(2, 8, 2.0 * kPi), 1.0);
  CHECK_THROWS_AS(kss::validate_kss_params(bad), structural_error);

  Transform tf(g);
  CHECK_THROWS_AS(KSSStepper(tf, p, 0.0), param_error);
  CHECK_THROWS_AS(KSSStepper(tf, p, 1.5), param_error);
}

TEST_CASE("homogeneous steady state is a fixed point") {
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    auto g = dim == 2 ? Grid::make_cube(2, 32, 2.0 * kPi) : Grid::make_cube(3, 16, 2.0 * kPi);
    Transform tf(g);
    const double nbar = 2.0;
    KSSParams p;
    p.grid = g;
    p.limiter = {1.5, 0.75, {}};
    p.phi = kss::make_potential(g, 0.7);  // nonconstant potential; P(nbar grad phi) = 0
    p.n0 = ScalarField(g, nbar);
    p.c0 = ScalarField(g, nbar);
    p.u0 = VectorField(g, 0.0);

    KSSStepper st(tf, p, 0.8);
    const double mass0 = st.mass();
    for (int k = 0; k < 50; ++k) st.step(0.01);

    KSSState s = st.state();
    double dn = 0.0, dc = 0.0;
    for (double v : s.n.v) dn = std::max(dn, std::fabs(v - nbar));
    for (double v : s.c.v) dc = std::max(dc, std::fabs(v - nbar));
    CHECK(dn <= 1e-11 * nbar);
    CHECK(dc <= 1e-11 * nbar);
    CHECK(kss::max_abs(s.u) <= 1e-11);
    CHECK(st.mass() == doctest::Approx(mass0).epsilon(1e-14));
    CHECK(st.time() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(st.step_index() == 50);
  }
}

TEST_CASE("mass is conserved to rounding on a coupled run") {
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    auto g = dim == 2 ? Grid::make_cube(2, 32, 2.0 * kPi) : Grid::make_cube(3, 16, 2.0 * kPi);
    Transform tf(g);
    KSSParams p = gaussian_params(g, 0.7, 1.0);
    KSSStepper st(tf, p, 0.8);
    const double mass0 = st.mass();
    CHECK(mass0 == doctest::Approx(kss::integral(p.n0)).epsilon(1e-13));
    for (int k = 0; k < (dim == 2 ? 100 : 40); ++k) {
      st.step(5e-4);
      CHECK(std::fabs(st.mass() - mass0) <= 1e-12 * mass0);
    }
    // The quadrature integral of the physical field agrees up to transform
    // roundoff.
    CHECK(kss::integral(st.n_physical()) == doctest::Approx(mass0).epsilon(1e-12));
  }
}

TEST_CASE("temporal self-convergence at second order") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.5, 1.0);
  p.limiter.K_F = 1.5;
  const double T = 0.04;

  auto run_n = [&](double dt) {
    KSSStepper st(tf, p, 0.9);
    const long nsteps = std::lround(T / dt);
    for (long k = 0; k < nsteps; ++k) st.step(dt);
    return st.n_physical();
  };

  ScalarField ref = run_n(2e-5);
  std::vector<double> errs;
  for (double dt : {8e-4, 4e-4, 2e-4}) {
    ScalarField n = run_n(dt);
    for (std::size_t i = 0; i < n.v.size(); ++i) n.v[i] -= ref.v[i];
    errs.push_back(kss::lp_norm(n, 2.0));
  }
  const double o1 = std::log2(errs[0] / errs[1]);
  const double o2 = std::log2(errs[1] / errs[2]);
  CAPTURE(errs[0]);
  CAPTURE(errs[1]);
  CAPTURE(errs[2]);
  CHECK(o1 >= 1.9);
  CHECK(o2 >= 1.9);
}

TEST_CASE("constant potential decouples the fluid") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.6, 0.0);  // phi identically zero, u0 = 0

  KSSStepper coupled(tf, p, 0.8);
  KSSParams pf = p;
  pf.fluid_free = true;
  KSSStepper frozen(tf, pf, 0.8);

  for (int k = 0; k < 50; ++k) {
    coupled.step(1e-3);
    frozen.step(1e-3);
  }
  CHECK(spec_max_abs(coupled.u_spec(), 2) <= 1e-12);
  CHECK(kss::max_abs(coupled.u_physical()) <= 1e-12);
  KSSState a = coupled.state();
  KSSState b = frozen.state();
  CHECK(max_abs_diff(a.n, b.n) <= 1e-10 * kss::max_abs(a.n));
  CHECK(max_abs_diff(a.c, b.c) <= 1e-10 * kss::max_abs(a.c));
}

TEST_CASE("advective refusal leaves the state untouched") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.7, 0.5);
  for (std::size_t i = 0; i < p.u0.comp[0].size(); ++i) {
    const int iy = static_cast<int>(i) % 32;
    p.u0.comp[0][i] = 8.0 * std::sin(g->coord(1, iy));  // solenoidal shear
  }
  KSSStepper st(tf, p, 0.8);
  st.step(1e-3);  // a legal step first, so the refusal happens mid-run
  const std::vector<double> n_before = st.n_spec().a;
  const std::vector<double> c_before = st.c_spec().a;
  const std::vector<double> u_before = st.u_spec().comp[0];
  const double t_before = st.time();

  double suggested = 0.0;
  try {
    st.step(1.0);
    FAIL("expected a cfl_error");
  } catch (const cfl_error& e) {
    suggested = e.suggested_dt;
    CHECK(std::string(e.what()).find("advective") != std::string::npos);
  }
  CHECK(suggested > 0.0);
  CHECK(suggested < 1.0);
  CHECK(st.time() == t_before);
  CHECK(st.step_index() == 1);
  CHECK(st.n_spec().a == n_before);
  CHECK(st.c_spec().a == c_before);
  CHECK(st.u_spec().comp[0] == u_before);

  CHECK_NOTHROW(st.step(suggested));  // the suggestion is admissible
  CHECK(st.step_index() == 2);
}

TEST_CASE("lp inequality audit: degenerate windows") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);

  SUBCASE("homogeneous steady state gives residual zero") {
    KSSParams p;
    p.grid = g;
    p.limiter = {1.2, 0.75, {}};
    p.phi = kss::make_potential(g, 0.4);
    p.n0 = ScalarField(g, 1.5);
    p.c0 = ScalarField(g, 1.5);
    p.u0 = VectorField(g, 0.0);
    KSSStepper st(tf, p, 0.8);
    std::vector<KSSState> window;
    window.push_back(st.state());
    st.step(0.01);
    window.push_back(st.state());
    st.step(0.01);
    window.push_back(st.state());
    auto pts = check_lp_inequality(tf, window, 4.0, p.limiter);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].residual >= -1e-12);
    CHECK(std::fabs(pts[0].ddt_lhs) <= 1e-10);
    CHECK(std::fabs(pts[0].grad_lhs) <= 1e-10);
  }

  SUBCASE("alpha = 1 boundary weight is identically one") {
    // n constant, c nonconstant: with alpha = 1 the weight |grad c|^(2-2a)
    // degenerates to 1 everywhere (including zeros of grad c), so the
    // right-hand side is the closed form (p(p-1)K^2/2) nbar^p V.
    const double nbar = 1.5, p_exp = 4.0, kf = 0.8;
    KSSState s0, s1, s2;
    ScalarField c(g, 0.0);
    for (int ix = 0; ix < 32; ++ix)
      for (int iy = 0; iy < 32; ++iy)
        c.v[g->real_index(ix, iy)] = 0.3 + 0.2 * std::sin(g->coord(0, ix));
    for (KSSState* s : {&s0, &s1, &s2}) {
      s->n = ScalarField(g, nbar);
      s->c = c;
      s->u = VectorField(g, 0.0);
    }
    s0.t = 0.0;
    s1.t = 0.1;
    s2.t = 0.2;
    FluxLimiter lim{kf, 1.0, {}};
    auto pts = check_lp_inequality(tf, {s0, s1, s2}, p_exp, lim);
    REQUIRE(pts.size() == 1);
    const double expect =
        0.5 * p_exp * (p_exp - 1.0) * kf * kf * std::pow(nbar, p_exp) * g->volume();
    CHECK(pts[0].rhs == doctest::Approx(expect).epsilon(1e-12));
    CHECK(pts[0].residual == doctest::Approx(expect).epsilon(1e-10));
  }

  SUBCASE("refusals") {
    KSSState s;
    s.n = ScalarField(g, 1.0);
    s.c = ScalarField(g, 1.0);
    s.u = VectorField(g, 0.0);
    std::vector<KSSState> w{s, s, s};
    w[1].t = 0.1;
    w[2].t = 0.2;
    CHECK_THROWS_AS(check_lp_inequality(tf, w, 1.5, {1.0, 0.7, {}}), param_error);
    CHECK_THROWS_AS(check_lp_inequality(tf, w, 4.0, {1.0, 1.2, {}}), param_error);
    CHECK_THROWS_AS(check_lp_inequality(tf, {w[0], w[1]}, 4.0, {1.0, 0.7, {}}), param_error);
    std::vector<KSSState> unordered{w[0], w[2], w[1]};
    CHECK_THROWS_AS(check_lp_inequality(tf, unordered, 4.0, {1.0, 0.7, {}}), param_error);
  }
}

TEST_CASE("blow-up detector verdicts") {
  BlowupCriterion crit;  // growth_factor 10, slope tolerance 0

  std::vector<double> t, y;
  for (int k = 0; k < 12; ++k) {
    t.push_back(0.1 * k);
    y.push_back(5.0);
  }
  CHECK(detect_blowup(t, y, crit) == BlowupVerdict::NoBlowup);

  // Geometric doubling: constant log-slope counts as non-decelerating under
  // tolerance 0, so it flags once past the growth factor.
  y.clear();
  for (int k = 0; k < 12; ++k) y.push_back(std::pow(2.0, k));
  CHECK(detect_blowup(t, y, crit) == BlowupVerdict::BlowupSuspected);

  // A strict-acceleration detector (negative tolerance slack) would not.
  BlowupCriterion strict = crit;
  strict.slope_tolerance = -1e-6;
  CHECK(detect_blowup(t, y, strict) == BlowupVerdict::NoBlowup);

  // Bounded 2x oscillation.
  y.clear();
  for (int k = 0; k < 12; ++k) y.push_back(k % 2 == 0 ? 1.0 : 2.0);
  CHECK(detect_blowup(t, y, crit) == BlowupVerdict::NoBlowup);

  // Strong but decelerating growth: (1+k)^2 ends 100x up with a falling
  // log-slope, so it does not flag.
  y.clear();
  for (int k = 0; k < 12; ++k) y.push_back((1.0 + k) * (1.0 + k));
  CHECK(detect_blowup(t, y, crit) == BlowupVerdict::NoBlowup);

  // Collapsed adaptive step flags regardless of the series.
  BlowupCriterion floor_crit;
  floor_crit.dt_floor = 1e-6;
  std::vector<double> flat{1.0, 1.0, 1.0};
  CHECK(detect_blowup({0.0, 0.1, 0.2}, flat, floor_crit, 1e-7) ==
        BlowupVerdict::BlowupSuspected);
  CHECK(detect_blowup({0.0, 0.1, 0.2}, flat, floor_crit, 1e-5) == BlowupVerdict::NoBlowup);

  CHECK_THROWS_AS(detect_blowup({}, {}, crit), param_error);
  CHECK_THROWS_AS(detect_blowup({0.0, 0.1}, {1.0}, crit), param_error);
}

TEST_CASE("smooth gaussian run: inequality, solenoidality, conservation") {
  auto g = Grid::make_cube(2, 64, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.7, 0.5);
  SimControls ctl;
  ctl.output_every = 2;
  RunReport rep = run_simulation(tf, p, 0.5, 1e-3, monitor_p4(), ctl);

  REQUIRE(rep.completed);
  CHECK(rep.failure.empty());
  CHECK(rep.events.empty());
  CHECK(rep.series.size() >= 200);
  CHECK(rep.mass_drift_rel <= 1e-12);
  CHECK(rep.sol_residual_max <= 1e-10);

  // L^p energy inequality with 5% slack at >= 99% of audited times.
  REQUIRE(rep.inequality.size() >= 100);
  CHECK(kss::lp_inequality_violation_fraction(rep.inequality, 0.05) <= 0.01);

  // Bounded-run sanity: the monitors stayed finite and n stayed essentially
  // nonnegative.
  for (std::size_t i = 0; i < rep.series.size(); ++i) {
    CHECK(std::isfinite(rep.series.n_lp[i]));
    CHECK(rep.series.min_n[i] >= -1e-6 * rep.series.n_linf[i]);
  }
  CHECK(rep.final_state.t == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("underresolved spike raises the positivity event") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.7, 0.0);
  p.n0 = bump_plus_const(g, 0.0, 8.0, 0.22);  // near-grid-scale spike rings
  SimControls ctl;
  ctl.output_every = 1;
  RunReport rep = run_simulation(tf, p, 0.02, 1e-3, monitor_p4(), ctl);
  bool saw_undershoot = false;
  for (const auto& e : rep.events)
    saw_undershoot = saw_undershoot || e.kind == SimEvent::Kind::PositivityUndershoot;
  CHECK(saw_undershoot);
  // Events are time-ordered by construction.
  for (std::size_t i = 1; i < rep.events.size(); ++i)
    CHECK(rep.events[i].t >= rep.events[i - 1].t);
}

TEST_CASE("advective collapse stops the run with an event") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.7, 0.5);
  for (std::size_t i = 0; i < p.u0.comp[0].size(); ++i) {
    const int iy = static_cast<int>(i) % 32;
    p.u0.comp[0][i] = 3000.0 * std::sin(g->coord(1, iy));
  }
  SimControls ctl;
  ctl.dt_floor_frac = 1e-4;
  RunReport rep = run_simulation(tf, p, 1.0, 0.1, monitor_p4(), ctl);
  CHECK_FALSE(rep.completed);
  CHECK_FALSE(rep.failure.empty());
  REQUIRE(rep.events.size() == 1);
  CHECK(rep.events[0].kind == SimEvent::Kind::CflCollapse);
}

TEST_CASE("run csv output is schema-stable and deterministic") {
  auto g = Grid::make_cube(2, 32, 2.0 * kPi);
  Transform tf(g);
  KSSParams p = gaussian_params(g, 0.7, 0.5);
  SimControls ctl;
  ctl.output_every = 5;
  RunReport rep = run_simulation(tf, p, 0.1, 1e-3, monitor_p4(), ctl);
  REQUIRE(rep.completed);

  namespace fs = std::filesystem;
  const fs::path dir1 = fs::temp_directory_path() / "kss_run_csv_a";
  const fs::path dir2 = fs::temp_directory_path() / "kss_run_csv_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  kss::write_run_csv(rep, dir1.string());
  RunReport rep2 = run_simulation(tf, p, 0.1, 1e-3, monitor_p4(), ctl);
  kss::write_run_csv(rep2, dir2.string());

  auto slurp = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* name : {"run_series.csv", "run_inequality.csv", "run_events.csv"}) {
    CAPTURE(name);
    const std::string a = slurp(dir1 / name);
    CHECK(a == slurp(dir2 / name));
    CHECK(a.rfind("# ", 0) == 0);
    CHECK(a.find('\r') == std::string::npos);
  }
  const std::string series = slurp(dir1 / "run_series.csv");
  CHECK(series.find("time,mass,min_n,n_linf,n_lp,c_w1inf,u_theta_l2") != std::string::npos);
  // One data row per sample: total lines = comment + header + samples.
  const auto lines = static_cast<std::size_t>(std::count(series.begin(), series.end(), '\n'));
  CHECK(lines == 2 + rep.series.size());
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
