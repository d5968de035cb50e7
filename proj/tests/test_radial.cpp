#include "kss/radial.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "kss/errors.hpp"

using kss::cfl_error;
using kss::contract_error;
using kss::DichotomyParams;
using kss::DichotomyRow;
using kss::DichotomyVerdict;
using kss::dichotomy_experiment;
using kss::FluxLimiter;
using kss::param_error;
using kss::radial_bump;
using kss::radial_mass;
using kss::RadialControls;
using kss::RadialGrid;
using kss::RadialRunReport;
using kss::RadialState;
using kss::run_radial;
using kss::solve_c_radial;
using kss::step_radial;
using kss::structural_error;

namespace {

constexpr double kPi = std::numbers::pi;

// Dense Gaussian elimination with partial pivoting, independent of the
// production Thomas path, for the linear-algebra oracle.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// The discrete signal operator assembled from the mesh geometry alone
// (mirrors the documented stencil, not the production code path).
std::vector<std::vector<double>> signal_matrix(const RadialGrid& g) {
  const auto m = static_cast<std::size_t>(g.cells);
  const double h = g.spacing();
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double glo = i > 0 ? g.face_area[i] / h : 0.0;
    const double ghi = i + 1 < m ? g.face_area[i + 1] / h : 0.0;
    a[i][i] = glo + ghi + g.shell_volume[i];
    if (i > 0) a[i][i - 1] = -glo;
    if (i + 1 < m) a[i][i + 1] = -ghi;
  }
  return a;
}

// Manufactured pair: c*(r) = 1.5 + 0.5 cos(kr) has c*'(0) = c*'(R) = 0, and
// n* := c* - Laplacian(c*) is smooth through r = 0.
double mms_c(double r, double k) { return 1.5 + 0.5 * std::cos(k * r); }
double mms_n(double r, double k) {
  return mms_c(r, k) + 0.5 * k * k * std::cos(k * r) + (k / r) * std::sin(k * r);
}

}  // namespace

TEST_CASE("radial mesh geometry") {
  RadialGrid g = RadialGrid::make(2.0, 16);
  CHECK(g.faces.front() == 0.0);
  CHECK(g.faces.back() == 2.0);
  for (int j = 0; j < 16; ++j) {
    CHECK(g.faces[j + 1] > g.faces[j]);
    CHECK(g.shell_volume[j] > 0.0);
    CHECK(g.centers[j] == doctest::Approx(0.5 * (g.faces[j] + g.faces[j + 1])));
  }
  CHECK(g.face_area[0] == 0.0);
  double total = 0.0;
  for (double v : g.shell_volume) total += v;
  CHECK(total == doctest::Approx(4.0 / 3.0 * kPi * 8.0).epsilon(1e-13));

  // 2d smoke: disc area
  RadialGrid g2 = RadialGrid::make(1.5, 10, 2);
  total = 0.0;
  for (double v : g2.shell_volume) total += v;
  CHECK(total == doctest::Approx(kPi * 2.25).epsilon(1e-13));

  CHECK_THROWS_AS(RadialGrid::make(0.0, 16), param_error);
  CHECK_THROWS_AS(RadialGrid::make(1.0, 2), param_error);
  CHECK_THROWS_AS(RadialGrid::make(1.0, 16, 1), param_error);
  CHECK_THROWS_AS(RadialGrid::make(1.0, 16, 4), param_error);
}

TEST_CASE("bump construction and mass functional") {
  RadialGrid g = RadialGrid::make(1.0, 64);
  std::vector<double> n = radial_bump(g, 7.5, 0.2);
  CHECK(radial_mass(g, n) == doctest::Approx(7.5).epsilon(1e-14));
  for (double v : n) CHECK(v > 0.0);
  for (int i = 1; i < 64; ++i) CHECK(n[i] <= n[i - 1]);  // radially decreasing
  CHECK_THROWS_AS(radial_bump(g, 0.0, 0.2), param_error);
  CHECK_THROWS_AS(radial_bump(g, 1.0, -0.1), param_error);
  CHECK_THROWS_AS(radial_mass(g, std::vector<double>(10, 1.0)), structural_error);
}

TEST_CASE("signal solve: constants, monotonicity, bounds") {
  RadialGrid g = RadialGrid::make(1.0, 48);

  SUBCASE("constant density gives the constant signal") {
    std::vector<double> c = solve_c_radial(g, std::vector<double>(48, 3.7));
    for (double v : c) CHECK(v == doctest::Approx(3.7).epsilon(1e-13));
  }

  SUBCASE("nonnegative densities give nonnegative signals within min/max") {
    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> n(48);
      for (double& v : n) v = dist(rng);
      const double lo = *std::min_element(n.begin(), n.end());
      const double hi = *std::max_element(n.begin(), n.end());
      std::vector<double> c = solve_c_radial(g, n);
      for (double v : c) {
        CHECK(v >= -1e-10);
        CHECK(v >= lo - 1e-10);
        CHECK(v <= hi + 1e-10);
      }
    }
  }

  SUBCASE("refusals") {
    CHECK_THROWS_AS(solve_c_radial(g, std::vector<double>(10, 1.0)), structural_error);
    std::vector<double> bad(48, 1.0);
    bad[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_c_radial(g, bad), param_error);
  }
}

TEST_CASE("signal solve matches a dense direct solve") {
  RadialGrid g = RadialGrid::make(1.0, 32);
  std::vector<double> n = radial_bump(g, 12.0, 0.15);  // concentrated bump
  std::vector<double> c = solve_c_radial(g, n);

  std::vector<double> b(32);
  for (int i = 0; i < 32; ++i) b[i] = g.shell_volume[i] * n[i];
  std::vector<double> ref = dense_solve(signal_matrix(g), b);
  double scale = 0.0, diff = 0.0;
  for (int i = 0; i < 32; ++i) {
    scale = std::max(scale, std::fabs(ref[i]));
    diff = std::max(diff, std::fabs(c[i] - ref[i]));
  }
  CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("signal solve converges at second order on a manufactured solution") {
  const double R = 1.0, k = 2.0 * kPi / R;
  std::vector<double> errs_l2, errs_linf;
  for (int cells : {32, 64, 128, 256}) {
    RadialGrid g = RadialGrid::make(R, cells);
    std::vector<double> n(cells);
    for (int i = 0; i < cells; ++i) n[i] = mms_n(g.centers[i], k);
    std::vector<double> c = solve_c_radial(g, n);
    double num = 0.0, den = 0.0, linf = 0.0;
    for (int i = 0; i < cells; ++i) {
      const double d = c[i] - mms_c(g.centers[i], k);
      num += g.shell_volume[i] * d * d;
      den += g.shell_volume[i];
      linf = std::max(linf, std::fabs(d));
    }
    errs_l2.push_back(std::sqrt(num / den));
    errs_linf.push_back(linf);
  }
  for (std::size_t i = 1; i < errs_l2.size(); ++i) {
    CAPTURE(i);
    CHECK(std::log2(errs_l2[i - 1] / errs_l2[i]) >= 1.9);
    CHECK(std::log2(errs_linf[i - 1] / errs_linf[i]) >= 1.9);
  }
}

TEST_CASE("radial step: steady state and exact mass telescoping") {
  RadialGrid g = RadialGrid::make(1.0, 96);
  FluxLimiter lim{1.0, 0.7, {}};

  SUBCASE("homogeneous steady state is unchanged") {
    RadialState s;
    s.t = 0.0;
    s.n.assign(96, 2.5);
    s.c = solve_c_radial(g, s.n);
    for (int k = 0; k < 20; ++k) s = step_radial(g, s, lim, 1e-3);
    for (double v : s.n) CHECK(v == doctest::Approx(2.5).epsilon(1e-13));
    // c carries the elliptic solve's forward error (condition times roundoff,
    // ~5e-13 on this mesh), not a drift of the stepping itself.
    for (double v : s.c) CHECK(v == doctest::Approx(2.5).epsilon(1e-11));
    CHECK(s.t == doctest::Approx(0.02));
  }

  SUBCASE("mass drift stays at rounding level and n stays nonnegative") {
    RadialState s;
    s.t = 0.0;
    s.n = radial_bump(g, 5.0, 0.3);
    s.c = solve_c_radial(g, s.n);
    const double m0 = radial_mass(g, s.n);
    double peak = *std::max_element(s.n.begin(), s.n.end());
    for (int k = 0; k < 200; ++k) {
      s = step_radial(g, s, lim, 2e-4);
      CHECK(std::fabs(radial_mass(g, s.n) - m0) <= 1e-12 * m0);
      CHECK(*std::min_element(s.n.begin(), s.n.end()) >= -1e-14 * peak);
    }
  }
}

TEST_CASE("radial step refuses an inadmissible dt with a usable suggestion") {
  RadialGrid g = RadialGrid::make(1.0, 128);
  RadialState s;
  s.t = 0.0;
  s.n = radial_bump(g, 50.0, 0.1);  // steep signal gradients
  s.c = solve_c_radial(g, s.n);
  FluxLimiter lim{1.0, 0.3, {}};
  double suggested = 0.0;
  try {
    step_radial(g, s, lim, 0.1);
    FAIL("expected a cfl_error");
  } catch (const cfl_error& e) {
    suggested = e.suggested_dt;
    CHECK(std::string(e.what()).find("positivity bound") != std::string::npos);
  }
  CHECK(suggested > 0.0);
  CHECK(suggested < 0.1);
  RadialState after = step_radial(g, s, lim, suggested);
  CHECK(after.t == doctest::Approx(suggested));
  CHECK(*std::min_element(after.n.begin(), after.n.end()) >= 0.0);
}

TEST_CASE("radial step converges under time and space refinement") {
  const double R = 1.0;
  FluxLimiter lim{1.0, 0.7, {}};

  SUBCASE("first order in time") {
    RadialGrid g = RadialGrid::make(R, 128);
    std::vector<double> n0 = radial_bump(g, 5.0, 0.35);
    const double T = 0.05;
    auto run = [&](long steps) {
      RadialState s;
      s.t = 0.0;
      s.n = n0;
      s.c = solve_c_radial(g, n0);
      for (long i = 0; i < steps; ++i) s = step_radial(g, s, lim, T / steps);
      return s.n;
    };
    std::vector<double> ref = run(8192);
    std::vector<double> errs;
    for (long steps : {64L, 128L, 256L}) {
      std::vector<double> n = run(steps);
      double e = 0.0, den = 0.0;
      for (int i = 0; i < 128; ++i) {
        e += g.shell_volume[i] * std::fabs(n[i] - ref[i]);
        den += g.shell_volume[i];
      }
      errs.push_back(e / den);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 0.9);
    CHECK(std::log2(errs[1] / errs[2]) >= 0.9);
  }

  SUBCASE("space refinement converges (upwind advection holds it to first order)") {
    // The advective face value is strictly upwinded, so the spatial error is
    // O(h) once the advection error dominates the O(h^2) diffusion part;
    // the study asserts convergence against volume averages of a fine run.
    const double dt = 1e-5, T = 0.02;
    auto run_h = [&](int cells) {
      RadialGrid gh = RadialGrid::make(R, cells);
      RadialState s;
      s.t = 0.0;
      s.n = radial_bump(gh, 5.0, 0.35);
      s.c = solve_c_radial(gh, s.n);
      const long steps = std::lround(T / dt);
      for (long i = 0; i < steps; ++i) s = step_radial(gh, s, lim, dt);
      return s.n;
    };
    RadialGrid gf = RadialGrid::make(R, 1024);
    std::vector<double> fine = run_h(1024);
    std::vector<double> errs;
    for (int cells : {64, 128, 256}) {
      RadialGrid gh = RadialGrid::make(R, cells);
      std::vector<double> n = run_h(cells);
      const int q = 1024 / cells;
      double e = 0.0, den = 0.0;
      for (int i = 0; i < cells; ++i) {
        double avg = 0.0, vol = 0.0;
        for (int j = i * q; j < (i + 1) * q; ++j) {
          avg += gf.shell_volume[j] * fine[j];
          vol += gf.shell_volume[j];
        }
        e += gh.shell_volume[i] * std::fabs(n[i] - avg / vol);
        den += gh.shell_volume[i];
      }
      errs.push_back(e / den);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(std::log2(errs[1] / errs[2]) >= 0.85);
  }
}

TEST_CASE("adaptive radial runs separate diffuse from concentrated data") {
  SUBCASE("diffuse data stay bounded at every alpha") {
    DichotomyParams p;
    p.cells = 256;
    p.mass = 10.0;
    p.concentration = 2.0;
    p.T = 0.5;
    p.dt = 1e-4;
    auto rows = dichotomy_experiment({0.3, 0.8}, p, 2);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CAPTURE(r.alpha);
      CHECK(r.verdict == DichotomyVerdict::NoBlowup);
      CHECK(r.end_time == doctest::Approx(0.5).epsilon(1e-9));
    }
  }

  SUBCASE("concentrated data flag at alpha 0.3 and relax at alpha 0.8") {
    RadialGrid g = RadialGrid::make(1.0, 256);
    std::vector<double> n0 = radial_bump(g, 50.0, 0.2);
    const double peak0 = n0[0];

    RadialRunReport hot = run_radial(g, n0, {1.0, 0.3, {}}, 1.0, 1e-4);
    CHECK(hot.verdict == kss::BlowupVerdict::BlowupSuspected);
    CHECK_FALSE(hot.completed);
    CHECK(hot.flag_time > 0.0);
    CHECK(hot.flag_time < 1.0);
    CHECK(hot.max_n_inf >= 10.0 * peak0);

    RadialRunReport cool = run_radial(g, n0, {1.0, 0.8, {}}, 1.0, 1e-4);
    CHECK(cool.verdict == kss::BlowupVerdict::NoBlowup);
    CHECK(cool.completed);
    CHECK(cool.max_n_inf <= 1.05 * peak0);  // limiter wins: the peak only decays
    CHECK(cool.final_state.t == doctest::Approx(1.0).epsilon(1e-9));
    // every sampled mass is the initial one
    const double m0 = radial_mass(g, n0);
    for (double m : cool.series.mass) CHECK(m == doctest::Approx(m0).epsilon(1e-11));
  }
}

TEST_CASE("dichotomy sweep: determinism, ordering, csv") {
  DichotomyParams p;
  // Coarser meshes smear the peak enough that the upwind diffusion arrests
  // the concentration; 256 cells resolves the collapse (flag near t = 0.08).
  p.cells = 256;
  p.mass = 50.0;
  p.concentration = 5.0;
  p.T = 0.3;
  p.dt = 1e-4;
  const std::vector<double> alphas{0.3, 0.55, 0.8};
  auto seq = dichotomy_experiment(alphas, p, 1);
  auto par = dichotomy_experiment(alphas, p, 3);
  REQUIRE(seq.size() == 3);
  REQUIRE(par.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(seq[i].alpha == par[i].alpha);
    CHECK(seq[i].verdict == par[i].verdict);
    CHECK(seq[i].max_n_inf == par[i].max_n_inf);
    CHECK(seq[i].flag_time == par[i].flag_time);
  }
  CHECK(seq[0].verdict == DichotomyVerdict::BlowupSuspected);
  CHECK(seq[2].verdict == DichotomyVerdict::NoBlowup);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kss_dichotomy_csv";
  fs::remove_all(dir);
  kss::write_dichotomy_csv(seq, dir.string());
  std::ifstream in(dir / "dichotomy.csv", std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CHECK(text.rfind("# ", 0) == 0);
  CHECK(text.find("alpha,verdict,max_n_inf,flag_time,end_time,note") != std::string::npos);
  CHECK(text.find("blowup_suspected") != std::string::npos);
  CHECK(text.find("no_blowup") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 3);
  fs::remove_all(dir);

  CHECK_THROWS_AS(dichotomy_experiment({}, p, 1), param_error);
  CHECK_THROWS_AS(dichotomy_experiment({1.2}, p, 1), param_error);
  CHECK_THROWS_AS(dichotomy_experiment({-0.1}, p, 1), param_error);
  CHECK_THROWS_AS(dichotomy_experiment({0.5}, p, 0), param_error);
  DichotomyParams bad = p;
  bad.concentration = 0.0;
  CHECK_THROWS_AS(dichotomy_experiment({0.5}, bad, 1), param_error);
}
