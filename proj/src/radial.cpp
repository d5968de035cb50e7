#include "kss/radial.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "kss/csv.hpp"
#include "kss/errors.hpp"

namespace kss {
namespace {

// Solves a symmetric tridiagonal system with positive diagonal dominance
// (Thomas elimination; pivoting is unnecessary for these M-matrices).
// lower[i] couples row i to i-1 and equals upper[i-1] by symmetry; both are
// passed as the conductance array g of length n+1 with g[0] = g[n] = 0.
std::vector<double> solve_conductance_system(const std::vector<double>& g,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& b) {
  const std::size_t n = diag.size();
  std::vector<double> cp(n, 0.0), dp(n, 0.0), x(n, 0.0);
  double denom = diag[0];
  cp[0] = -g[1] / denom;
  dp[0] = b[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] + g[i] * cp[i - 1];
    cp[i] = i + 1 < n ? -g[i + 1] / denom : 0.0;
    dp[i] = (b[i] + g[i] * dp[i - 1]) / denom;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

double sphere_area_coeff(int dim) {
  return dim == 3 ? 4.0 * std::numbers::pi : 2.0 * std::numbers::pi;
}

}  // namespace

RadialGrid RadialGrid::make(double R, int cells, int dim) {
  if (!(R > 0.0)) throw param_error("ball radius must be positive");
  if (cells < 3) throw param_error("radial mesh needs at least 3 cells");
  if (dim != 2 && dim != 3) throw param_error("radial mesh dimension must be 2 or 3");
  RadialGrid g;
  g.R = R;
  g.cells = cells;
  g.dim = dim;
  g.faces.resize(cells + 1);
  g.centers.resize(cells);
  g.face_area.resize(cells + 1);
  g.shell_volume.resize(cells);
  const double omega = sphere_area_coeff(dim);
  for (int j = 0; j <= cells; ++j) {
    g.faces[j] = R * j / cells;
    g.face_area[j] = omega * std::pow(g.faces[j], dim - 1);
  }
  for (int i = 0; i < cells; ++i) {
    g.centers[i] = 0.5 * (g.faces[i] + g.faces[i + 1]);
    g.shell_volume[i] =
        omega / dim * (std::pow(g.faces[i + 1], dim) - std::pow(g.faces[i], dim));
  }
  return g;
}

double radial_mass(const RadialGrid& g, const std::vector<double>& n) {
  if (n.size() != static_cast<std::size_t>(g.cells))
    throw structural_error("radial profile length does not match the mesh");
  double m = 0.0;
  for (int i = 0; i < g.cells; ++i) m += n[i] * g.shell_volume[i];
  return m;
}

std::vector<double> solve_c_radial(const RadialGrid& g, const std::vector<double>& n) {
  const auto m = static_cast<std::size_t>(g.cells);
  if (n.size() != m) throw structural_error("radial profile length does not match the mesh");
  for (double v : n)
    if (!std::isfinite(v)) throw param_error("signal solve needs a finite density profile");

  const double h = g.spacing();
  // Face conductances A_j / h; the j = 0 entry is zero through the face area
  // (coordinate symmetry) and the outer face is excluded (no-flux).
  std::vector<double> cond(m + 1, 0.0);
  for (std::size_t j = 1; j < m; ++j) cond[j] = g.face_area[j] / h;
  std::vector<double> diag(m), b(m);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = cond[i] + cond[i + 1] + g.shell_volume[i];
    b[i] = g.shell_volume[i] * n[i];
  }
  std::vector<double> c = solve_conductance_system(cond, diag, b);

  // Componentwise backward error: the residual of each row measured against
  // that row's own activity (the usual stability criterion; the matrix norm
  // grows like 1/h^2, so scaling by b alone would be meaningless).
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double down = i > 0 ? cond[i] * c[i - 1] : 0.0;
    const double up = i + 1 < m ? cond[i + 1] * c[i + 1] : 0.0;
    const double row = std::fabs(diag[i] * c[i]) + std::fabs(down) + std::fabs(up) + std::fabs(b[i]);
    const double res = std::fabs(diag[i] * c[i] - down - up - b[i]);
    if (row > 0.0) worst = std::max(worst, res / row);
  }
  if (worst > 1e-12)
    throw contract_error("signal solve left a residual above 1e-12 of the row scale");
  return c;
}

std::vector<double> radial_bump(const RadialGrid& g, double mass, double width) {
  if (!(mass > 0.0)) throw param_error("bump mass must be positive");
  if (!(width > 0.0)) throw param_error("bump width must be positive");
  std::vector<double> n(g.cells);
  for (int i = 0; i < g.cells; ++i) {
    const double r = g.centers[i] / width;
    n[i] = std::exp(-r * r);
  }
  const double raw = radial_mass(g, n);
  for (double& v : n) v *= mass / raw;
  return n;
}

RadialState step_radial(const RadialGrid& g, const RadialState& state, const FluxLimiter& limiter,
                        double dt, double cfl_safety) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw param_error("time step must be positive and finite");
  if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
    throw param_error("cfl safety factor must lie in (0, 1]");
  const auto m = static_cast<std::size_t>(g.cells);
  if (state.n.size() != m) throw structural_error("radial profile length does not match the mesh");

  const double h = g.spacing();
  const std::vector<double> c = solve_c_radial(g, state.n);

  // Chemotactic face velocities w = F(c_r^2) c_r on interior faces, and the
  // positivity-preserving bound on the explicit part: each cell may not push
  // out more than its own content, dt * outflow_rate <= V_i.
  std::vector<double> w(m + 1, 0.0);
  double dt_max = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < m; ++j) {
    const double cr = (c[j] - c[j - 1]) / h;
    w[j] = flux_limiter_eval(limiter, cr * cr) * cr;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double out_rate =
        g.face_area[i + 1] * std::max(w[i + 1], 0.0) + g.face_area[i] * std::max(-w[i], 0.0);
    if (out_rate > 0.0) dt_max = std::min(dt_max, cfl_safety * g.shell_volume[i] / out_rate);
  }
  if (dt > dt_max) {
    std::ostringstream os;
    os << "chemotactic flux limit exceeded: dt = " << dt
       << " is above the positivity bound of the explicit advection (" << dt_max << ")";
    throw cfl_error(os.str(), dt_max);
  }

  // Explicit upwind advection in conservative face form; fluxes at r = 0 and
  // r = R are zero, so the shell-weighted total telescopes.
  std::vector<double> flow(m + 1, 0.0);
  for (std::size_t j = 1; j < m; ++j) {
    const double n_up = w[j] > 0.0 ? state.n[j - 1] : state.n[j];
    flow[j] = g.face_area[j] * w[j] * n_up;
  }
  std::vector<double> nstar(m);
  for (std::size_t i = 0; i < m; ++i)
    nstar[i] = state.n[i] - dt * (flow[i + 1] - flow[i]) / g.shell_volume[i];

  // Implicit diffusion: (V/dt + L) n_new = (V/dt) n_star with the same
  // conductance stencil as the signal solve (an M-matrix, so positivity of
  // n_star is preserved).
  std::vector<double> cond(m + 1, 0.0);
  for (std::size_t j = 1; j < m; ++j) cond[j] = g.face_area[j] / h;
  std::vector<double> diag(m), b(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double vdt = g.shell_volume[i] / dt;
    diag[i] = cond[i] + cond[i + 1] + vdt;
    b[i] = vdt * nstar[i];
  }
  RadialState out;
  out.t = state.t + dt;
  out.n = solve_conductance_system(cond, diag, b);
  for (double v : out.n)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "density left the finite range during the step from t = " << state.t;
      throw numerical_abort(os.str(), 0);
    }
  out.c = solve_c_radial(g, out.n);
  return out;
}

RadialRunReport run_radial(const RadialGrid& g, const std::vector<double>& n0,
                           const FluxLimiter& limiter, double T, double dt,
                           const RadialControls& ctl) {
  if (!(T > 0.0) || !std::isfinite(T)) throw param_error("final time must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw param_error("time step must be positive and finite");
  if (ctl.output_every < 1) throw param_error("output interval must be at least one step");

  RadialRunReport rep;
  RadialState st;
  st.t = 0.0;
  st.n = n0;
  st.c = solve_c_radial(g, n0);

  bool flagged = false;
  auto sample = [&](double current_dt) {
    rep.series.times.push_back(st.t);
    rep.series.mass.push_back(radial_mass(g, st.n));
    const double ninf = *std::max_element(st.n.begin(), st.n.end());
    rep.series.n_inf.push_back(ninf);
    rep.series.min_n.push_back(*std::min_element(st.n.begin(), st.n.end()));
    rep.max_n_inf = std::max(rep.max_n_inf, ninf);
    if (rep.series.size() >= 2 &&
        detect_blowup(rep.series.times, rep.series.n_inf, ctl.blowup, current_dt) ==
            BlowupVerdict::BlowupSuspected) {
      rep.verdict = BlowupVerdict::BlowupSuspected;
      rep.flag_time = st.t;
      flagged = true;
    }
  };

  const double dt_cap = dt * ctl.dt_max_factor;
  double dt_cur = std::min(dt, T);
  long accepted = 0;
  sample(dt_cur);
  try {
    while (!flagged && st.t < T * (1.0 - 1e-12)) {
      const double step_dt = std::min(dt_cur, T - st.t);
      try {
        st = step_radial(g, st, limiter, step_dt, ctl.cfl_safety);
      } catch (const cfl_error& e) {
        dt_cur = std::min(e.suggested_dt, 0.5 * dt_cur);
        if (dt_cur < ctl.blowup.dt_floor) {
          // A collapsing admissible step is the blow-up signature itself.
          rep.verdict = BlowupVerdict::BlowupSuspected;
          rep.flag_time = st.t;
          flagged = true;
        }
        continue;
      }
      ++accepted;
      if (dt_cur < dt_cap && step_dt >= dt_cur * (1.0 - 1e-12))
        dt_cur = std::min(dt_cur * 1.1, dt_cap);
      if (accepted % ctl.output_every == 0 || st.t >= T * (1.0 - 1e-12)) sample(dt_cur);
    }
    rep.completed = !flagged;
  } catch (const numerical_abort& e) {
    rep.failure = e.what();
  }
  rep.final_state = st;
  return rep;
}

const char* dichotomy_verdict_name(DichotomyVerdict v) {
  switch (v) {
    case DichotomyVerdict::NoBlowup:
      return "no_blowup";
    case DichotomyVerdict::BlowupSuspected:
      return "blowup_suspected";
    case DichotomyVerdict::Inconclusive:
      return "inconclusive";
  }
  throw contract_error("unknown dichotomy verdict");
}

std::vector<DichotomyRow> dichotomy_experiment(const std::vector<double>& alphas,
                                               const DichotomyParams& params, int threads) {
  if (alphas.empty()) throw param_error("the alpha sweep needs at least one alpha");
  for (double a : alphas)
    if (!(a > 0.0) || a > 1.0) throw param_error("sweep alphas must lie in (0, 1]");
  if (threads < 1) throw param_error("thread count must be at least 1");
  if (!(params.concentration > 0.0)) throw param_error("concentration must be positive");

  const RadialGrid g = RadialGrid::make(params.R, params.cells, params.dim);
  const std::vector<double> n0 = radial_bump(g, params.mass, params.R / params.concentration);

  std::vector<DichotomyRow> rows(alphas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < alphas.size(); i = next.fetch_add(1)) {
      DichotomyRow& row = rows[i];
      row.alpha = alphas[i];
      FluxLimiter lim = params.limiter;
      lim.alpha = alphas[i];
      try {
        RadialRunReport rep = run_radial(g, n0, lim, params.T, params.dt, params.controls);
        row.max_n_inf = rep.max_n_inf;
        row.end_time = rep.final_state.t;
        if (!rep.failure.empty()) {
          row.verdict = DichotomyVerdict::Inconclusive;
          row.note = rep.failure;
        } else if (rep.verdict == BlowupVerdict::BlowupSuspected) {
          row.verdict = DichotomyVerdict::BlowupSuspected;
          row.flag_time = rep.flag_time;
        } else {
          row.verdict = DichotomyVerdict::NoBlowup;
        }
      } catch (const std::exception& e) {
        row.verdict = DichotomyVerdict::Inconclusive;
        row.note = e.what();
      }
    }
  };
  if (threads == 1 || alphas.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int nw = std::min<std::size_t>(threads, alphas.size());
    pool.reserve(nw);
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_dichotomy_csv(const std::vector<DichotomyRow>& rows, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir + ": " + ec.message());
  CsvWriter w(out_dir + "/dichotomy.csv",
              "dichotomy v1: per-alpha verdict of the radial sweep; flag_time 0 means no "
              "blow-up flag was raised");
  w.header({"alpha", "verdict", "max_n_inf", "flag_time", "end_time", "note"});
  for (const auto& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    w.row_mixed({format_g17(r.alpha), dichotomy_verdict_name(r.verdict), format_g17(r.max_n_inf),
                 format_g17(r.flag_time), format_g17(r.end_time), note});
  }
  w.close();
}

}  // namespace kss
