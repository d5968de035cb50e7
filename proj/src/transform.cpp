#include "kss/transform.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "kss/errors.hpp"

namespace kss {

namespace {
// FFTW's planner is not thread-safe; serialize plan create/destroy globally.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Transform::Transform(GridPtr grid) : grid_(std::move(grid)) {
  const Grid& g = *grid_;
  rbuf_ = fftw_alloc_real(g.nreal());
  fftw_complex* cb = fftw_alloc_complex(g.nmodes());
  cbuf_ = cb;
  if (!rbuf_ || !cb) throw error("transform buffer allocation failed");

  int dims[3] = {g.points(0), g.points(1), g.points(2)};
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_plan fwd = fftw_plan_dft_r2c(g.dim(), dims, rbuf_, cb, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r(g.dim(), dims, cb, rbuf_, FFTW_ESTIMATE);
  if (!fwd || !inv) throw error("FFTW plan creation failed");
  plan_fwd_ = fwd;
  plan_inv_ = inv;
}

Transform::~Transform() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  }
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

void Transform::forward(const double* real, double* spec) {
  const Grid& g = *grid_;
  std::memcpy(rbuf_, real, g.nreal() * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(spec, cbuf_, 2 * g.nmodes() * sizeof(double));
}

void Transform::inverse(const double* spec, double* real) {
  const Grid& g = *grid_;
  std::memcpy(cbuf_, spec, 2 * g.nmodes() * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / static_cast<double>(g.nreal());
  for (std::size_t i = 0; i < g.nreal(); ++i) real[i] = rbuf_[i] * scale;
}

void Transform::forward(const ScalarField& f, SpectralScalar& out) {
  require_same_grid(*f.grid, *grid_, "Transform::forward");
  if (out.a.empty()) out = SpectralScalar(grid_);
  forward(f.data(), out.data());
}

void Transform::inverse(const SpectralScalar& s, ScalarField& out) {
  require_same_grid(*s.grid, *grid_, "Transform::inverse");
  if (out.v.empty()) out = ScalarField(grid_);
  inverse(s.data(), out.data());
}

void Transform::forward(const VectorField& w, SpectralVector& out) {
  require_same_grid(*w.grid, *grid_, "Transform::forward");
  if (out.comp[0].empty()) out = SpectralVector(grid_);
  for (int a = 0; a < grid_->dim(); ++a) forward(w.data(a), out.data(a));
}

void Transform::inverse(const SpectralVector& s, VectorField& out) {
  require_same_grid(*s.grid, *grid_, "Transform::inverse");
  if (out.comp[0].empty()) out = VectorField(grid_);
  for (int a = 0; a < grid_->dim(); ++a) inverse(s.data(a), out.data(a));
}

}  // namespace kss
