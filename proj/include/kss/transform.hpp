#pragma once

#include "kss/field.hpp"
#include "kss/grid.hpp"

namespace kss {

// FFTW-backed real<->half-complex transforms for one grid.
//
// Plans are created with FFTW_ESTIMATE (deterministic plan choice) on buffers
// this object owns; forward/inverse copy through those buffers, so caller
// arrays need no special alignment and c2r input destruction never touches
// caller data. Plan creation and destruction go through the global FFTW
// planner lock. A Transform instance is not safe for concurrent use — give
// each thread its own.
class Transform {
 public:
  explicit Transform(GridPtr grid);
  ~Transform();
  Transform(const Transform&) = delete;
  Transform& operator=(const Transform&) = delete;

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  // real (nreal) -> interleaved complex (2*nmodes), unnormalized.
  void forward(const double* real, double* spec);
  // interleaved complex -> real, scaled by 1/nreal so inverse(forward(x)) = x.
  void inverse(const double* spec, double* real);

  void forward(const ScalarField& f, SpectralScalar& out);
  void inverse(const SpectralScalar& s, ScalarField& out);
  void forward(const VectorField& w, SpectralVector& out);
  void inverse(const SpectralVector& s, VectorField& out);

 private:
  GridPtr grid_;
  double* rbuf_;    // fftw_malloc'd, nreal
  void* cbuf_;      // fftw_malloc'd, nmodes fftw_complex
  void* plan_fwd_;  // fftw_plan
  void* plan_inv_;
};

}  // namespace kss
