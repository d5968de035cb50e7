#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "kss/errors.hpp"
#include "kss/grid.hpp"

namespace kss {

using GridPtr = std::shared_ptr<const Grid>;

// Physical-space scalar on the grid's real layout.
struct ScalarField {
  GridPtr grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0) : grid(std::move(g)), v(grid->nreal(), fill) {}
  ScalarField(GridPtr g, std::vector<double> values) : grid(std::move(g)), v(std::move(values)) {
    if (v.size() != grid->nreal()) throw structural_error("ScalarField: value count does not match grid");
  }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  std::size_t size() const { return v.size(); }
};

// Physical-space vector; comp[a] is populated for a < grid->dim().
struct VectorField {
  GridPtr grid;
  std::array<std::vector<double>, 3> comp;

  VectorField() = default;
  explicit VectorField(GridPtr g, double fill = 0.0) : grid(std::move(g)) {
    for (int a = 0; a < grid->dim(); ++a) comp[a].assign(grid->nreal(), fill);
  }
  double* data(int a) { return comp[a].data(); }
  const double* data(int a) const { return comp[a].data(); }
};

// Spectral-space scalar: interleaved (re,im), 2*nmodes doubles, unnormalized
// FFT convention (inverse transform divides by the real point count).
struct SpectralScalar {
  GridPtr grid;
  std::vector<double> a;

  SpectralScalar() = default;
  explicit SpectralScalar(GridPtr g) : grid(std::move(g)), a(2 * grid->nmodes(), 0.0) {}
  double* data() { return a.data(); }
  const double* data() const { return a.data(); }
};

struct SpectralVector {
  GridPtr grid;
  std::array<std::vector<double>, 3> comp;

  SpectralVector() = default;
  explicit SpectralVector(GridPtr g) : grid(std::move(g)) {
    for (int a = 0; a < grid->dim(); ++a) comp[a].assign(2 * grid->nmodes(), 0.0);
  }
  double* data(int a) { return comp[a].data(); }
  const double* data(int a) const { return comp[a].data(); }
};

inline bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

inline bool all_finite(const ScalarField& f) { return all_finite(f.data(), f.size()); }

inline bool all_finite(const VectorField& w) {
  for (int a = 0; a < w.grid->dim(); ++a)
    if (!all_finite(w.data(a), w.grid->nreal())) return false;
  return true;
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_layout(b)) throw structural_error(std::string("grid mismatch in ") + what);
}

}  // namespace kss
