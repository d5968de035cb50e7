#include "kss/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kss/errors.hpp"

namespace kss {

Grid::Grid(int dim, std::array<int, 3> points, std::array<double, 3> box_length)
    : dim_(dim), n_(points), len_(box_length) {
  if (dim != 2 && dim != 3) throw param_error("grid dim must be 2 or 3, got " + std::to_string(dim));
  for (int a = 0; a < dim_; ++a) {
    if (n_[a] < 4) throw param_error("grid axis " + std::to_string(a) + " needs >= 4 points");
    if (n_[a] % 2 != 0) throw param_error("grid axis " + std::to_string(a) + " needs an even point count");
    if (!(len_[a] > 0.0)) throw param_error("grid axis " + std::to_string(a) + " needs positive box length");
  }
  for (int a = dim_; a < 3; ++a) {
    n_[a] = 1;
    len_[a] = 1.0;
  }

  nreal_ = 1;
  cell_volume_ = 1.0;
  volume_ = 1.0;
  for (int a = 0; a < dim_; ++a) {
    nreal_ *= static_cast<std::size_t>(n_[a]);
    cell_volume_ *= len_[a] / n_[a];
    volume_ *= len_[a];
  }
  nlast_c_ = n_[dim_ - 1] / 2 + 1;
  nmodes_ = static_cast<std::size_t>(nlast_c_);
  for (int a = 0; a + 1 < dim_; ++a) nmodes_ *= static_cast<std::size_t>(n_[a]);

  for (int a = 0; a < 3; ++a) {
    kfull_[a].assign(nmodes_, 0.0);
    kgrad_[a].assign(nmodes_, 0.0);
  }
  k2_.assign(nmodes_, 0.0);
  inv_k2_.assign(nmodes_, 0.0);
  dealias_.assign(nmodes_, 1.0);

  // Integer frequency and Nyquist handling per axis index.
  auto freq = [this](int axis, int idx) { return idx <= n_[axis] / 2 ? idx : idx - n_[axis]; };
  auto is_nyquist = [this](int axis, int idx) { return idx == n_[axis] / 2; };
  // Note: on the halved last axis idx runs 0..n/2 so freq(idx)=idx there.

  const int n0 = n_[0];
  const int n1 = dim_ == 3 ? n_[1] : nlast_c_;  // loop extents over the spectral box
  const int n2 = dim_ == 3 ? nlast_c_ : 1;

  std::size_t m = 0;
  for (int i0 = 0; i0 < n0; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i2 = 0; i2 < n2; ++i2, ++m) {
        const int idx[3] = {i0, i1, i2};
        double ksq = 0.0;
        bool cut = false;
        for (int a = 0; a < dim_; ++a) {
          const int f = a == 0 ? freq(0, idx[0]) : (a == dim_ - 1 ? idx[a] : freq(a, idx[a]));
          const int half = a == dim_ - 1 ? idx[a] == n_[a] / 2 : is_nyquist(a, idx[a]);
          // On the half axis the stored index is the positive frequency, and
          // index n/2 is the Nyquist mode; map it to -n/2 for kfull.
          const int mfreq = half ? -n_[a] / 2 : f;
          const double k = 2.0 * std::numbers::pi * mfreq / len_[a];
          kfull_[a][m] = k;
          kgrad_[a][m] = half ? 0.0 : k;
          ksq += k * k;
          if (3 * std::abs(mfreq) > n_[a]) cut = true;  // 2/3 rule: kill |m| > n/3
        }
        k2_[m] = ksq;
        inv_k2_[m] = ksq > 0.0 ? 1.0 / ksq : 0.0;
        if (cut) dealias_[m] = 0.0;
      }
    }
  }
}

std::shared_ptr<const Grid> Grid::make(int dim, std::array<int, 3> points,
                                       std::array<double, 3> box_length) {
  return std::make_shared<const Grid>(dim, points, box_length);
}

std::shared_ptr<const Grid> Grid::make_cube(int dim, int points_per_axis, double box_length) {
  return make(dim, {points_per_axis, points_per_axis, points_per_axis},
              {box_length, box_length, box_length});
}

bool Grid::same_layout(const Grid& other) const {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a)
    if (n_[a] != other.n_[a] || len_[a] != other.len_[a]) return false;
  return true;
}

}  // namespace kss
