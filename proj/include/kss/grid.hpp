#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace kss {

// Uniform periodic box in 2 or 3 dimensions with the half-complex (r2c) mode
// layout and all per-mode tables the spectral operators need. Construction
// validates the parameters and precomputes the tables; a Grid is immutable
// afterwards, so fields share it by shared_ptr<const Grid>.
//
// Real layout: row-major over (n0, n1[, n2]). Spectral layout: row-major with
// the last axis halved to n_last/2+1 complex modes. Wavenumbers on axis j are
// 2*pi*m/box_length[j] with m in [-n_j/2, n_j/2-1]; the Nyquist index n_j/2
// carries m = -n_j/2.
class Grid {
 public:
  Grid(int dim, std::array<int, 3> points, std::array<double, 3> box_length);

  static std::shared_ptr<const Grid> make(int dim, std::array<int, 3> points,
                                          std::array<double, 3> box_length);
  // Cubic box, same point count per axis.
  static std::shared_ptr<const Grid> make_cube(int dim, int points_per_axis, double box_length);

  int dim() const { return dim_; }
  int points(int axis) const { return n_[axis]; }
  double box_length(int axis) const { return len_[axis]; }
  double spacing(int axis) const { return len_[axis] / n_[axis]; }
  double coord(int axis, int index) const { return spacing(axis) * index; }
  double cell_volume() const { return cell_volume_; }
  double volume() const { return volume_; }

  std::size_t nreal() const { return nreal_; }
  std::size_t nmodes() const { return nmodes_; }
  int modes_last() const { return nlast_c_; }  // n_last/2 + 1

  // Per-mode tables, each of length nmodes().
  // kfull: wavenumber per axis with the Nyquist index at -n/2 (used for |k|^2,
  //        projection, multipliers). kgrad: same but Nyquist zeroed, for odd
  //        (first-derivative) multipliers where the Nyquist mode has no
  //        well-defined sign.
  const double* kfull(int axis) const { return kfull_[axis].data(); }
  const double* kgrad(int axis) const { return kgrad_[axis].data(); }
  const double* k2() const { return k2_.data(); }
  const double* inv_k2() const { return inv_k2_.data(); }  // 0 at the k=0 mode
  const double* dealias_mask() const { return dealias_.data(); }  // 1 keep / 0 kill, 2/3 rule

  // Row-major real index; iz ignored when dim==2.
  std::size_t real_index(int ix, int iy, int iz = 0) const {
    return dim_ == 2 ? static_cast<std::size_t>(ix) * n_[1] + iy
                     : (static_cast<std::size_t>(ix) * n_[1] + iy) * n_[2] + iz;
  }

  bool same_layout(const Grid& other) const;

 private:
  int dim_;
  std::array<int, 3> n_;
  std::array<double, 3> len_;
  double cell_volume_;
  double volume_;
  std::size_t nreal_;
  std::size_t nmodes_;
  int nlast_c_;
  std::array<std::vector<double>, 3> kfull_;
  std::array<std::vector<double>, 3> kgrad_;
  std::vector<double> k2_;
  std::vector<double> inv_k2_;
  std::vector<double> dealias_;
};

}  // namespace kss
