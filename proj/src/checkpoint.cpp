#include "kss/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "kss/errors.hpp"

namespace kss {
namespace {

constexpr char kMagic[4] = {'K', 'S', 'S', '1'};

// The format is little-endian on disk; byte-swap on big-endian hosts.
template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char* p = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0, j = sizeof(T) - 1; i < j; ++i, --j) std::swap(p[i], p[j]);
  }
  return v;
}

void put_i32(std::ostream& out, std::int32_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  bits = to_le(bits);
  out.write(reinterpret_cast<const char*>(&bits), 8);
}

void put_array(std::ostream& out, const double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(8 * n));
  } else {
    for (std::size_t i = 0; i < n; ++i) put_f64(out, p[i]);
  }
}

bool get_i32(std::istream& in, std::int32_t& v) {
  if (!in.read(reinterpret_cast<char*>(&v), 4)) return false;
  v = to_le(v);
  return true;
}

bool get_f64(std::istream& in, double& v) {
  std::uint64_t bits;
  if (!in.read(reinterpret_cast<char*>(&bits), 8)) return false;
  bits = to_le(bits);
  std::memcpy(&v, &bits, 8);
  return true;
}

bool get_array(std::istream& in, double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    return static_cast<bool>(
        in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(8 * n)));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (!get_f64(in, p[i])) return false;
    return true;
  }
}

struct Header {
  int dim;
  std::array<int, 3> points;
  double time;
};

Header read_header(std::istream& in, const std::string& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw structural_error("not a state snapshot (bad magic): " + path);
  std::int32_t dim = 0;
  if (!get_i32(in, dim)) throw structural_error("truncated snapshot header: " + path);
  if (dim != 2 && dim != 3)
    throw structural_error("snapshot dimension must be 2 or 3, got " + std::to_string(dim) +
                           ": " + path);
  Header h{static_cast<int>(dim), {1, 1, 1}, 0.0};
  for (int a = 0; a < h.dim; ++a) {
    std::int32_t n = 0;
    if (!get_i32(in, n)) throw structural_error("truncated snapshot header: " + path);
    if (n < 1) throw structural_error("snapshot axis size must be positive: " + path);
    h.points[a] = static_cast<int>(n);
  }
  if (!get_f64(in, h.time)) throw structural_error("truncated snapshot header: " + path);
  return h;
}

}  // namespace

void write_checkpoint(const std::string& path, const KSSState& state) {
  if (!state.n.grid || !state.c.grid || !state.u.grid)
    throw param_error("snapshot state has unset fields");
  const Grid& g = *state.n.grid;
  require_same_grid(*state.c.grid, g, "write_checkpoint(c)");
  require_same_grid(*state.u.grid, g, "write_checkpoint(u)");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open snapshot for writing: " + path);
  out.write(kMagic, 4);
  put_i32(out, g.dim());
  for (int a = 0; a < g.dim(); ++a) put_i32(out, g.points(a));
  put_f64(out, state.t);
  put_array(out, state.n.data(), g.nreal());
  put_array(out, state.c.data(), g.nreal());
  for (int a = 0; a < g.dim(); ++a) put_array(out, state.u.data(a), g.nreal());
  out.flush();
  if (!out) throw io_error("short write on snapshot: " + path);
}

CheckpointInfo peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open snapshot: " + path);
  const Header h = read_header(in, path);
  return {h.dim, h.points, h.time};
}

KSSState read_checkpoint(const std::string& path, const GridPtr& grid) {
  if (!grid) throw param_error("read_checkpoint needs a grid");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open snapshot: " + path);
  const Header h = read_header(in, path);
  if (h.dim != grid->dim())
    throw structural_error("snapshot dimension " + std::to_string(h.dim) +
                           " does not match the grid (" + std::to_string(grid->dim()) +
                           "): " + path);
  for (int a = 0; a < h.dim; ++a)
    if (h.points[a] != grid->points(a))
      throw structural_error("snapshot axis " + std::to_string(a) + " has " +
                             std::to_string(h.points[a]) + " points, the grid has " +
                             std::to_string(grid->points(a)) + ": " + path);

  KSSState s;
  s.t = h.time;
  s.n = ScalarField(grid, 0.0);
  s.c = ScalarField(grid, 0.0);
  s.u = VectorField(grid, 0.0);
  const std::size_t nr = grid->nreal();
  if (!get_array(in, s.n.data(), nr) || !get_array(in, s.c.data(), nr))
    throw structural_error("truncated snapshot payload: " + path);
  for (int a = 0; a < h.dim; ++a)
    if (!get_array(in, s.u.data(a), nr))
      throw structural_error("truncated snapshot payload: " + path);
  // A trailing byte means the file was not produced for this grid.
  char extra;
  if (in.read(&extra, 1))
    throw structural_error("snapshot has trailing bytes beyond the state: " + path);
  return s;
}

}  // namespace kss
