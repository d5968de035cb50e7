#include "kss/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "kss/errors.hpp"
#include "kss/grid.hpp"

using kss::CheckpointInfo;
using kss::Grid;
using kss::io_error;
using kss::KSSState;
using kss::param_error;
using kss::peek_checkpoint;
using kss::read_checkpoint;
using kss::ScalarField;
using kss::structural_error;
using kss::VectorField;
using kss::write_checkpoint;

namespace {

namespace fs = std::filesystem;

fs::path tmp_file(const char* name) { return fs::temp_directory_path() / name; }

// Deterministic, irregular values so layout mistakes cannot cancel.
KSSState sample_state(const kss::GridPtr& g, double t) {
  KSSState s;
  s.t = t;
  s.n = ScalarField(g, 0.0);
  s.c = ScalarField(g, 0.0);
  s.u = VectorField(g, 0.0);
  for (std::size_t i = 0; i < g->nreal(); ++i) {
    s.n.v[i] = std::sin(0.1 * static_cast<double>(i)) + 2.0;
    s.c.v[i] = std::cos(0.07 * static_cast<double>(i)) * 0.5 + 1.0;
  }
  for (int a = 0; a < g->dim(); ++a)
    for (std::size_t i = 0; i < g->nreal(); ++i)
      s.u.comp[a][i] = std::sin(0.03 * static_cast<double>(i) + a);
  return s;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("snapshot round trip is bitwise in 2d and 3d") {
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    auto g = dim == 2 ? Grid::make(2, {12, 8, 1}, {2.0 * std::numbers::pi, 4.0, 1.0})
                      : Grid::make_cube(3, 8, 2.0 * std::numbers::pi);
    KSSState s = sample_state(g, 1.375);
    const fs::path path = tmp_file(dim == 2 ? "kss_ckpt_2d.bin" : "kss_ckpt_3d.bin");
    write_checkpoint(path.string(), s);

    CheckpointInfo info = peek_checkpoint(path.string());
    CHECK(info.dim == dim);
    for (int a = 0; a < dim; ++a) CHECK(info.points[a] == g->points(a));
    CHECK(info.time == 1.375);

    KSSState r = read_checkpoint(path.string(), g);
    CHECK(r.t == s.t);
    CHECK(r.n.v == s.n.v);
    CHECK(r.c.v == s.c.v);
    for (int a = 0; a < dim; ++a) CHECK(r.u.comp[a] == s.u.comp[a]);
    fs::remove(path);
  }
}

TEST_CASE("snapshot header layout is the documented one") {
  auto g = Grid::make(2, {4, 6, 1}, {1.0, 1.0, 1.0});
  KSSState s = sample_state(g, -0.25);
  const fs::path path = tmp_file("kss_ckpt_layout.bin");
  write_checkpoint(path.string(), s);
  std::vector<char> bytes = read_bytes(path);
  // magic + dim + 2 sizes + time + 4 arrays of 24 doubles
  REQUIRE(bytes.size() == 4 + 4 + 8 + 8 + 4 * 24 * 8);
  CHECK(bytes[0] == 'K');
  CHECK(bytes[1] == 'S');
  CHECK(bytes[2] == 'S');
  CHECK(bytes[3] == '1');
  auto le32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24;
  };
  CHECK(le32(4) == 2u);
  CHECK(le32(8) == 4u);
  CHECK(le32(12) == 6u);
  fs::remove(path);
}

TEST_CASE("snapshot corruption is refused") {
  auto g = Grid::make_cube(2, 8, 2.0 * std::numbers::pi);
  KSSState s = sample_state(g, 2.0);
  const fs::path path = tmp_file("kss_ckpt_corrupt.bin");
  write_checkpoint(path.string(), s);
  const std::vector<char> good = read_bytes(path);

  SUBCASE("bad magic") {
    std::vector<char> bad = good;
    bad[1] = 'X';
    write_bytes(path, bad);
    CHECK_THROWS_AS(peek_checkpoint(path.string()), structural_error);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g), structural_error);
  }
  SUBCASE("unsupported dimension") {
    std::vector<char> bad = good;
    bad[4] = 5;
    write_bytes(path, bad);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g), structural_error);
  }
  SUBCASE("grid mismatch") {
    auto other = Grid::make_cube(2, 16, 2.0 * std::numbers::pi);
    CHECK_THROWS_AS(read_checkpoint(path.string(), other), structural_error);
    auto g3 = Grid::make_cube(3, 8, 2.0 * std::numbers::pi);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g3), structural_error);
  }
  SUBCASE("truncated payload") {
    std::vector<char> bad(good.begin(), good.end() - 17);
    write_bytes(path, bad);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g), structural_error);
  }
  SUBCASE("truncated header") {
    std::vector<char> bad(good.begin(), good.begin() + 9);
    write_bytes(path, bad);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g), structural_error);
  }
  SUBCASE("trailing bytes") {
    std::vector<char> bad = good;
    bad.push_back('\0');
    write_bytes(path, bad);
    CHECK_THROWS_AS(read_checkpoint(path.string(), g), structural_error);
  }
  fs::remove(path);
}

TEST_CASE("snapshot io refusals") {
  auto g = Grid::make_cube(2, 8, 2.0 * std::numbers::pi);
  CHECK_THROWS_AS(read_checkpoint("/nonexistent/dir/state.bin", g), io_error);
  CHECK_THROWS_AS(peek_checkpoint("/nonexistent/dir/state.bin"), io_error);
  KSSState s = sample_state(g, 0.0);
  CHECK_THROWS_AS(write_checkpoint("/nonexistent/dir/state.bin", s), io_error);
  KSSState unset;
  CHECK_THROWS_AS(write_checkpoint(tmp_file("kss_ckpt_unset.bin").string(), unset), param_error);
}
