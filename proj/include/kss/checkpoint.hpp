#pragma once

#include <string>

#include "kss/field.hpp"
#include "kss/kss_sim.hpp"

namespace kss {

// Binary state snapshot. Layout: the magic bytes "KSS1", dim as a 32-bit
// little-endian integer, the per-axis point counts (dim of them, 32-bit
// little-endian), the time as an 8-byte little-endian float, then the n, c
// and u-component arrays as contiguous 8-byte little-endian floats in
// row-major order. Box lengths are not stored; they come from the config
// that owns the run.
void write_checkpoint(const std::string& path, const KSSState& state);

// Header peek for inspection tools; validates magic and dim only.
struct CheckpointInfo {
  int dim = 0;
  std::array<int, 3> points = {0, 0, 0};
  double time = 0.0;
};
CheckpointInfo peek_checkpoint(const std::string& path);

// Reads a snapshot onto the given grid. structural_error when the header
// does not match the grid or the payload is truncated; io_error when the
// file cannot be opened.
KSSState read_checkpoint(const std::string& path, const GridPtr& grid);

}  // namespace kss
