#pragma once

#include <stdexcept>
#include <string>

namespace kss {

// Base class for everything this library throws deliberately.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: config values, CLI flags, inconsistent parameter combos.
struct param_error : error {
  using error::error;
};

// Malformed files or buffers: config syntax, checkpoint magic/layout, CSV.
struct structural_error : error {
  using error::error;
};

// An internal precondition was violated (caller misuse of an API contract).
struct contract_error : error {
  using error::error;
};

// Advective CFL violation; carries the largest stable step the check found.
struct cfl_error : error {
  double suggested_dt;
  cfl_error(const std::string& what, double dt) : error(what), suggested_dt(dt) {}
};

// A run produced NaN/Inf or otherwise left the representable regime.
struct numerical_abort : error {
  long step;
  numerical_abort(const std::string& what, long at_step) : error(what), step(at_step) {}
};

// Filesystem trouble: unwritable output directory, failed stream, bad path.
struct io_error : error {
  using error::error;
};

}  // namespace kss
