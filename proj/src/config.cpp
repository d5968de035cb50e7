#include "kss/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "kss/csv.hpp"
#include "kss/errors.hpp"

namespace kss {

namespace {

constexpr const char* kSections[] = {"grid",     "params", "initial", "forcing", "numerics",
                                     "estimate", "sweep",  "radial",  "output"};

bool known_section(const std::string& name) {
  for (const char* s : kSections)
    if (name == s) return true;
  return false;
}

const char* family_name(ForcingSpec::Family f) {
  switch (f) {
    case ForcingSpec::Family::MovingGaussian:
      return "moving-gaussian";
    case ForcingSpec::Family::StaticGaussian:
      return "static-gaussian";
    case ForcingSpec::Family::SingleMode:
      return "single-mode";
  }
  throw contract_error("unreachable forcing family");
}

ForcingSpec::Family family_from_name(const std::string& name) {
  if (name == "moving-gaussian") return ForcingSpec::Family::MovingGaussian;
  if (name == "static-gaussian") return ForcingSpec::Family::StaticGaussian;
  if (name == "single-mode") return ForcingSpec::Family::SingleMode;
  throw param_error("forcing.family: '" + name +
                    "' is not one of moving-gaussian, static-gaussian, single-mode");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& path, const std::string& value) {
  double x = 0.0;
  const char* first = value.data();
  const char* last = first + value.size();
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last)
    throw param_error(path + ": '" + value + "' is not a number");
  return x;
}

int parse_int(const std::string& path, const std::string& value) {
  int x = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last)
    throw param_error(path + ": '" + value + "' is not an integer");
  return x;
}

bool parse_bool(const std::string& path, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw param_error(path + ": '" + value + "' is not 'true' or 'false'");
}

std::vector<std::string> split_list(const std::string& path, const std::string& value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    const std::string item =
        trim(comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start));
    if (item.empty()) throw param_error(path + ": empty list entry");
    items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

// The document and the overrides boil down to one path -> value map; every
// assembly step below pops the keys it owns, so whatever is left at the end
// is unknown by construction.
using RawMap = std::map<std::string, std::string>;

std::optional<std::string> take(RawMap& raw, const std::string& path) {
  const auto it = raw.find(path);
  if (it == raw.end()) return std::nullopt;
  std::string v = it->second;
  raw.erase(it);
  return v;
}

double take_double(RawMap& raw, const std::string& path, double def) {
  const auto v = take(raw, path);
  return v ? parse_double(path, *v) : def;
}

int take_int(RawMap& raw, const std::string& path, int def) {
  const auto v = take(raw, path);
  return v ? parse_int(path, *v) : def;
}

bool take_bool(RawMap& raw, const std::string& path, bool def) {
  const auto v = take(raw, path);
  return v ? parse_bool(path, *v) : def;
}

std::vector<double> take_double_list(RawMap& raw, const std::string& path,
                                     std::vector<double> def) {
  const auto v = take(raw, path);
  if (!v) return def;
  std::vector<double> out;
  for (const auto& item : split_list(path, *v)) out.push_back(parse_double(path, item));
  return out;
}

// A per-axis value: one entry broadcasts, `want` entries pick per axis.
template <typename T, typename Parse>
std::array<T, 3> take_axes(RawMap& raw, const std::string& path, int want,
                           std::array<T, 3> def, T tail, Parse parse) {
  const auto v = take(raw, path);
  if (!v) return def;
  const auto items = split_list(path, *v);
  std::array<T, 3> out{tail, tail, tail};
  if (items.size() == 1) {
    const T x = parse(path, items[0]);
    for (int a = 0; a < want; ++a) out[a] = x;
  } else if (static_cast<int>(items.size()) == want) {
    for (int a = 0; a < want; ++a) out[a] = parse(path, items[a]);
  } else {
    throw param_error(path + ": needs 1 or " + std::to_string(want) + " values for a " +
                      std::to_string(want) + "-axis grid, got " + std::to_string(items.size()));
  }
  return out;
}

void tokenize_document(const std::string& text, RawMap& raw) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw param_error("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section))
        throw param_error("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw param_error("line " + std::to_string(lineno) +
                        ": expected 'key = value' or a [section] header");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw param_error("line " + std::to_string(lineno) + ": empty key");
    if (section.empty() && key != "mode")
      throw param_error("line " + std::to_string(lineno) + ": key '" + key +
                        "' appears before any [section] header (only 'mode' may)");
    const std::string path = section.empty() ? key : section + "." + key;
    if (!raw.emplace(path, value).second) throw param_error("duplicate key '" + path + "'");
  }
}

void apply_overrides(const std::vector<std::string>& overrides, RawMap& raw) {
  RawMap seen;
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw param_error("override '" + ov + "' is not of the form key=value");
    const std::string path = trim(ov.substr(0, eq));
    const std::string value = trim(ov.substr(eq + 1));
    if (path.empty()) throw param_error("override '" + ov + "' has an empty key");
    const auto dot = path.find('.');
    if (dot == std::string::npos) {
      if (path != "mode")
        throw param_error("override key '" + path + "' has no section (use section.key)");
    } else if (!known_section(path.substr(0, dot))) {
      throw param_error("override key '" + path + "' names an unknown section");
    }
    if (!seen.emplace(path, value).second)
      throw param_error("override key '" + path + "' given twice");
    raw[path] = value;  // overrides replace document values
  }
}

void require(bool ok, const char* msg) {
  if (!ok) throw param_error(msg);
}

std::string join17(const double* x, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ", ";
    out += format_g17(x[i]);
  }
  return out;
}

}  // namespace

const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Simulate:
      return "simulate";
    case RunMode::ProbeLinear:
      return "probe-linear";
    case RunMode::SweepAlpha:
      return "sweep-alpha";
    case RunMode::Radial:
      return "radial";
    case RunMode::Verify:
      return "verify";
  }
  throw contract_error("unreachable run mode");
}

RunMode run_mode_from_name(const std::string& name) {
  if (name == "simulate") return RunMode::Simulate;
  if (name == "probe-linear") return RunMode::ProbeLinear;
  if (name == "sweep-alpha") return RunMode::SweepAlpha;
  if (name == "radial") return RunMode::Radial;
  if (name == "verify") return RunMode::Verify;
  throw param_error("mode: '" + name +
                    "' is not one of simulate, probe-linear, sweep-alpha, radial, verify");
}

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides) {
  RawMap raw;
  tokenize_document(text, raw);
  apply_overrides(overrides, raw);

  ExperimentConfig c;
  if (const auto m = take(raw, "mode")) {
    c.mode = run_mode_from_name(*m);
    c.mode_explicit = true;
  }

  c.grid.dim = take_int(raw, "grid.dim", c.grid.dim);
  require(c.grid.dim == 2 || c.grid.dim == 3, "grid.dim must be 2 or 3");
  if (c.grid.dim == 3) {
    // The declared defaults describe a square; a cube when the grid is 3-d.
    c.grid.points[2] = c.grid.points[1];
    c.grid.lengths[2] = c.grid.lengths[1];
  }
  c.grid.points = take_axes<int>(raw, "grid.points", c.grid.dim, c.grid.points, 1, parse_int);
  c.grid.lengths =
      take_axes<double>(raw, "grid.lengths", c.grid.dim, c.grid.lengths, 1.0, parse_double);
  for (int a = 0; a < c.grid.dim; ++a) {
    require(c.grid.points[a] >= 4, "grid.points: every axis needs at least 4 points");
    require(c.grid.lengths[a] > 0.0, "grid.lengths must be positive");
  }
  if (c.grid.dim == 2) {
    c.grid.points[2] = 1;
    c.grid.lengths[2] = 1.0;
  }

  c.params.K_F = take_double(raw, "params.K_F", c.params.K_F);
  require(c.params.K_F > 0.0, "params.K_F must be positive");
  c.params.alpha = take_double(raw, "params.alpha", c.params.alpha);
  require(c.params.alpha > 0.0, "params.alpha must be positive");
  if (const auto v = take(raw, "params.lower_const")) {
    c.params.lower_const = parse_double("params.lower_const", *v);
    require(*c.params.lower_const > 0.0, "params.lower_const must be positive");
  }
  c.params.g = take_double(raw, "params.g", c.params.g);
  require(c.params.g >= 0.0, "params.g must be nonnegative");
  c.params.fluid_free = take_bool(raw, "params.fluid_free", c.params.fluid_free);

  c.initial.n_background = take_double(raw, "initial.n_background", c.initial.n_background);
  c.initial.n_mass = take_double(raw, "initial.n_mass", c.initial.n_mass);
  c.initial.n_width = take_double(raw, "initial.n_width", c.initial.n_width);
  c.initial.n_amplitude = take_double(raw, "initial.n_amplitude", c.initial.n_amplitude);
  c.initial.c_background = take_double(raw, "initial.c_background", c.initial.c_background);
  c.initial.c_mass = take_double(raw, "initial.c_mass", c.initial.c_mass);
  c.initial.c_width = take_double(raw, "initial.c_width", c.initial.c_width);
  c.initial.c_amplitude = take_double(raw, "initial.c_amplitude", c.initial.c_amplitude);
  require(c.initial.n_background >= 0.0, "initial.n_background must be nonnegative");
  require(c.initial.c_background >= 0.0, "initial.c_background must be nonnegative");
  require(c.initial.n_mass >= 0.0, "initial.n_mass must be nonnegative");
  require(c.initial.c_mass >= 0.0, "initial.c_mass must be nonnegative");
  require(c.initial.n_width > 0.0, "initial.n_width must be positive");
  require(c.initial.c_width > 0.0, "initial.c_width must be positive");
  require(c.initial.n_amplitude > 0.0, "initial.n_amplitude must be positive");
  require(c.initial.c_amplitude > 0.0, "initial.c_amplitude must be positive");

  if (const auto v = take(raw, "forcing.family")) c.forcing.spec.family = family_from_name(*v);
  c.forcing.spec.amplitude = take_double(raw, "forcing.amplitude", c.forcing.spec.amplitude);
  c.forcing.spec.width = take_double(raw, "forcing.width", c.forcing.spec.width);
  c.forcing.spec.mass = take_double(raw, "forcing.mass", c.forcing.spec.mass);
  c.forcing.spec.speed =
      take_axes<double>(raw, "forcing.speed", 3, c.forcing.spec.speed, 0.0, parse_double);
  c.forcing.spec.center_frac =
      take_axes<double>(raw, "forcing.center", 3, c.forcing.spec.center_frac, 0.5, parse_double);
  c.forcing.init_K = take_double(raw, "forcing.init_K", c.forcing.init_K);
  require(c.forcing.spec.amplitude > 0.0, "forcing.amplitude must be positive");
  require(c.forcing.spec.width > 0.0, "forcing.width must be positive");
  require(c.forcing.spec.mass > 0.0, "forcing.mass must be positive");
  require(c.forcing.init_K > 0.0, "forcing.init_K must be positive");

  c.numerics.dt = take_double(raw, "numerics.dt", c.numerics.dt);
  require(c.numerics.dt > 0.0, "numerics.dt must be positive");
  c.numerics.T = take_double(raw, "numerics.T", c.numerics.T);
  require(c.numerics.T >= 0.0, "numerics.T must be nonnegative");
  c.numerics.output_every = take_int(raw, "numerics.output_every", c.numerics.output_every);
  require(c.numerics.output_every >= 1, "numerics.output_every must be at least 1");
  c.numerics.cfl_safety = take_double(raw, "numerics.cfl_safety", c.numerics.cfl_safety);
  require(c.numerics.cfl_safety > 0.0 && c.numerics.cfl_safety <= 1.0,
          "numerics.cfl_safety must lie in (0, 1]");
  c.numerics.dt_floor_frac = take_double(raw, "numerics.dt_floor_frac", c.numerics.dt_floor_frac);
  require(c.numerics.dt_floor_frac > 0.0 && c.numerics.dt_floor_frac < 1.0,
          "numerics.dt_floor_frac must lie in (0, 1)");
  c.numerics.growth_factor = take_double(raw, "numerics.growth_factor", c.numerics.growth_factor);
  require(c.numerics.growth_factor > 1.0, "numerics.growth_factor must exceed 1");
  c.numerics.slope_tolerance =
      take_double(raw, "numerics.slope_tolerance", c.numerics.slope_tolerance);
  c.numerics.undershoot_tol =
      take_double(raw, "numerics.undershoot_tol", c.numerics.undershoot_tol);
  require(c.numerics.undershoot_tol >= 0.0, "numerics.undershoot_tol must be nonnegative");

  c.estimate.p = take_double(raw, "estimate.p", c.estimate.p);
  c.estimate.q = take_double(raw, "estimate.q", c.estimate.q);
  c.estimate.r = take_double(raw, "estimate.r", c.estimate.r);
  c.estimate.theta = take_double(raw, "estimate.theta", c.estimate.theta);
  c.estimate.theta_init = take_double(raw, "estimate.theta_init", c.estimate.theta_init);
  c.estimate.beta = take_double(raw, "estimate.beta", c.estimate.beta);
  c.estimate.eta = take_double(raw, "estimate.eta", c.estimate.eta);
  validate_estimate_spec(c.estimate);

  if (const auto v = take(raw, "sweep.target")) c.sweep.target = probe_target_from_name(*v);
  c.sweep.amplitudes = take_double_list(raw, "sweep.amplitudes", c.sweep.amplitudes);
  c.sweep.alphas = take_double_list(raw, "sweep.alphas", c.sweep.alphas);
  require(!c.sweep.amplitudes.empty(), "sweep.amplitudes must not be empty");
  require(!c.sweep.alphas.empty(), "sweep.alphas must not be empty");
  for (double a : c.sweep.amplitudes)
    require(a >= 0.0, "sweep.amplitudes must be nonnegative (0 runs unforced)");
  for (double a : c.sweep.alphas) require(a > 0.0, "sweep.alphas must be positive");

  c.radial.R = take_double(raw, "radial.R", c.radial.R);
  require(c.radial.R > 0.0, "radial.R must be positive");
  c.radial.cells = take_int(raw, "radial.cells", c.radial.cells);
  require(c.radial.cells >= 3, "radial.cells must be at least 3");
  c.radial.dim = take_int(raw, "radial.dim", c.radial.dim);
  require(c.radial.dim == 2 || c.radial.dim == 3, "radial.dim must be 2 or 3");
  c.radial.mass = take_double(raw, "radial.mass", c.radial.mass);
  require(c.radial.mass > 0.0, "radial.mass must be positive");
  c.radial.concentration = take_double(raw, "radial.concentration", c.radial.concentration);
  require(c.radial.concentration > 0.0, "radial.concentration must be positive");
  c.radial.dt_floor = take_double(raw, "radial.dt_floor", c.radial.dt_floor);
  require(c.radial.dt_floor >= 0.0, "radial.dt_floor must be nonnegative");
  c.radial.dt_max_factor = take_double(raw, "radial.dt_max_factor", c.radial.dt_max_factor);
  require(c.radial.dt_max_factor >= 1.0, "radial.dt_max_factor must be at least 1");

  if (const auto v = take(raw, "output.dir")) c.output.dir = *v;
  require(!c.output.dir.empty(), "output.dir must not be empty");
  require(c.output.dir.find_first_of("#;") == std::string::npos,
          "output.dir must not contain '#' or ';'");
  c.output.checkpoint = take_bool(raw, "output.checkpoint", c.output.checkpoint);

  if (!raw.empty()) throw param_error("unknown key '" + raw.begin()->first + "'");

  // Conditions that only bind the probe: the fitted target must be admissible
  // for these exponents, and the fit itself needs at least 4 forced runs.
  if (c.mode == RunMode::ProbeLinear) {
    validate_estimate_spec(c.estimate, c.sweep.target);
    int positive = 0;
    for (double a : c.sweep.amplitudes)
      if (a > 0.0) ++positive;
    require(positive >= 4, "sweep.amplitudes: the scaling fit needs at least 4 positive entries");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "mode = " << run_mode_name(c.mode) << "\n";

  o << "\n[grid]\n";
  o << "dim = " << c.grid.dim << "\n";
  o << "points = ";
  for (int a = 0; a < c.grid.dim; ++a) o << (a ? ", " : "") << c.grid.points[a];
  o << "\n";
  o << "lengths = " << join17(c.grid.lengths.data(), c.grid.dim) << "\n";

  o << "\n[params]\n";
  o << "K_F = " << format_g17(c.params.K_F) << "\n";
  o << "alpha = " << format_g17(c.params.alpha) << "\n";
  if (c.params.lower_const) o << "lower_const = " << format_g17(*c.params.lower_const) << "\n";
  o << "g = " << format_g17(c.params.g) << "\n";
  o << "fluid_free = " << (c.params.fluid_free ? "true" : "false") << "\n";

  o << "\n[initial]\n";
  o << "n_background = " << format_g17(c.initial.n_background) << "\n";
  o << "n_mass = " << format_g17(c.initial.n_mass) << "\n";
  o << "n_width = " << format_g17(c.initial.n_width) << "\n";
  o << "n_amplitude = " << format_g17(c.initial.n_amplitude) << "\n";
  o << "c_background = " << format_g17(c.initial.c_background) << "\n";
  o << "c_mass = " << format_g17(c.initial.c_mass) << "\n";
  o << "c_width = " << format_g17(c.initial.c_width) << "\n";
  o << "c_amplitude = " << format_g17(c.initial.c_amplitude) << "\n";

  o << "\n[forcing]\n";
  o << "family = " << family_name(c.forcing.spec.family) << "\n";
  o << "amplitude = " << format_g17(c.forcing.spec.amplitude) << "\n";
  o << "width = " << format_g17(c.forcing.spec.width) << "\n";
  o << "mass = " << format_g17(c.forcing.spec.mass) << "\n";
  o << "speed = " << join17(c.forcing.spec.speed.data(), 3) << "\n";
  o << "center = " << join17(c.forcing.spec.center_frac.data(), 3) << "\n";
  o << "init_K = " << format_g17(c.forcing.init_K) << "\n";

  o << "\n[numerics]\n";
  o << "dt = " << format_g17(c.numerics.dt) << "\n";
  o << "T = " << format_g17(c.numerics.T) << "\n";
  o << "output_every = " << c.numerics.output_every << "\n";
  o << "cfl_safety = " << format_g17(c.numerics.cfl_safety) << "\n";
  o << "dt_floor_frac = " << format_g17(c.numerics.dt_floor_frac) << "\n";
  o << "growth_factor = " << format_g17(c.numerics.growth_factor) << "\n";
  o << "slope_tolerance = " << format_g17(c.numerics.slope_tolerance) << "\n";
  o << "undershoot_tol = " << format_g17(c.numerics.undershoot_tol) << "\n";

  o << "\n[estimate]\n";
  o << "p = " << format_g17(c.estimate.p) << "\n";
  o << "q = " << format_g17(c.estimate.q) << "\n";
  o << "r = " << format_g17(c.estimate.r) << "\n";
  o << "theta = " << format_g17(c.estimate.theta) << "\n";
  o << "theta_init = " << format_g17(c.estimate.theta_init) << "\n";
  o << "beta = " << format_g17(c.estimate.beta) << "\n";
  o << "eta = " << format_g17(c.estimate.eta) << "\n";

  o << "\n[sweep]\n";
  o << "target = " << probe_target_name(c.sweep.target) << "\n";
  o << "amplitudes = "
    << join17(c.sweep.amplitudes.data(), static_cast<int>(c.sweep.amplitudes.size())) << "\n";
  o << "alphas = " << join17(c.sweep.alphas.data(), static_cast<int>(c.sweep.alphas.size()))
    << "\n";

  o << "\n[radial]\n";
  o << "R = " << format_g17(c.radial.R) << "\n";
  o << "cells = " << c.radial.cells << "\n";
  o << "dim = " << c.radial.dim << "\n";
  o << "mass = " << format_g17(c.radial.mass) << "\n";
  o << "concentration = " << format_g17(c.radial.concentration) << "\n";
  o << "dt_floor = " << format_g17(c.radial.dt_floor) << "\n";
  o << "dt_max_factor = " << format_g17(c.radial.dt_max_factor) << "\n";

  o << "\n[output]\n";
  o << "dir = " << c.output.dir << "\n";
  o << "checkpoint = " << (c.output.checkpoint ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace kss
