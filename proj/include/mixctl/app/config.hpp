#pragma once

// Run configuration for the mixctl command-line tool, read from JSON.
// Frequencies are entered in Hz and converted to rad/s here; times are in
// seconds. See README.md for the full grammar.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixctl/functionals.hpp"
#include "mixctl/models.hpp"

namespace mixctl::app {

using json = nlohmann::json;

/// Bad or missing configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { propagate, optimize, steady_state, scan_time_cooperativity, noise_scan, switchback };

inline Mode parse_mode(const std::string& s) {
  if (s == "propagate") return Mode::propagate;
  if (s == "optimize") return Mode::optimize;
  if (s == "steady-state") return Mode::steady_state;
  if (s == "scan-time-cooperativity") return Mode::scan_time_cooperativity;
  if (s == "noise-scan") return Mode::noise_scan;
  if (s == "switchback") return Mode::switchback;
  throw ConfigError("mode: unknown mode '" + s + "'");
}

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class ModelKind { qubit, optomech };

struct ModelConfig {
  ModelKind kind = ModelKind::qubit;
  OptomechParams optomech;
};

struct GridConfig {
  double t_final = 1.0;
  std::size_t n_steps = 200;
};

/// Target state source.
struct TargetConfig {
  enum class Kind { none, diagonal, file, steady_state } kind = Kind::none;
  std::vector<double> diagonal;
  std::string path;
  double tol = 1e-9;
  double t_max = 2e-2;
};

struct KrotovConfig {
  std::optional<std::vector<double>> lambda;  // empty: choose automatically
  double auto_relative_change = 0.05;
  double ramp_fraction = 0.05;
  std::size_t max_iters = 100;
  double j_tol = 0.0;
  std::optional<double> stop_d_trace;
};

struct SteadyStateConfig {
  double tol = 1e-9;
  double t_max = 2e-2;
};

struct ScanConfig {
  std::vector<double> t_finals;  // seconds
  double threshold = 1e-4;
  std::size_t steps_per_run = 200;
  std::vector<double> constant_cooperativities;
  double constant_horizon = 5e-3;
  std::size_t constant_steps = 5000;
};

struct NoiseConfig {
  std::vector<double> epsilons{0.002, 0.005, 0.010};
  std::string controls_csv;  // optional: optimized controls from an earlier run
};

struct SwitchbackConfig {
  double extra_time = 1e-4;
  std::size_t extra_steps = 100;
  std::string controls_csv;
};

struct RunConfig {
  Mode mode = Mode::propagate;
  ModelConfig model;
  GridConfig grid;
  std::optional<std::vector<double>> guess;  // constant guess per track, native units
  FunctionalSpec functional;                 // target filled in at run time
  KrotovConfig krotov;
  TargetConfig target;
  SteadyStateConfig steady;
  ScanConfig scan;
  NoiseConfig noise;
  SwitchbackConfig switchback;
  std::filesystem::path out_dir = "out";
  std::filesystem::path config_dir = ".";
  std::uint64_t seed = 0;
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key + ": required field missing");
  return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  try {
    return require(j, key, path).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

inline double positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path + ": must be a positive number");
  return v;
}

inline double nonnegative(double v, const std::string& path) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(path + ": must be a nonnegative number");
  return v;
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError(path + "." + item.key() + ": unknown field");
  }
}

inline ModelConfig parse_model(const json& j, bool paper_scale) {
  const std::string path = "model";
  check_keys(j, {"type", "kappa_hz", "gamma_m_hz", "n_th", "n_cav", "n_res", "cooperativity", "ratio", "g_minus_hz",
                 "g_plus_hz"},
             path);
  ModelConfig m;
  const auto type = get<std::string>(j, "type", path);
  if (type == "qubit") {
    m.kind = ModelKind::qubit;
    if (j.size() > 1) throw ConfigError(path + ": the qubit model takes no parameters");
    return m;
  }
  if (type != "optomech") throw ConfigError(path + ".type: expected 'qubit' or 'optomech'");
  m.kind = ModelKind::optomech;
  OptomechParams& p = m.optomech;
  p = paper_scale ? OptomechParams::paper_scale() : OptomechParams::desk_scale();
  const double c0 = p.cooperativity();
  const double r0 = p.g_plus / p.g_minus;
  if (j.contains("kappa_hz")) p.kappa = two_pi * positive(get<double>(j, "kappa_hz", path), path + ".kappa_hz");
  if (j.contains("gamma_m_hz")) p.gamma_m = two_pi * positive(get<double>(j, "gamma_m_hz", path), path + ".gamma_m_hz");
  if (j.contains("n_th")) p.n_th = nonnegative(get<double>(j, "n_th", path), path + ".n_th");
  if (j.contains("n_cav")) p.n_cav = get<Index>(j, "n_cav", path);
  if (j.contains("n_res")) p.n_res = get<Index>(j, "n_res", path);
  const bool by_g = j.contains("g_minus_hz") || j.contains("g_plus_hz");
  const bool by_c = j.contains("cooperativity") || j.contains("ratio");
  if (by_g && by_c) throw ConfigError(path + ": give either cooperativity/ratio or g_minus_hz/g_plus_hz, not both");
  if (by_g) {
    p.g_minus = two_pi * positive(get<double>(j, "g_minus_hz", path), path + ".g_minus_hz");
    p.g_plus = two_pi * nonnegative(get<double>(j, "g_plus_hz", path), path + ".g_plus_hz");
  } else {
    const double c = positive(get_or<double>(j, "cooperativity", path, c0), path + ".cooperativity");
    const double r = nonnegative(get_or<double>(j, "ratio", path, r0), path + ".ratio");
    p.set_cooperativity(c, r);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return m;
}

inline TargetConfig parse_target(const json& j) {
  const std::string path = "target";
  check_keys(j, {"type", "diagonal", "path", "tol", "t_max_s"}, path);
  TargetConfig t;
  const auto type = get<std::string>(j, "type", path);
  if (type == "diagonal") {
    t.kind = TargetConfig::Kind::diagonal;
    t.diagonal = get<std::vector<double>>(j, "diagonal", path);
  } else if (type == "file") {
    t.kind = TargetConfig::Kind::file;
    t.path = get<std::string>(j, "path", path);
  } else if (type == "steady-state") {
    t.kind = TargetConfig::Kind::steady_state;
    t.tol = positive(get_or<double>(j, "tol", path, t.tol), path + ".tol");
    t.t_max = positive(get_or<double>(j, "t_max_s", path, t.t_max), path + ".t_max_s");
  } else {
    throw ConfigError(path + ".type: expected 'diagonal', 'file' or 'steady-state'");
  }
  return t;
}

inline KrotovConfig parse_krotov(const json& j) {
  const std::string path = "krotov";
  check_keys(j, {"lambda", "auto_relative_change", "ramp_fraction", "max_iters", "j_tol", "stop_d_trace"}, path);
  KrotovConfig k;
  if (j.contains("lambda")) {
    const json& l = j.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "auto") throw ConfigError(path + ".lambda: expected a list of numbers or \"auto\"");
    } else {
      k.lambda = get<std::vector<double>>(j, "lambda", path);
      for (double v : *k.lambda) positive(v, path + ".lambda");
    }
  }
  k.auto_relative_change =
      positive(get_or<double>(j, "auto_relative_change", path, k.auto_relative_change), path + ".auto_relative_change");
  k.ramp_fraction = get_or<double>(j, "ramp_fraction", path, k.ramp_fraction);
  if (!(k.ramp_fraction > 0.0 && k.ramp_fraction < 0.5)) throw ConfigError(path + ".ramp_fraction: must lie in (0, 0.5)");
  k.max_iters = get_or<std::size_t>(j, "max_iters", path, k.max_iters);
  if (k.max_iters < 1) throw ConfigError(path + ".max_iters: must be >= 1");
  k.j_tol = nonnegative(get_or<double>(j, "j_tol", path, k.j_tol), path + ".j_tol");
  if (j.contains("stop_d_trace")) k.stop_d_trace = positive(get<double>(j, "stop_d_trace", path), path + ".stop_d_trace");
  return k;
}

}  // namespace detail

/// Parses a config document. `paper_scale` switches the optomechanical
/// defaults before explicit fields are applied. A `mode` given here (from the
/// command line) makes the document's own "mode" field optional; if both are
/// present they must agree.
inline RunConfig parse_config(const json& doc, bool paper_scale = false, std::optional<Mode> mode = std::nullopt) {
  using namespace detail;
  const std::string root = "config";
  check_keys(doc, {"mode", "model", "grid", "guess", "functional", "krotov", "target", "steady_state", "scan", "noise",
                   "switchback", "output_dir", "seed"},
             root);
  RunConfig c;
  if (doc.contains("mode")) {
    c.mode = parse_mode(get<std::string>(doc, "mode", root));
    if (mode && *mode != c.mode) throw ConfigError("mode: the config file names a different mode than the command line");
  } else if (mode) {
    c.mode = *mode;
  } else {
    throw ConfigError("config.mode: required field missing");
  }
  c.model = parse_model(require(doc, "model", root), paper_scale);

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, {"t_final_s", "n_steps"}, "grid");
    c.grid.t_final = positive(get<double>(g, "t_final_s", "grid"), "grid.t_final_s");
    c.grid.n_steps = get<std::size_t>(g, "n_steps", "grid");
    if (c.grid.n_steps < 1) throw ConfigError("grid.n_steps: must be >= 1");
  } else if (c.mode != Mode::steady_state && c.mode != Mode::scan_time_cooperativity) {
    throw ConfigError("config.grid: required field missing");
  }

  if (doc.contains("guess")) {
    const json& g = doc.at("guess");
    check_keys(g, {"constant"}, "guess");
    std::vector<double> v = get<std::vector<double>>(g, "constant", "guess");
    const std::size_t want = c.model.kind == ModelKind::qubit ? 1 : 2;
    if (v.size() != want) {
      throw ConfigError("guess.constant: expected " + std::to_string(want) + " values, got " + std::to_string(v.size()));
    }
    // qubit rates are in 1/s; optomechanical couplings are in Hz
    if (c.model.kind == ModelKind::optomech) {
      for (double& x : v) x *= two_pi;
    }
    c.guess = std::move(v);
  }

  if (doc.contains("functional")) {
    const json& f = doc.at("functional");
    check_keys(f, {"kind", "alpha1", "alpha2"}, "functional");
    try {
      c.functional.kind = parse_functional_kind(get<std::string>(f, "kind", "functional"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("functional.kind: ") + e.what());
    }
    c.functional.alpha1 = nonnegative(get_or<double>(f, "alpha1", "functional", 0.5), "functional.alpha1");
    c.functional.alpha2 = nonnegative(get_or<double>(f, "alpha2", "functional", 0.5), "functional.alpha2");
    if (c.functional.kind == FunctionalKind::split && !(c.functional.alpha1 + c.functional.alpha2 > 0.0)) {
      throw ConfigError("functional: alpha1 + alpha2 must be positive");
    }
  }

  if (doc.contains("krotov")) c.krotov = parse_krotov(doc.at("krotov"));
  if (doc.contains("target")) c.target = parse_target(doc.at("target"));

  if (doc.contains("steady_state")) {
    const json& s = doc.at("steady_state");
    check_keys(s, {"tol", "t_max_s"}, "steady_state");
    c.steady.tol = positive(get_or<double>(s, "tol", "steady_state", c.steady.tol), "steady_state.tol");
    c.steady.t_max = positive(get_or<double>(s, "t_max_s", "steady_state", c.steady.t_max), "steady_state.t_max_s");
  }

  if (doc.contains("scan")) {
    const json& s = doc.at("scan");
    check_keys(s, {"t_final_s", "threshold", "steps_per_run", "constant_cooperativities", "constant_horizon_s",
                   "constant_steps"},
               "scan");
    c.scan.t_finals = get<std::vector<double>>(s, "t_final_s", "scan");
    for (double t : c.scan.t_finals) positive(t, "scan.t_final_s");
    c.scan.threshold = positive(get_or<double>(s, "threshold", "scan", c.scan.threshold), "scan.threshold");
    c.scan.steps_per_run = get_or<std::size_t>(s, "steps_per_run", "scan", c.scan.steps_per_run);
    c.scan.constant_cooperativities =
        get_or<std::vector<double>>(s, "constant_cooperativities", "scan", c.scan.constant_cooperativities);
    for (double v : c.scan.constant_cooperativities) positive(v, "scan.constant_cooperativities");
    c.scan.constant_horizon =
        positive(get_or<double>(s, "constant_horizon_s", "scan", c.scan.constant_horizon), "scan.constant_horizon_s");
    c.scan.constant_steps = get_or<std::size_t>(s, "constant_steps", "scan", c.scan.constant_steps);
    if (c.scan.steps_per_run < 1 || c.scan.constant_steps < 1) throw ConfigError("scan: step counts must be >= 1");
  } else if (c.mode == Mode::scan_time_cooperativity) {
    throw ConfigError("config.scan: required field missing");
  }

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, {"epsilons", "controls_csv"}, "noise");
    c.noise.epsilons = get_or<std::vector<double>>(n, "epsilons", "noise", c.noise.epsilons);
    c.noise.controls_csv = get_or<std::string>(n, "controls_csv", "noise", "");
  }

  if (doc.contains("switchback")) {
    const json& s = doc.at("switchback");
    check_keys(s, {"extra_time_s", "extra_steps", "controls_csv"}, "switchback");
    c.switchback.extra_time =
        positive(get_or<double>(s, "extra_time_s", "switchback", c.switchback.extra_time), "switchback.extra_time_s");
    c.switchback.extra_steps = get_or<std::size_t>(s, "extra_steps", "switchback", c.switchback.extra_steps);
    if (c.switchback.extra_steps < 1) throw ConfigError("switchback.extra_steps: must be >= 1");
    c.switchback.controls_csv = get_or<std::string>(s, "controls_csv", "switchback", "");
  }

  c.out_dir = get_or<std::string>(doc, "output_dir", root, "out");
  c.seed = get_or<std::uint64_t>(doc, "seed", root, 0);

  const bool needs_target = c.mode == Mode::optimize || c.mode == Mode::scan_time_cooperativity ||
                            c.mode == Mode::noise_scan || c.mode == Mode::switchback;
  if (needs_target && c.target.kind == TargetConfig::Kind::none) throw ConfigError("config.target: required field missing");
  const bool needs_functional = c.mode == Mode::optimize || c.mode == Mode::scan_time_cooperativity ||
                                ((c.mode == Mode::noise_scan && c.noise.controls_csv.empty()) ||
                                 (c.mode == Mode::switchback && c.switchback.controls_csv.empty()));
  if (needs_functional && !doc.contains("functional")) throw ConfigError("config.functional: required field missing");
  return c;
}

/// Reads and parses a config file. Relative paths inside the config are
/// resolved against the file's directory.
inline RunConfig load_config(const std::filesystem::path& file, bool paper_scale = false,
                             std::optional<Mode> mode = std::nullopt) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open '" + file.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  RunConfig c = parse_config(doc, paper_scale, mode);
  c.config_dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  return c;
}

}  // namespace mixctl::app
