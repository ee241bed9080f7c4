#pragma once

// Mode runners of the command-line tool.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mixctl/app/config.hpp"
#include "mixctl/app/io.hpp"
#include "mixctl/mixctl.hpp"

namespace mixctl::app {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Model, guess and target resolved from a RunConfig.
struct Setup {
  SystemModel model;
  std::vector<double> guess_values;
  std::optional<Operator> target;
};

inline SystemModel build_model(const ModelConfig& m) {
  return m.kind == ModelKind::qubit ? qubit_decay_model() : optomech_model(m.optomech);
}

/// Constant guess: the configured values, else u = 0.01/s for the qubit and
/// the parameter set's (G-, G+) for the optomechanical model.
inline std::vector<double> default_guess(const RunConfig& c) {
  if (c.guess) return *c.guess;
  if (c.model.kind == ModelKind::qubit) return {0.01};
  return optomech_constant_drives(c.model.optomech);
}

inline std::filesystem::path resolve(const RunConfig& c, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : c.config_dir / path;
}

inline Operator resolve_target(const RunConfig& c, const SystemModel& model, const std::vector<double>& guess) {
  const TargetConfig& t = c.target;
  switch (t.kind) {
    case TargetConfig::Kind::diagonal: {
      if (static_cast<Index>(t.diagonal.size()) != model.dim) {
        throw ConfigError("target.diagonal: expected " + std::to_string(model.dim) + " entries");
      }
      Operator m = Operator::Zero(model.dim, model.dim);
      for (Index i = 0; i < model.dim; ++i) m(i, i) = t.diagonal[static_cast<std::size_t>(i)];
      try {
        return DensityMatrix(std::move(m)).matrix();
      } catch (const InvalidStateError& e) {
        throw ConfigError(std::string("target.diagonal: ") + e.what());
      }
    }
    case TargetConfig::Kind::file: {
      StoredState s = read_state_json(resolve(c, t.path));
      if (s.dims != model.subsystem_dims) throw ConfigError("target.path: dims do not match the model");
      try {
        return DensityMatrix(std::move(s.matrix)).matrix();
      } catch (const InvalidStateError& e) {
        throw ConfigError(std::string("target.path: ") + e.what());
      }
    }
    case TargetConfig::Kind::steady_state:
      return steady_state(model, std::span<const double>(guess), t.tol, t.t_max).state;
    case TargetConfig::Kind::none:
      break;
  }
  throw ConfigError("config.target: required field missing");
}

inline Setup make_setup(const RunConfig& c) {
  Setup s;
  s.model = build_model(c.model);
  s.guess_values = default_guess(c);
  if (s.model.controls.size() == 1 && s.guess_values[0] < 0.0) throw ConfigError("guess.constant: rate must be >= 0");
  if (c.target.kind != TargetConfig::Kind::none) s.target = resolve_target(c, s.model, s.guess_values);
  return s;
}

/// Writes a trajectory table. Control columns hold the value on the
/// interval that starts at t; the last row repeats the final interval.
inline void write_trajectory_csv(const std::filesystem::path& file, const RunConfig& c, const ControlSet& cs,
                                 const std::vector<Operator>& states, const std::vector<double>& times,
                                 const std::optional<Operator>& target) {
  std::vector<std::string> header{"t_s"};
  for (const auto& t : cs.tracks()) header.push_back(t.name);
  for (const char* h : {"purity_joint", "purity_resonator", "x1_var", "squeezing_db", "d_trace_to_target",
                        "d_hs_to_target"}) {
    header.emplace_back(h);
  }
  CsvWriter w(file, header);
  const bool opto = c.model.kind == ModelKind::optomech;
  for (std::size_t j = 0; j < states.size(); ++j) {
    const Operator& rho = states[j];
    std::vector<double> row{times[j]};
    const std::size_t k = std::min(j, cs.n_steps() - 1);
    for (const auto& t : cs.tracks()) row.push_back(t.samples[k]);
    row.push_back(purity(rho));
    if (opto) {
      const auto& p = c.model.optomech;
      const double v = x1_variance(rho, p);
      row.push_back(purity(resonator_state(rho, p)));
      row.push_back(v);
      row.push_back(squeezing_db(v));
    } else {
      row.insert(row.end(), {nan, nan, nan});
    }
    row.push_back(target ? d_trace(rho, *target) : nan);
    row.push_back(target ? d_hs(rho, *target) : nan);
    w.row(row);
  }
}

inline std::vector<double> grid_times(const TimeGrid& g) {
  std::vector<double> t(g.n_steps() + 1);
  for (std::size_t j = 0; j <= g.n_steps(); ++j) t[j] = g.t(j);
  return t;
}

inline void write_iterations_csv(const std::filesystem::path& file, const RunConfig& c, const OptimizationResult& r) {
  std::vector<std::string> header{"iter",    "J",      "D",       "d_re",        "d_sm", "d_hs",   "d_angle",
                                  "d_length", "d_split", "d_trace", "d_bures", "d_hellinger", "d_js", "alpha1",
                                  "alpha2",   "max_field_update"};
  const bool qubit = c.model.kind == ModelKind::qubit;
  if (qubit) header.emplace_back("alpha_T");
  CsvWriter w(file, header);
  for (const auto& it : r.iterations) {
    const auto& d = it.report;
    const double upd = it.max_field_update.empty()
                           ? 0.0
                           : *std::max_element(it.max_field_update.begin(), it.max_field_update.end());
    std::vector<double> row{static_cast<double>(it.iteration),
                            it.j,
                            it.d,
                            d.d_re,
                            d.d_sm,
                            d.d_hs,
                            d.d_angle.value_or(nan),
                            d.d_length,
                            d.d_split.value_or(nan),
                            d.d_trace,
                            d.d_bures,
                            d.d_hellinger,
                            d.d_js,
                            it.alpha1,
                            it.alpha2,
                            upd};
    if (qubit) row.push_back(it.final_state(0, 0).real());
    w.row(row);
  }
}

inline KrotovSettings make_settings(const RunConfig& c, const SystemModel& model, const ControlSet& guess,
                                    const FunctionalSpec& spec, const TimeGrid& grid, std::ostream& log) {
  KrotovSettings ks;
  ks.ramp_fraction = c.krotov.ramp_fraction;
  ks.max_iters = c.krotov.max_iters;
  ks.j_tol = c.krotov.j_tol;
  ks.stop_d_trace = c.krotov.stop_d_trace;
  ks.adaptive_weights = spec.kind == FunctionalKind::split_adaptive;
  if (c.krotov.lambda) {
    if (c.krotov.lambda->size() != guess.n_tracks()) {
      throw ConfigError("krotov.lambda: expected " + std::to_string(guess.n_tracks()) + " values");
    }
    ks.lambda = *c.krotov.lambda;
  } else {
    ks.lambda = suggest_lambda(model, guess, spec, model.initial_state, grid, ks.ramp_fraction,
                               c.krotov.auto_relative_change);
    log << "lambda (auto):";
    for (double l : ks.lambda) log << ' ' << format_double(l);
    log << '\n';
  }
  return ks;
}

inline OptimizationResult optimize(const RunConfig& c, const Setup& s, const TimeGrid& grid, const ControlSet& guess,
                                   std::optional<double> stop_d_trace, std::ostream& log) {
  FunctionalSpec spec = c.functional;
  spec.target = *s.target;
  KrotovSettings ks = make_settings(c, s.model, guess, spec, grid, log);
  if (stop_d_trace) ks.stop_d_trace = stop_d_trace;
  return krotov_optimize(s.model, guess, spec, s.model.initial_state, grid, ks);
}

inline TimeGrid config_grid(const RunConfig& c) { return TimeGrid(c.grid.t_final, c.grid.n_steps); }

inline void run_propagate(const RunConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const TimeGrid grid = config_grid(c);
  const ControlSet cs = ControlSet::constant(s.model.track_names(), s.guess_values, grid.n_steps());
  const Trajectory traj = propagate_forward(s.model, cs, s.model.initial_state, grid);
  write_trajectory_csv(c.out_dir / "trajectory.csv", c, cs, traj.states, grid_times(grid), s.target);
  log << "propagated " << grid.n_steps() << " steps to t = " << format_double(grid.t_final()) << " s\n";
}

inline void run_optimize(const RunConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const TimeGrid grid = config_grid(c);
  const ControlSet guess = ControlSet::constant(s.model.track_names(), s.guess_values, grid.n_steps());
  const Trajectory guess_traj = propagate_forward(s.model, guess, s.model.initial_state, grid);
  write_trajectory_csv(c.out_dir / "trajectory_guess.csv", c, guess, guess_traj.states, grid_times(grid), s.target);
  const OptimizationResult r = optimize(c, s, grid, guess, std::nullopt, log);
  write_trajectory_csv(c.out_dir / "trajectory.csv", c, r.controls, r.trajectory.states, grid_times(grid), s.target);
  write_controls_csv(c.out_dir / "controls.csv", r.controls, grid);
  write_iterations_csv(c.out_dir / "iterations.csv", c, r);
  const auto& last = r.iterations.back();
  log << "iterations " << last.iteration << ", J " << format_double(last.j) << ", d_trace "
      << format_double(last.report.d_trace) << (r.converged ? " (converged)" : "") << '\n';
}

inline void run_steady_state(const RunConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const SteadyStateResult ss = steady_state(s.model, std::span<const double>(s.guess_values), c.steady.tol, c.steady.t_max);
  write_state_json(c.out_dir / "state.json", ss.state, s.model.subsystem_dims);
  log << "residual " << format_double(ss.residual) << " 1/s after " << format_double(ss.time) << " s, purity "
      << format_double(purity(ss.state));
  if (c.model.kind == ModelKind::optomech) {
    const double v = x1_variance(ss.state, c.model.optomech);
    log << ", x1_var " << format_double(v) << ", squeezing " << format_double(squeezing_db(v)) << " dB";
  }
  log << '\n';
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return nan;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  return den == 0.0 ? nan : (static_cast<double>(n) * sxy - sx * sy) / den;
}

inline void run_scan(const RunConfig& c, std::ostream& log) {
  if (c.model.kind != ModelKind::optomech) throw ConfigError("model.type: scan-time-cooperativity needs 'optomech'");
  const Setup s = make_setup(c);
  const auto& p = c.model.optomech;
  auto coop = [&](double g) { return cooperativity(g, p.kappa, p.gamma_m); };

  CsvWriter w(c.out_dir / "scan.csv", {"t_final_s", "iterations", "reached", "d_trace", "d_trace_constant",
                                       "peak_cooperativity", "mean_cooperativity"});
  std::vector<double> fit_t, fit_peak, fit_mean;
  for (double t_final : c.scan.t_finals) {
    const TimeGrid grid(t_final, c.scan.steps_per_run);
    const ControlSet guess = ControlSet::constant(s.model.track_names(), s.guess_values, grid.n_steps());
    const double d_const =
        d_trace(propagate_forward(s.model, guess, s.model.initial_state, grid).states.back(), *s.target);
    const OptimizationResult r = optimize(c, s, grid, guess, c.scan.threshold, log);
    const auto& gm = r.controls.track(0).samples;
    double peak = 0.0, mean = 0.0;
    for (double g : gm) {
      peak = std::max(peak, coop(g));
      mean += coop(g);
    }
    mean /= static_cast<double>(gm.size());
    const double d = r.iterations.back().report.d_trace;
    const bool reached = d < c.scan.threshold;
    w.row(std::vector<double>{t_final, static_cast<double>(r.iterations.back().iteration), reached ? 1.0 : 0.0, d,
                              d_const, peak, mean});
    if (reached) {
      fit_t.push_back(t_final);
      fit_peak.push_back(peak);
      fit_mean.push_back(mean);
    }
    log << "T " << format_double(t_final) << " s: d_trace " << format_double(d) << ", peak C " << format_double(peak)
        << '\n';
  }

  json fit;
  const double pe = log_log_slope(fit_t, fit_peak), me = log_log_slope(fit_t, fit_mean);
  fit["points"] = fit_t.size();
  fit["peak_exponent"] = std::isnan(pe) ? json(nullptr) : json(pe);
  fit["mean_exponent"] = std::isnan(me) ? json(nullptr) : json(me);
  {
    std::ofstream out(c.out_dir / "scan_fit.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write scan_fit.json");
    out << fit.dump(2) << '\n';
  }

  // constant drives: time to reach each cooperativity's own steady state
  CsvWriter wc(c.out_dir / "scan_constant.csv", {"cooperativity", "time_s"});
  for (double cval : c.scan.constant_cooperativities) {
    OptomechParams q = p;
    q.set_cooperativity(cval, p.g_plus / p.g_minus);
    const SystemModel m = optomech_model(q);
    const auto drives = optomech_constant_drives(q);
    const Operator ss = steady_state(m, std::span<const double>(drives), c.target.tol, c.target.t_max).state;
    const TimeGrid grid(c.scan.constant_horizon, c.scan.constant_steps);
    const auto traj =
        propagate_forward(m, ControlSet::constant(m.track_names(), drives, grid.n_steps()), m.initial_state, grid);
    double t_hit = nan;
    for (std::size_t j = 0; j <= grid.n_steps(); ++j) {
      if (d_trace(traj.states[j], ss) < c.scan.threshold) {
        t_hit = grid.t(j);
        break;
      }
    }
    wc.row(std::vector<double>{cval, t_hit});
  }
}

/// Optimized controls from `csv` if given, else from a fresh optimization.
inline ControlSet optimized_controls(const RunConfig& c, const Setup& s, const TimeGrid& grid, const std::string& csv,
                                     const char* field, std::ostream& log) {
  if (!csv.empty()) {
    ControlSet cs = read_controls_csv(resolve(c, csv), s.model.track_names(), field);
    if (cs.n_steps() != grid.n_steps()) {
      throw ConfigError(std::string(field) + ": " + std::to_string(cs.n_steps()) + " samples but grid.n_steps is " +
                        std::to_string(grid.n_steps()));
    }
    return cs;
  }
  const ControlSet guess = ControlSet::constant(s.model.track_names(), s.guess_values, grid.n_steps());
  return optimize(c, s, grid, guess, std::nullopt, log).controls;
}

inline void run_noise_scan(const RunConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const TimeGrid grid = config_grid(c);
  const ControlSet base = optimized_controls(c, s, grid, c.noise.controls_csv, "noise.controls_csv", log);
  CsvWriter w(c.out_dir / "noise.csv", {"epsilon", "d_trace", "d_hs"});
  for (double eps : c.noise.epsilons) {
    ControlSet scaled = base;
    for (std::size_t k = 0; k < scaled.n_tracks(); ++k) {
      for (double& v : scaled.track(k).samples) v *= 1.0 + eps;
    }
    const Operator rho = propagate_forward(s.model, scaled, s.model.initial_state, grid).states.back();
    w.row(std::vector<double>{eps, d_trace(rho, *s.target), d_hs(rho, *s.target)});
    log << "epsilon " << format_double(eps) << ": d_trace " << format_double(d_trace(rho, *s.target)) << '\n';
  }
}

inline void run_switchback(const RunConfig& c, std::ostream& log) {
  const Setup s = make_setup(c);
  const TimeGrid grid = config_grid(c);
  const ControlSet opt = optimized_controls(c, s, grid, c.switchback.controls_csv, "switchback.controls_csv", log);
  const ControlSet cst = ControlSet::constant(s.model.track_names(), s.guess_values, grid.n_steps());
  const TimeGrid tail(c.switchback.extra_time, c.switchback.extra_steps);
  const ControlSet tail_cs = ControlSet::constant(s.model.track_names(), s.guess_values, tail.n_steps());

  auto run = [&](const ControlSet& head) {
    Trajectory a = propagate_forward(s.model, head, s.model.initial_state, grid);
    Trajectory b = propagate_forward(s.model, tail_cs, a.states.back(), tail);
    std::vector<Operator> all = std::move(a.states);
    all.insert(all.end(), std::next(b.states.begin()), b.states.end());
    return all;
  };
  const auto with_opt = run(opt);
  const auto with_const = run(cst);

  std::vector<std::string> header{"t_s"};
  for (const auto& t : opt.tracks()) header.push_back(t.name);
  header.insert(header.end(), {"d_trace_to_target", "d_trace_constant", "x1_var", "squeezing_db"});
  CsvWriter w(c.out_dir / "switchback.csv", header);
  const bool opto = c.model.kind == ModelKind::optomech;
  for (std::size_t j = 0; j < with_opt.size(); ++j) {
    const bool head = j < grid.n_steps();
    const double t = head ? grid.t(j) : grid.t_final() + tail.t(j - grid.n_steps());
    std::vector<double> row{t};
    for (std::size_t k = 0; k < opt.n_tracks(); ++k) {
      row.push_back(head ? opt.track(k).samples[j] : s.guess_values[k]);
    }
    row.push_back(d_trace(with_opt[j], *s.target));
    row.push_back(d_trace(with_const[j], *s.target));
    if (opto) {
      const double v = x1_variance(with_opt[j], c.model.optomech);
      row.push_back(v);
      row.push_back(squeezing_db(v));
    } else {
      row.insert(row.end(), {nan, nan});
    }
    w.row(row);
  }
  log << "switchback: d_trace at T " << format_double(d_trace(with_opt[grid.n_steps()], *s.target)) << ", at end "
      << format_double(d_trace(with_opt.back(), *s.target)) << '\n';
}

inline void run(const RunConfig& c, std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw ConfigError("output_dir: cannot create '" + c.out_dir.string() + "': " + ec.message());
  switch (c.mode) {
    case Mode::propagate: return run_propagate(c, log);
    case Mode::optimize: return run_optimize(c, log);
    case Mode::steady_state: return run_steady_state(c, log);
    case Mode::scan_time_cooperativity: return run_scan(c, log);
    case Mode::noise_scan: return run_noise_scan(c, log);
    case Mode::switchback: return run_switchback(c, log);
  }
}

}  // namespace mixctl::app
