#pragma once

// First-order Krotov optimization of piecewise-constant controls.
//
// Each iteration seeds chi(T) = -grad D at the current final state,
// propagates chi backward under the current fields, then sweeps forward
// through the intervals: sample j of track k is updated from the stored
// chi_j and the freshly propagated rho_j,
//
//   e_kj <- e_kj + S_j / lambda_k * Re <chi_j, (dL/de_k) rho_j>,
//
// and rho is advanced one interval under the new values before moving on.
// In the i hbar d rho/dt = L' rho convention this is the usual
// Im <chi, (dL'/de_k) rho> update. Co-states are seeded with the real
// gradient, chi(T) = -grad D, so the running cost that this step minimizes
// is sum_k lambda_k / (2 S_j) (delta e_kj)^2 dt; it is added to D to form J.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mixctl/errors.hpp"
#include "mixctl/functionals.hpp"
#include "mixctl/operators.hpp"
#include "mixctl/propagation.hpp"

namespace mixctl {

inline constexpr double shape_floor = 1e-8;

/// sin^2 switch-on over the first ramp_fraction*T and switch-off over the
/// last, 1 in between, never below 1e-8.
inline double shape_function(double t, double t_final, double ramp_fraction) {
  if (!(ramp_fraction > 0.0 && ramp_fraction < 0.5)) {
    throw std::invalid_argument("shape_function: ramp_fraction must lie in (0, 0.5)");
  }
  const double t_ramp = ramp_fraction * t_final;
  double s = 1.0;
  if (t < t_ramp) {
    const double x = std::sin(0.5 * std::numbers::pi * t / t_ramp);
    s = x * x;
  } else if (t > t_final - t_ramp) {
    const double x = std::sin(0.5 * std::numbers::pi * (t_final - t) / t_ramp);
    s = x * x;
  }
  return std::max(s, shape_floor);
}

/// (dL/de) rho for a single control term.
inline Operator control_derivative(const ControlTerm& control, const Operator& rho) {
  const Operator& c = control.op;
  if (control.kind == ControlKind::hamiltonian) return Complex(0.0, -1.0) * (c * rho - rho * c);
  const Operator cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

/// New sample value ref + S/lambda Re<chi, (dL/de) rho>.
inline double field_update(const Operator& chi, const Operator& rho, const ControlTerm& control, double shape,
                           double lambda, double ref_value) {
  if (!(lambda > 0.0)) throw std::invalid_argument("field_update: lambda must be positive");
  return ref_value + shape / lambda * hs_overlap(chi, control_derivative(control, rho)).real();
}

struct KrotovSettings {
  std::vector<double> lambda;  // per track
  double ramp_fraction = 0.05;
  std::size_t max_iters = 100;
  double j_tol = 0.0;
  bool adaptive_weights = false;
  std::optional<double> stop_d_trace;  // also stop once d_trace(rho(T), target) drops below this
  bool check_monotonic = true;
  PropagationOptions propagation;

  void validate(std::size_t n_tracks) const {
    if (lambda.size() != n_tracks) {
      throw std::invalid_argument("KrotovSettings: " + std::to_string(lambda.size()) + " lambda values for " +
                                  std::to_string(n_tracks) + " tracks");
    }
    for (double l : lambda) {
      if (!(l > 0.0)) throw std::invalid_argument("KrotovSettings: lambda must be positive");
    }
    if (!(ramp_fraction > 0.0 && ramp_fraction < 0.5)) {
      throw std::invalid_argument("KrotovSettings: ramp_fraction must lie in (0, 0.5)");
    }
    if (max_iters < 1) throw std::invalid_argument("KrotovSettings: max_iters must be >= 1");
    if (!(j_tol >= 0.0)) throw std::invalid_argument("KrotovSettings: j_tol must be nonnegative");
  }
};

struct IterationRecord {
  std::size_t iteration = 0;
  double j = 0.0;
  double d = 0.0;
  DistanceReport report;
  std::vector<double> max_field_update;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  Operator final_state;
};

struct OptimizationResult {
  ControlSet controls;
  std::vector<IterationRecord> iterations;  // iterations[0] is the guess
  Trajectory trajectory;                     // forward states under `controls`
  bool converged = false;                    // stopped by j_tol or stop_d_trace
};

/// Weights (a1, a2) = (D_angle, D_length) / (D_angle + D_length); equal
/// weights when both vanish.
inline std::pair<double, double> adaptive_weights(const Operator& rho, const Operator& target) {
  double angle = 0.0;
  try {
    angle = d_angle(rho, target);
  } catch (const UndefinedAngleError&) {
    angle = 0.0;
  }
  const double length = d_length(rho, target);
  const double sum = angle + length;
  if (!(sum > 0.0)) return {0.5, 0.5};
  const double a1 = angle / sum;
  return {a1, 1.0 - a1};
}

namespace detail {

inline IterationRecord make_record(std::size_t iter, double j, double d, const Operator& rho_t,
                                   const FunctionalSpec& spec, std::vector<double> max_update) {
  IterationRecord r;
  r.iteration = iter;
  r.j = j;
  r.d = d;
  r.report = distance_report(rho_t, spec.target, spec.alpha1, spec.alpha2);
  r.max_field_update = std::move(max_update);
  r.alpha1 = spec.alpha1;
  r.alpha2 = spec.alpha2;
  r.final_state = rho_t;
  return r;
}

}  // namespace detail

inline OptimizationResult krotov_optimize(const SystemModel& model, const ControlSet& guess, FunctionalSpec spec,
                                          const Operator& rho0, const TimeGrid& grid,
                                          const KrotovSettings& settings) {
  const CompiledModel cm(model);
  guess.check_against(model, grid);
  spec.validate();
  settings.validate(guess.n_tracks());
  require_same_dim(rho0, spec.target, "krotov_optimize");
  if (rho0.rows() != model.dim) throw std::invalid_argument("krotov_optimize: initial state has wrong dimension");

  const bool adaptive = settings.adaptive_weights || spec.kind == FunctionalKind::split_adaptive;
  const std::size_t n = grid.n_steps();
  const std::size_t n_tracks = guess.n_tracks();
  const double dt = grid.dt();

  std::vector<double> shape(n);
  for (std::size_t j = 0; j < n; ++j) shape[j] = shape_function(grid.midpoint(j), grid.t_final(), settings.ramp_fraction);

  OptimizationResult result{guess, {}, propagate_forward(cm, guess, rho0, grid, settings.propagation), false};
  if (adaptive) std::tie(spec.alpha1, spec.alpha2) = adaptive_weights(result.trajectory.states.back(), spec.target);

  {
    const double d0 = functional_value(spec, result.trajectory.states.back());
    result.iterations.push_back(
        detail::make_record(0, d0, d0, result.trajectory.states.back(), spec, std::vector<double>(n_tracks, 0.0)));
  }

  for (std::size_t iter = 1; iter <= settings.max_iters; ++iter) {
    if (adaptive) std::tie(spec.alpha1, spec.alpha2) = adaptive_weights(result.trajectory.states.back(), spec.target);

    const CoState chi_t = costate_seed(spec, result.trajectory.states.back());
    const Trajectory chi = propagate_backward(cm, result.controls, chi_t.matrix(), grid);

    ControlSet updated = result.controls;
    Trajectory fwd{grid, {}};
    fwd.states.reserve(n + 1);
    fwd.states.push_back(rho0);
    std::vector<double> max_update(n_tracks, 0.0);
    std::vector<double> values(n_tracks);
    double running_cost = 0.0;

    for (std::size_t j = 0; j < n; ++j) {
      const Operator& rho = fwd.states.back();
      for (std::size_t k = 0; k < n_tracks; ++k) {
        const double old = result.controls.track(k).samples[j];
        const double grad = hs_overlap(chi.states[j], cm.control_derivative(k, rho)).real();
        double next = old + shape[j] / settings.lambda[k] * grad;
        if (cm.kind(k) == ControlKind::decay_rate) next = std::max(next, 0.0);
        const double delta = next - old;
        values[k] = next;
        updated.track(k).samples[j] = next;
        max_update[k] = std::max(max_update[k], std::abs(delta));
        running_cost += 0.5 * settings.lambda[k] / shape[j] * delta * delta * dt;
      }
      Operator advanced;
      try {
        advanced = step_forward(cm.generator(values), rho, dt);
      } catch (const NumericalError& e) {
        throw PropagationAccuracyError(j, e.what());
      }
      check_snapshot(advanced, j + 1, settings.propagation);
      fwd.states.push_back(std::move(advanced));
    }

    const double d_new = functional_value(spec, fwd.states.back());
    const double j_new = d_new + running_cost;
    const double j_prev = result.iterations.back().j;
    if (!adaptive && settings.check_monotonic && j_new > j_prev + 1e-10) {
      throw MonotonicityViolation(iter, j_prev, j_new);
    }

    result.controls = std::move(updated);
    result.trajectory = std::move(fwd);
    result.iterations.push_back(
        detail::make_record(iter, j_new, d_new, result.trajectory.states.back(), spec, std::move(max_update)));

    if (settings.stop_d_trace && result.iterations.back().report.d_trace < *settings.stop_d_trace) {
      result.converged = true;
      break;
    }
    if (std::abs(j_prev - j_new) < settings.j_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Picks lambda_k so that a first update computed on the guess trajectory
/// changes track k by `relative_change` of its largest guess amplitude.
/// Tracks without gradient get lambda = 1.
inline std::vector<double> suggest_lambda(const SystemModel& model, const ControlSet& guess,
                                          const FunctionalSpec& spec, const Operator& rho0, const TimeGrid& grid,
                                          double ramp_fraction, double relative_change = 1e-2) {
  const CompiledModel cm(model);
  const Trajectory fwd = propagate_forward(cm, guess, rho0, grid);
  FunctionalSpec s = spec;
  if (s.kind == FunctionalKind::split_adaptive) {
    std::tie(s.alpha1, s.alpha2) = adaptive_weights(fwd.states.back(), s.target);
  }
  const Trajectory chi = propagate_backward(cm, guess, costate_seed(s, fwd.states.back()).matrix(), grid);
  std::vector<double> lambda(guess.n_tracks(), 1.0);
  for (std::size_t k = 0; k < guess.n_tracks(); ++k) {
    double step = 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < grid.n_steps(); ++j) {
      const double sj = shape_function(grid.midpoint(j), grid.t_final(), ramp_fraction);
      step = std::max(step, std::abs(sj * hs_overlap(chi.states[j], cm.control_derivative(k, fwd.states[j])).real()));
      scale = std::max(scale, std::abs(guess.track(k).samples[j]));
    }
    if (scale == 0.0) scale = 1.0;
    if (step > 0.0) lambda[k] = step / (relative_change * scale);
  }
  return lambda;
}

}  // namespace mixctl
