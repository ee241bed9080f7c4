#pragma once

// Built-in systems: a qubit with a controllable decay rate, and a cavity
// mode coupled to a mechanical resonator driven on both motional sidebands
// (linearized, rotating frame, counter-rotating terms dropped).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mixctl/operators.hpp"
#include "mixctl/propagation.hpp"

namespace mixctl {

/// Decay sigma_- at a controlled rate u(t); starts in |1><1|.
inline SystemModel qubit_decay_model() {
  SystemModel m;
  m.dim = 2;
  m.drift = Operator::Zero(2, 2);
  m.controls.push_back({"u", ControlKind::decay_rate, annihilation(2)});
  m.initial_state = basis_state(2, 1).matrix();
  m.subsystem_dims = {2};
  return m;
}

/// 4 G_-^2 / (kappa Gamma_M).
inline double cooperativity(double g_minus, double kappa, double gamma_m) {
  return 4.0 * g_minus * g_minus / (kappa * gamma_m);
}

inline double g_from_cooperativity(double c, double kappa, double gamma_m) {
  return 0.5 * std::sqrt(c * kappa * gamma_m);
}

/// All rates in rad/s.
struct OptomechParams {
  double kappa = 2.0 * std::numbers::pi * 450e3;
  double gamma_m = 2.0 * std::numbers::pi * 300.0;
  double n_th = 0.5;
  Index n_cav = 3;
  Index n_res = 12;
  double g_minus = g_from_cooperativity(10.0, 2.0 * std::numbers::pi * 450e3, 2.0 * std::numbers::pi * 300.0);
  double g_plus = 0.5 * g_from_cooperativity(10.0, 2.0 * std::numbers::pi * 450e3, 2.0 * std::numbers::pi * 300.0);

  /// Desk-scale defaults: C = 10, G+/G- = 0.5, Gamma_M rescaled to 2pi 300 Hz.
  static OptomechParams desk_scale() { return {}; }

  /// Parameters of the squeezing study: C = 100, G+/G- = 0.7, n_th = 2,
  /// kappa/2pi = 450 kHz, Gamma_M/2pi = 3 Hz, 4 cavity and 40 resonator levels.
  static OptomechParams paper_scale() {
    OptomechParams p;
    p.gamma_m = 2.0 * std::numbers::pi * 3.0;
    p.n_th = 2.0;
    p.n_cav = 4;
    p.n_res = 40;
    p.set_cooperativity(100.0, 0.7);
    return p;
  }

  void set_cooperativity(double c, double ratio) {
    g_minus = g_from_cooperativity(c, kappa, gamma_m);
    g_plus = ratio * g_minus;
  }

  double cooperativity() const { return mixctl::cooperativity(g_minus, kappa, gamma_m); }

  void validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("optomech: kappa must be positive");
    if (!(gamma_m > 0.0)) throw std::invalid_argument("optomech: gamma_m must be positive");
    if (!(n_th >= 0.0)) throw std::invalid_argument("optomech: n_th must be nonnegative");
    if (n_cav < 2) throw std::invalid_argument("optomech: n_cav must be >= 2");
    if (n_res < 2) throw std::invalid_argument("optomech: n_res must be >= 2");
    if (!(g_minus > 0.0) || !(g_plus >= 0.0) || !(g_plus < g_minus)) {
      throw std::invalid_argument("optomech: need 0 <= G+/G- < 1 with G- > 0");
    }
  }
};

struct OptomechOperators {
  Operator d;  // cavity annihilation on the joint space
  Operator b;  // resonator annihilation on the joint space
  Operator h_plus;
  Operator h_minus;
};

inline OptomechOperators optomech_operators(Index n_cav, Index n_res) {
  OptomechOperators o;
  o.d = tensor(annihilation(n_cav), identity(n_res));
  o.b = tensor(identity(n_cav), annihilation(n_res));
  const Operator dd = o.d.adjoint();
  const Operator bd = o.b.adjoint();
  o.h_plus = -(dd * bd + o.b * o.d);
  o.h_minus = -(dd * o.b + bd * o.d);
  return o;
}

/// Joint cavity (slow index) x resonator model with controls G-, G+ and
/// collapse operators sqrt(kappa) d, sqrt(Gamma(n+1)) b, sqrt(Gamma n) b^+.
/// The initial state is |0><0| x thermal(n_th).
inline SystemModel optomech_model(const OptomechParams& p) {
  p.validate();
  const auto ops = optomech_operators(p.n_cav, p.n_res);
  SystemModel m;
  m.dim = p.n_cav * p.n_res;
  m.drift = Operator::Zero(m.dim, m.dim);
  m.controls.push_back({"g_minus", ControlKind::hamiltonian, ops.h_minus});
  m.controls.push_back({"g_plus", ControlKind::hamiltonian, ops.h_plus});
  m.collapse.push_back(std::sqrt(p.kappa) * ops.d);
  m.collapse.push_back(std::sqrt(p.gamma_m * (p.n_th + 1.0)) * ops.b);
  if (p.n_th > 0.0) m.collapse.push_back(std::sqrt(p.gamma_m * p.n_th) * ops.b.adjoint());
  m.initial_state = tensor(basis_state(p.n_cav, 0).matrix(), thermal_state(p.n_res, p.n_th).matrix());
  m.subsystem_dims = {p.n_cav, p.n_res};
  return m;
}

/// Constant guess amplitudes (G-, G+) in track order.
inline std::vector<double> optomech_constant_drives(const OptomechParams& p) { return {p.g_minus, p.g_plus}; }

/// X1 = (b + b^+)/sqrt(2) on a single resonator.
inline Operator x1_quadrature(Index n_res) {
  const Operator b = annihilation(n_res);
  return (b + b.adjoint()) / std::sqrt(2.0);
}

inline Operator resonator_state(const Operator& rho_joint, const OptomechParams& p) {
  return partial_trace(rho_joint, {p.n_cav, p.n_res}, 1);
}

/// <X1^2> of the reduced resonator state.
inline double x1_variance(const Operator& rho_joint, const OptomechParams& p) {
  const Operator x = x1_quadrature(p.n_res);
  const double v = expectation(resonator_state(rho_joint, p), x * x);
  if (!(v > 0.0)) throw NumericalConsistencyError("x1_variance: nonpositive variance");
  return v;
}

/// 10 log10(<X1^2>_zpf / <X1^2>) with <X1^2>_zpf = 1/2.
inline double squeezing_db(double x1_var) {
  if (!(x1_var > 0.0)) throw NumericalConsistencyError("squeezing_db: nonpositive variance");
  return 10.0 * std::log10(0.5 / x1_var);
}

}  // namespace mixctl
