#pragma once

// Lindblad dynamics under piecewise-constant controls.
//
//   d rho / dt = L(e) rho = -i[H(e), rho] + sum_l (L_l rho L_l^+ - 1/2 {L_l^+ L_l, rho})
//   H(e)       = H_drift + sum_{k hamiltonian} e_k H_k
//
// Rate-type controls scale a dissipator: e_k D[C_k]. Co-states obey
// d chi / dt = -L^+ chi, so that <chi(t), rho(t)> is conserved when both are
// propagated under the same controls. Within one control interval the
// generator is constant and exp(dt L) is applied matrix-free by a truncated
// Taylor series with automatic sub-stepping.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mixctl/errors.hpp"
#include "mixctl/operators.hpp"

namespace mixctl {

using SparseOperator = Eigen::SparseMatrix<Complex>;

class TimeGrid {
 public:
  TimeGrid(double t_final, std::size_t n_steps) : t_final_(t_final), n_steps_(n_steps) {
    if (n_steps == 0) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
      throw std::invalid_argument("TimeGrid: t_final must be positive and finite");
    }
  }

  double t_final() const noexcept { return t_final_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return t_final_ / static_cast<double>(n_steps_); }
  double t(std::size_t j) const noexcept { return t_final_ * static_cast<double>(j) / static_cast<double>(n_steps_); }
  /// Midpoint of interval j, where control sample j lives.
  double midpoint(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dt(); }

 private:
  double t_final_;
  std::size_t n_steps_;
};

enum class ControlKind { hamiltonian, decay_rate };

struct ControlTerm {
  std::string name;
  ControlKind kind = ControlKind::hamiltonian;
  Operator op;  // H_k, or the collapse operator C_k for a rate control
};

struct SystemModel {
  Index dim = 0;
  Operator drift;                    // may be zero
  std::vector<ControlTerm> controls;  // track k of a ControlSet drives controls[k]
  std::vector<Operator> collapse;     // rates folded into the operators
  Operator initial_state;
  std::vector<Index> subsystem_dims;  // factorization of dim, slowest first

  void validate() const {
    if (dim <= 0) throw std::invalid_argument("SystemModel: dim must be positive");
    auto check = [&](const Operator& op, const std::string& what) {
      if (op.rows() != dim || op.cols() != dim) {
        throw std::invalid_argument("SystemModel: " + what + " has wrong dimension");
      }
    };
    check(drift, "drift Hamiltonian");
    if (hermiticity_defect(drift) > tol::hermitian * std::max(1.0, max_abs(drift))) {
      throw std::invalid_argument("SystemModel: drift Hamiltonian not Hermitian");
    }
    for (const auto& c : controls) {
      check(c.op, "control '" + c.name + "'");
      if (c.kind == ControlKind::hamiltonian &&
          hermiticity_defect(c.op) > tol::hermitian * std::max(1.0, max_abs(c.op))) {
        throw std::invalid_argument("SystemModel: control Hamiltonian '" + c.name + "' not Hermitian");
      }
    }
    for (const auto& l : collapse) check(l, "collapse operator");
    check(initial_state, "initial state");
  }

  std::vector<std::string> track_names() const {
    std::vector<std::string> names;
    names.reserve(controls.size());
    for (const auto& c : controls) names.push_back(c.name);
    return names;
  }
};

/// Piecewise-constant control amplitudes, one sample per interval.
class ControlSet {
 public:
  struct Track {
    std::string name;
    std::vector<double> samples;
  };

  ControlSet() = default;
  explicit ControlSet(std::vector<Track> tracks) : tracks_(std::move(tracks)) {
    for (const auto& t : tracks_) {
      if (t.samples.size() != tracks_.front().samples.size()) {
        throw std::invalid_argument("ControlSet: track '" + t.name + "' has a different length");
      }
      if (t.samples.empty()) throw std::invalid_argument("ControlSet: empty track '" + t.name + "'");
    }
  }

  static ControlSet constant(const std::vector<std::string>& names, std::span<const double> values,
                             std::size_t n_steps) {
    if (names.size() != values.size()) throw std::invalid_argument("ControlSet::constant: size mismatch");
    std::vector<Track> tracks;
    for (std::size_t k = 0; k < names.size(); ++k) {
      tracks.push_back({names[k], std::vector<double>(n_steps, values[k])});
    }
    return ControlSet(std::move(tracks));
  }

  std::size_t n_tracks() const noexcept { return tracks_.size(); }
  std::size_t n_steps() const noexcept { return tracks_.empty() ? 0 : tracks_.front().samples.size(); }
  const Track& track(std::size_t k) const { return tracks_.at(k); }
  Track& track(std::size_t k) { return tracks_.at(k); }
  const std::vector<Track>& tracks() const noexcept { return tracks_; }

  std::vector<double> values_at(std::size_t j) const {
    std::vector<double> v(tracks_.size());
    for (std::size_t k = 0; k < tracks_.size(); ++k) v[k] = tracks_[k].samples.at(j);
    return v;
  }

  void check_against(const SystemModel& model, const TimeGrid& grid) const {
    if (n_tracks() != model.controls.size()) {
      throw std::invalid_argument("ControlSet: " + std::to_string(n_tracks()) + " tracks for " +
                                  std::to_string(model.controls.size()) + " model controls");
    }
    if (n_tracks() > 0 && n_steps() != grid.n_steps()) {
      throw std::invalid_argument("ControlSet: " + std::to_string(n_steps()) + " samples for " +
                                  std::to_string(grid.n_steps()) + " grid intervals");
    }
  }

 private:
  std::vector<Track> tracks_;
};

/// Snapshots at all grid points, in time order.
struct Trajectory {
  TimeGrid grid;
  std::vector<Operator> states;
};

struct PropagationOptions {
  double trace_tol = 1e-8;
  double hermitian_tol = 1e-10;
  double positivity_tol = 1e-8;
  bool check_positivity = true;
};

namespace detail {

inline SparseOperator to_sparse(const Operator& a) {
  return a.sparseView();
}

/// Cheap spectral-norm bound sqrt(|A|_1 |A|_inf).
inline double norm_bound(const SparseOperator& a) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(a.rows());
  for (Index k = 0; k < a.outerSize(); ++k) {
    for (SparseOperator::InnerIterator it(a, k); it; ++it) {
      col(it.col()) += std::abs(it.value());
      row(it.row()) += std::abs(it.value());
    }
  }
  if (a.nonZeros() == 0) return 0.0;
  return std::sqrt(col.maxCoeff() * row.maxCoeff());
}

}  // namespace detail

/// Sparse, precomputed form of a SystemModel.
class CompiledModel {
 public:
  explicit CompiledModel(const SystemModel& model) : model_(&model) {
    model.validate();
    const Index n = model.dim;
    drift_ = detail::to_sparse(model.drift);
    fixed_jumps_sum_ = SparseOperator(n, n);
    for (const auto& l : model.collapse) {
      Jump j{detail::to_sparse(l), {}, 1.0};
      j.op_dag = SparseOperator(j.op.adjoint());
      fixed_jumps_sum_ += SparseOperator(j.op_dag * j.op);
      jumps_.push_back(std::move(j));
    }
    for (const auto& c : model.controls) {
      Term t;
      t.kind = c.kind;
      t.op = detail::to_sparse(c.op);
      t.op_dag = SparseOperator(t.op.adjoint());
      if (c.kind == ControlKind::decay_rate) t.op_dag_op = SparseOperator(t.op_dag * t.op);
      terms_.push_back(std::move(t));
    }
  }

  const SystemModel& model() const noexcept { return *model_; }
  Index dim() const noexcept { return model_->dim; }
  std::size_t n_controls() const noexcept { return terms_.size(); }
  ControlKind kind(std::size_t k) const { return terms_.at(k).kind; }

  /// (d L / d e_k) applied to x.
  Operator control_derivative(std::size_t k, const Operator& x) const {
    const Term& t = terms_.at(k);
    if (t.kind == ControlKind::hamiltonian) {
      Operator hx = t.op * x;
      Operator xh = x * t.op;
      return Complex(0.0, -1.0) * (hx - xh);
    }
    Operator lx = t.op * x;
    Operator kx = t.op_dag_op * x;
    Operator xk = x * t.op_dag_op;
    return lx * t.op_dag - 0.5 * (kx + xk);
  }

  class Generator;
  Generator generator(std::span<const double> values) const;

 private:
  struct Jump {
    SparseOperator op;
    SparseOperator op_dag;
    double weight;
  };
  struct Term {
    ControlKind kind;
    SparseOperator op;
    SparseOperator op_dag;
    SparseOperator op_dag_op;
  };

  const SystemModel* model_;
  SparseOperator drift_;
  SparseOperator fixed_jumps_sum_;
  std::vector<Jump> jumps_;
  std::vector<Term> terms_;
};

/// The Liouvillian at fixed control values, written with the effective
/// non-Hermitian Hamiltonian H_eff = H - i/2 sum_l L_l^+ L_l.
class CompiledModel::Generator {
 public:
  Generator(const CompiledModel& m, std::span<const double> values) {
    if (values.size() != m.terms_.size()) {
      throw std::invalid_argument("generator: " + std::to_string(values.size()) + " control values for " +
                                  std::to_string(m.terms_.size()) + " controls");
    }
    SparseOperator h = m.drift_;
    SparseOperator k_sum = m.fixed_jumps_sum_;
    jumps_ = m.jumps_;
    for (std::size_t c = 0; c < values.size(); ++c) {
      const Term& t = m.terms_[c];
      if (t.kind == ControlKind::hamiltonian) {
        h += values[c] * t.op;
      } else {
        k_sum += values[c] * t.op_dag_op;
        jumps_.push_back({t.op, t.op_dag, values[c]});
      }
    }
    h_eff_ = h - Complex(0.0, 0.5) * k_sum;
    h_eff_.prune(Complex(0.0));
    h_eff_dag_ = SparseOperator(h_eff_.adjoint());

    // |[H, x]| <= 2|H| |x| and |L x L^+| <= |L|^2 |x|.
    norm_bound_ = 2.0 * detail::norm_bound(h_eff_);
    for (const auto& j : jumps_) {
      const double l = detail::norm_bound(j.op);
      norm_bound_ += std::abs(j.weight) * l * l;
    }
  }

  Operator apply(const Operator& x) const {
    Operator hx = h_eff_ * x;
    Operator xh = x * h_eff_dag_;
    Operator out = Complex(0.0, -1.0) * (hx - xh);
    for (const auto& j : jumps_) {
      if (j.weight == 0.0) continue;
      Operator lx = j.op * x;
      out.noalias() += j.weight * (lx * j.op_dag);
    }
    return out;
  }

  Operator apply_adjoint(const Operator& x) const {
    Operator hx = h_eff_dag_ * x;
    Operator xh = x * h_eff_;
    Operator out = Complex(0.0, 1.0) * (hx - xh);
    for (const auto& j : jumps_) {
      if (j.weight == 0.0) continue;
      Operator lx = j.op_dag * x;
      out.noalias() += j.weight * (lx * j.op);
    }
    return out;
  }

  double norm_bound() const noexcept { return norm_bound_; }

 private:
  SparseOperator h_eff_;
  SparseOperator h_eff_dag_;
  std::vector<Jump> jumps_;
  double norm_bound_ = 0.0;
};

inline CompiledModel::Generator CompiledModel::generator(std::span<const double> values) const {
  return Generator(*this, values);
}

namespace detail {

inline constexpr double taylor_substep_norm = 4.0;
inline constexpr int taylor_max_terms = 80;
inline constexpr double taylor_tol = 1e-16;

/// exp(t A) x for a linear map A with |A| <= bound.
template <class Apply>
Operator expm_action(const Apply& apply, Operator x, double t, double bound) {
  const double units = std::abs(t) * bound;
  const auto substeps = static_cast<long>(std::max(1.0, std::ceil(units / taylor_substep_norm)));
  const double h = t / static_cast<double>(substeps);
  for (long s = 0; s < substeps; ++s) {
    Operator term = x;
    double prev = max_abs(term);
    int k = 1;
    for (; k <= taylor_max_terms; ++k) {
      term = apply(term) * (h / static_cast<double>(k));
      x += term;
      const double cur = max_abs(term);
      if (cur + prev <= taylor_tol * max_abs(x) || (cur == 0.0 && prev == 0.0)) break;
      prev = cur;
    }
    if (k > taylor_max_terms) {
      throw NumericalError("Taylor series did not converge within " + std::to_string(taylor_max_terms) + " terms");
    }
  }
  return x;
}

}  // namespace detail

/// exp(dt L) x at fixed generator.
inline Operator step_forward(const CompiledModel::Generator& gen, const Operator& x, double dt) {
  return detail::expm_action([&](const Operator& y) { return gen.apply(y); }, x, dt, gen.norm_bound());
}

/// exp(dt L^+) x: one backward interval of a co-state.
inline Operator step_backward(const CompiledModel::Generator& gen, const Operator& x, double dt) {
  return detail::expm_action([&](const Operator& y) { return gen.apply_adjoint(y); }, x, dt, gen.norm_bound());
}

/// Instantaneous d rho / dt.
inline Operator liouville_apply(const SystemModel& model, std::span<const double> control_values,
                                const Operator& state) {
  require_square(state, "liouville_apply");
  if (state.rows() != model.dim) throw std::invalid_argument("liouville_apply: dimension mismatch");
  const CompiledModel cm(model);
  return cm.generator(control_values).apply(state);
}

inline Operator liouville_apply(const SystemModel& model, std::initializer_list<double> control_values,
                                const Operator& state) {
  const std::vector<double> v(control_values);
  return liouville_apply(model, std::span<const double>(v), state);
}

/// L^+ chi = +i[H, chi] + sum_l (L_l^+ chi L_l - 1/2 {L_l^+ L_l, chi}).
inline Operator adjoint_apply(const SystemModel& model, std::span<const double> control_values,
                              const Operator& costate) {
  require_square(costate, "adjoint_apply");
  if (costate.rows() != model.dim) throw std::invalid_argument("adjoint_apply: dimension mismatch");
  const CompiledModel cm(model);
  return cm.generator(control_values).apply_adjoint(costate);
}

inline Operator adjoint_apply(const SystemModel& model, std::initializer_list<double> control_values,
                              const Operator& costate) {
  const std::vector<double> v(control_values);
  return adjoint_apply(model, std::span<const double>(v), costate);
}

/// Throws PropagationAccuracyError when a forward snapshot has left the
/// set of density matrices by more than the configured tolerances.
inline void check_snapshot(const Operator& rho, std::size_t step, const PropagationOptions& opt) {
  const double tr_err = std::abs(rho.trace() - 1.0);
  if (!(tr_err <= opt.trace_tol)) {
    throw PropagationAccuracyError(step, "trace drift " + std::to_string(tr_err));
  }
  const double herm = hermiticity_defect(rho);
  if (!(herm <= opt.hermitian_tol)) {
    throw PropagationAccuracyError(step, "Hermiticity defect " + std::to_string(herm));
  }
  if (opt.check_positivity) {
    const double lmin = hermitian_eigenvalues(rho).minCoeff();
    if (lmin < -opt.positivity_tol) {
      throw PropagationAccuracyError(step, "negative eigenvalue " + std::to_string(lmin));
    }
  }
}

inline Trajectory propagate_forward(const CompiledModel& cm, const ControlSet& controls, const Operator& rho0,
                                    const TimeGrid& grid, const PropagationOptions& opt = {}) {
  controls.check_against(cm.model(), grid);
  if (rho0.rows() != cm.dim() || rho0.cols() != cm.dim()) {
    throw std::invalid_argument("propagate_forward: initial state has wrong dimension");
  }
  Trajectory traj{grid, {}};
  traj.states.reserve(grid.n_steps() + 1);
  traj.states.push_back(rho0);
  const double dt = grid.dt();
  for (std::size_t j = 0; j < grid.n_steps(); ++j) {
    const std::vector<double> v = controls.values_at(j);
    Operator next;
    try {
      next = step_forward(cm.generator(v), traj.states.back(), dt);
    } catch (const PropagationAccuracyError&) {
      throw;
    } catch (const NumericalError& e) {
      throw PropagationAccuracyError(j, e.what());
    }
    check_snapshot(next, j + 1, opt);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

inline Trajectory propagate_forward(const SystemModel& model, const ControlSet& controls, const Operator& rho0,
                                    const TimeGrid& grid, const PropagationOptions& opt = {}) {
  const CompiledModel cm(model);
  return propagate_forward(cm, controls, rho0, grid, opt);
}

/// Co-state trajectory from chi(T) = chiT back to t = 0; states[n_steps]
/// is chiT itself.
inline Trajectory propagate_backward(const CompiledModel& cm, const ControlSet& controls, const Operator& chiT,
                                     const TimeGrid& grid) {
  controls.check_against(cm.model(), grid);
  if (chiT.rows() != cm.dim() || chiT.cols() != cm.dim()) {
    throw std::invalid_argument("propagate_backward: co-state has wrong dimension");
  }
  const std::size_t n = grid.n_steps();
  Trajectory traj{grid, std::vector<Operator>(n + 1)};
  traj.states[n] = chiT;
  const double dt = grid.dt();
  for (std::size_t j = n; j-- > 0;) {
    const std::vector<double> v = controls.values_at(j);
    try {
      traj.states[j] = step_backward(cm.generator(v), traj.states[j + 1], dt);
    } catch (const NumericalError& e) {
      throw PropagationAccuracyError(j, e.what());
    }
    const double scale = std::max(1.0, max_abs(traj.states[j]));
    if (hermiticity_defect(traj.states[j]) > 1e-10 * scale) {
      throw PropagationAccuracyError(j, "co-state lost Hermiticity");
    }
  }
  return traj;
}

inline Trajectory propagate_backward(const SystemModel& model, const ControlSet& controls, const Operator& chiT,
                                     const TimeGrid& grid) {
  const CompiledModel cm(model);
  return propagate_backward(cm, controls, chiT, grid);
}

struct SteadyStateResult {
  Operator state;
  double residual;  // max-entry norm of d rho / dt, in 1/s
  double time;      // propagation time needed
};

/// Propagates the model's default initial state under constant controls
/// until |d rho/dt|_max < tol. Throws NonConvergenceError at t_max.
inline SteadyStateResult steady_state(const SystemModel& model, std::span<const double> control_values, double tol,
                                      double t_max, const PropagationOptions& opt = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("steady_state: tol must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("steady_state: t_max must be positive");
  const CompiledModel cm(model);
  const auto gen = cm.generator(control_values);
  Operator rho = model.initial_state;
  double residual = max_abs(gen.apply(rho));
  double t = 0.0;
  // Check the residual every 16 Taylor sub-steps.
  const double chunk = gen.norm_bound() > 0.0 ? 16.0 * detail::taylor_substep_norm / gen.norm_bound() : t_max;
  std::size_t step = 0;
  while (residual >= tol) {
    if (t >= t_max) {
      throw NonConvergenceError(residual, "steady_state: not converged after t_max = " + std::to_string(t_max) + " s");
    }
    const double h = std::min(chunk, t_max - t);
    rho = step_forward(gen, rho, h);
    t += h;
    check_snapshot(rho, ++step, opt);
    residual = max_abs(gen.apply(rho));
  }
  return {std::move(rho), residual, t};
}

inline SteadyStateResult steady_state(const SystemModel& model, std::initializer_list<double> control_values,
                                      double tol, double t_max, const PropagationOptions& opt = {}) {
  const std::vector<double> v(control_values);
  return steady_state(model, std::span<const double>(v), tol, t_max, opt);
}

}  // namespace mixctl
