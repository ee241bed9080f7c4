#pragma once

// Final-time functionals D(rho, target) and state-distance diagnostics.
//
// With d_ij = <rho_i, rho_j> - 1/N (the generalized Bloch-vector dot
// product):
//   D_re     = 1 - tau,  D_sm = 1 - tau^2,  tau = <rho, target>
//   D_hs     = 1/2 Tr (rho - target)^2
//   D_angle  = arccos^2(d12 / sqrt(d11 d22)) / pi^2
//   D_length = N/(N-1) (sqrt(d11) - sqrt(d22))^2
//   D_split  = a1 D_angle + a2 D_length
// Only re, sm, hs and split have gradients; trace, Bures, Hellinger and
// Jensen-Shannon are diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mixctl/errors.hpp"
#include "mixctl/operators.hpp"

namespace mixctl {

enum class FunctionalKind { re, sm, hs, split, split_adaptive };

inline std::string_view to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::re: return "re";
    case FunctionalKind::sm: return "sm";
    case FunctionalKind::hs: return "hs";
    case FunctionalKind::split: return "split";
    case FunctionalKind::split_adaptive: return "split-adaptive";
  }
  return "?";
}

inline FunctionalKind parse_functional_kind(std::string_view s) {
  if (s == "re") return FunctionalKind::re;
  if (s == "sm") return FunctionalKind::sm;
  if (s == "hs") return FunctionalKind::hs;
  if (s == "split") return FunctionalKind::split;
  if (s == "split-adaptive") return FunctionalKind::split_adaptive;
  throw std::invalid_argument("unknown functional kind '" + std::string(s) + "'");
}

inline bool is_split(FunctionalKind k) { return k == FunctionalKind::split || k == FunctionalKind::split_adaptive; }

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::hs;
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  Operator target;

  void validate() const {
    require_square(target, "FunctionalSpec");
    if (is_split(kind)) {
      if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw std::invalid_argument("split weights must be nonnegative");
      if (kind == FunctionalKind::split && !(alpha1 + alpha2 > 0.0)) {
        throw std::invalid_argument("split weights must not both vanish");
      }
    }
  }
};

namespace detail {

/// Squared Bloch lengths below this count as maximally mixed.
inline constexpr double mixed_threshold = 1e-14;
inline constexpr double parallel_guard = 1e-24;
inline constexpr double radicand_error = 1e-9;

/// Radicands within a few ulps of zero (relative to the unit-trace scale)
/// are rounding noise.
inline double radicand_floor(Index n) {
  return 64.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
}

inline double checked_sqrt(double radicand, Index n, const char* what) {
  if (radicand < -radicand_error) {
    throw NumericalConsistencyError(std::string(what) + ": negative radicand " + std::to_string(radicand));
  }
  if (radicand <= radicand_floor(n)) return 0.0;
  return std::sqrt(radicand);
}

inline Operator traceless(const Operator& a) {
  const Index n = a.rows();
  return a - (a.trace() / static_cast<double>(n)) * identity(n);
}

/// Angle between Bloch vectors as 2 atan2(|a - b|, |a + b|) on the unit
/// traceless parts; unlike acos of the cosine it keeps full relative
/// accuracy near 0 and pi.
inline double bloch_angle(const Operator& rho, const Operator& target, double d11, double d22) {
  const Operator a = traceless(rho) / std::sqrt(d11);
  const Operator b = traceless(target) / std::sqrt(d22);
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

}  // namespace detail

inline double overlap_tau(const Operator& rho, const Operator& target) {
  require_same_dim(rho, target, "tau");
  return hs_overlap(rho, target).real();
}

inline double d_re(const Operator& rho, const Operator& target) { return 1.0 - overlap_tau(rho, target); }

inline double d_sm(const Operator& rho, const Operator& target) {
  const double tau = overlap_tau(rho, target);
  return 1.0 - tau * tau;
}

inline double d_hs(const Operator& rho, const Operator& target) {
  require_same_dim(rho, target, "d_hs");
  const Operator diff = rho - target;
  return 0.5 * hs_overlap(diff, diff).real();
}

/// Throws UndefinedAngleError when either state is maximally mixed.
inline double d_angle(const Operator& rho, const Operator& target) {
  const double d11 = bloch_dot(rho, rho);
  const double d22 = bloch_dot(target, target);
  if (d11 < detail::mixed_threshold || d22 < detail::mixed_threshold) {
    throw UndefinedAngleError("d_angle: Bloch direction of a maximally mixed state is undefined");
  }
  const double theta = detail::bloch_angle(rho, target, d11, d22);
  return theta * theta / (std::numbers::pi * std::numbers::pi);
}

inline double d_length(const Operator& rho, const Operator& target) {
  const double n = static_cast<double>(rho.rows());
  const double diff = bloch_length(rho) - bloch_length(target);
  return n / (n - 1.0) * diff * diff;
}

inline double d_split(double alpha1, double alpha2, const Operator& rho, const Operator& target) {
  const double angle = alpha1 != 0.0 ? d_angle(rho, target) : 0.0;
  return alpha1 * angle + alpha2 * d_length(rho, target);
}

inline double d_split(const FunctionalSpec& spec, const Operator& rho) {
  return d_split(spec.alpha1, spec.alpha2, rho, spec.target);
}

/// Value of the functional selected by `spec` at rho(T). For the split
/// kinds an undefined angle (maximally mixed target) contributes zero.
inline double functional_value(const FunctionalSpec& spec, const Operator& rho) {
  switch (spec.kind) {
    case FunctionalKind::re: return d_re(rho, spec.target);
    case FunctionalKind::sm: return d_sm(rho, spec.target);
    case FunctionalKind::hs: return d_hs(rho, spec.target);
    case FunctionalKind::split:
    case FunctionalKind::split_adaptive: {
      double angle = 0.0;
      if (spec.alpha1 != 0.0) {
        try {
          angle = d_angle(rho, spec.target);
        } catch (const UndefinedAngleError&) {
          angle = 0.0;
        }
      }
      return spec.alpha1 * angle + spec.alpha2 * d_length(rho, spec.target);
    }
  }
  throw std::logic_error("functional_value: unhandled kind");
}

/// Gradient of D_angle with respect to rho (first argument). The
/// component along the identity is dropped; trace-preserving dynamics
/// cannot see it and it diverges for collinear Bloch vectors.
inline Operator grad_angle(const Operator& rho, const Operator& target) {
  const Index n = rho.rows();
  const double d11 = bloch_dot(rho, rho);
  const double d22 = bloch_dot(target, target);
  const double d12 = bloch_dot(rho, target);
  if (d11 < detail::mixed_threshold) {
    throw DegenerateStateError("angle gradient at a maximally mixed state");
  }
  if (d22 < detail::mixed_threshold) return Operator::Zero(n, n);
  const double perp = d11 * d22 - d12 * d12;
  if (perp < std::max(detail::parallel_guard, 64.0 * std::numeric_limits<double>::epsilon() * d11 * d22)) {
    return Operator::Zero(n, n);
  }
  const double theta = detail::bloch_angle(rho, target, d11, d22);
  const Operator num = detail::traceless(target) - (d12 / d11) * detail::traceless(rho);
  return (-2.0 / (std::numbers::pi * std::numbers::pi) * theta / std::sqrt(perp)) * num;
}

inline Operator grad_length(const Operator& rho, const Operator& target) {
  const double n = static_cast<double>(rho.rows());
  const double d11 = bloch_dot(rho, rho);
  if (d11 < detail::mixed_threshold) {
    throw DegenerateStateError("length gradient at a maximally mixed state");
  }
  const double l1 = std::sqrt(d11);
  const double l2 = bloch_length(target);
  return (2.0 * n / (n - 1.0) * (l1 - l2) / l1) * rho;
}

/// chi(T) = -grad_{rho(T)} D.
inline CoState costate_seed(const FunctionalSpec& spec, const Operator& rhoT) {
  require_same_dim(rhoT, spec.target, "costate_seed");
  switch (spec.kind) {
    case FunctionalKind::re: return CoState(spec.target);
    case FunctionalKind::sm: return CoState(2.0 * overlap_tau(rhoT, spec.target) * spec.target);
    case FunctionalKind::hs: return CoState(spec.target - rhoT);
    case FunctionalKind::split:
    case FunctionalKind::split_adaptive: {
      if (bloch_dot(rhoT, rhoT) < detail::mixed_threshold) {
        throw DegenerateStateError("costate_seed: final state is maximally mixed");
      }
      Operator chi = Operator::Zero(rhoT.rows(), rhoT.cols());
      if (spec.alpha1 != 0.0) chi -= spec.alpha1 * grad_angle(rhoT, spec.target);
      if (spec.alpha2 != 0.0) chi -= spec.alpha2 * grad_length(rhoT, spec.target);
      return CoState(std::move(chi));
    }
  }
  throw std::logic_error("costate_seed: unhandled kind");
}

/// 1/2 |rho1 - rho2|_tr.
inline double d_trace(const Operator& rho1, const Operator& rho2) {
  require_same_dim(rho1, rho2, "d_trace");
  return 0.5 * hermitian_eigenvalues(rho1 - rho2).cwiseAbs().sum();
}

/// sqrt(1 - F) with F = Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)), evaluated as
/// the sum of singular values of sqrt(rho1) sqrt(rho2). Nested square roots
/// lose accuracy on small eigenvalues and leave d_bures(rho, rho) ~ 1e-7.
inline double d_bures(const Operator& rho1, const Operator& rho2) {
  require_same_dim(rho1, rho2, "d_bures");
  const Operator m = hermitian_sqrt(rho1) * hermitian_sqrt(rho2);
  const double fid = Eigen::JacobiSVD<Operator>(m).singularValues().sum();
  return detail::checked_sqrt(1.0 - fid, rho1.rows(), "d_bures");
}

/// sqrt(1 - Tr sqrt(rho1) sqrt(rho2)).
inline double d_hellinger(const Operator& rho1, const Operator& rho2) {
  require_same_dim(rho1, rho2, "d_hellinger");
  const double aff = hs_overlap(hermitian_sqrt(rho1), hermitian_sqrt(rho2)).real();
  return detail::checked_sqrt(1.0 - aff, rho1.rows(), "d_hellinger");
}

/// Square root of the quantum Jensen-Shannon divergence, written with
/// E(rho) = Tr rho ln rho: sqrt(E(rho1)/2 + E(rho2)/2 - E((rho1+rho2)/2)).
inline double d_js(const Operator& rho1, const Operator& rho2) {
  require_same_dim(rho1, rho2, "d_js");
  const Operator mid = 0.5 * (rho1 + rho2);
  const double rad =
      0.5 * von_neumann_entropy(rho1) + 0.5 * von_neumann_entropy(rho2) - von_neumann_entropy(mid);
  return detail::checked_sqrt(rad, rho1.rows(), "d_js");
}

struct DistanceReport {
  double d_re = 0.0;
  double d_sm = 0.0;
  double d_hs = 0.0;
  std::optional<double> d_angle;  // empty when a state is maximally mixed
  double d_length = 0.0;
  std::optional<double> d_split;  // uses the report's weights
  double d_trace = 0.0;
  double d_bures = 0.0;
  double d_hellinger = 0.0;
  double d_js = 0.0;
};

inline DistanceReport distance_report(const Operator& rho, const Operator& target, double alpha1 = 0.5,
                                      double alpha2 = 0.5) {
  require_same_dim(rho, target, "distance_report");
  DistanceReport r;
  r.d_re = d_re(rho, target);
  r.d_sm = d_sm(rho, target);
  r.d_hs = d_hs(rho, target);
  r.d_length = d_length(rho, target);
  try {
    r.d_angle = d_angle(rho, target);
    r.d_split = alpha1 * *r.d_angle + alpha2 * r.d_length;
  } catch (const UndefinedAngleError&) {
    r.d_angle.reset();
    r.d_split.reset();
  }
  r.d_trace = d_trace(rho, target);
  r.d_bures = d_bures(rho, target);
  r.d_hellinger = d_hellinger(rho, target);
  r.d_js = d_js(rho, target);
  return r;
}

}  // namespace mixctl
