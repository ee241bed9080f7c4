#pragma once

// Dense complex operator algebra on finite-dimensional Hilbert spaces.
//
// Operators are plain Eigen matrices. DensityMatrix and CoState are thin
// validated wrappers; every measurement function takes `const Operator&`
// so that both wrappers (and raw matrices in tests) can be passed directly.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixctl/errors.hpp"

namespace mixctl {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Index = Eigen::Index;

namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double eigenvalue = 1e-10;
inline constexpr double imaginary = 1e-10;
inline constexpr double radicand = 1e-12;
}  // namespace tol

inline double max_abs(const Operator& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline double hermiticity_defect(const Operator& a) { return max_abs(a - a.adjoint()); }

inline void require_square(const Operator& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": operator must be square and nonempty");
  }
}

inline void require_same_dim(const Operator& a, const Operator& b, const char* what) {
  require_square(a, what);
  require_square(b, what);
  if (a.rows() != b.rows()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
inline Eigen::VectorXd hermitian_eigenvalues(const Operator& a) {
  Eigen::SelfAdjointEigenSolver<Operator> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

class DensityMatrix {
 public:
  /// Throws InvalidStateError unless `m` is Hermitian (1e-12), unit trace
  /// (1e-10) and has no eigenvalue below -1e-10.
  explicit DensityMatrix(Operator m) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    const double herm = hermiticity_defect(m_);
    if (herm > tol::hermitian) {
      throw InvalidStateError("DensityMatrix: not Hermitian (defect " + std::to_string(herm) + ")");
    }
    const Complex tr = m_.trace();
    if (std::abs(tr - 1.0) > tol::trace) {
      throw InvalidStateError("DensityMatrix: trace " + std::to_string(tr.real()) + " != 1");
    }
    const double lmin = hermitian_eigenvalues(m_).minCoeff();
    if (lmin < -tol::eigenvalue) {
      throw InvalidStateError("DensityMatrix: negative eigenvalue " + std::to_string(lmin));
    }
  }

  Index dim() const noexcept { return m_.rows(); }
  const Operator& matrix() const noexcept { return m_; }
  operator const Operator&() const noexcept { return m_; }  // NOLINT: measurement functions take Operator

 private:
  Operator m_;
};

/// Hermitian operator without trace or positivity constraints.
class CoState {
 public:
  explicit CoState(Operator m) : m_(std::move(m)) {
    require_square(m_, "CoState");
    const double scale = std::max(1.0, max_abs(m_));
    if (hermiticity_defect(m_) > tol::hermitian * scale) {
      throw InvalidStateError("CoState: not Hermitian");
    }
  }

  Index dim() const noexcept { return m_.rows(); }
  const Operator& matrix() const noexcept { return m_; }
  operator const Operator&() const noexcept { return m_; }  // NOLINT

 private:
  Operator m_;
};

inline Operator identity(Index n) { return Operator::Identity(n, n); }

/// Kronecker product with `a` as the slow index.
inline Operator tensor(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Reduced state of subsystem `keep` of a multipartite operator with
/// subsystem dimensions `dims` (first entry is the slowest index).
inline Operator partial_trace(const Operator& rho, std::span<const Index> dims, std::size_t keep) {
  require_square(rho, "partial_trace");
  if (dims.empty() || keep >= dims.size()) {
    throw std::invalid_argument("partial_trace: subsystem index out of range");
  }
  Index total = 1;
  for (Index d : dims) {
    if (d <= 0) throw std::invalid_argument("partial_trace: subsystem dims must be positive");
    total *= d;
  }
  if (total != rho.rows()) {
    throw std::invalid_argument("partial_trace: product of dims " + std::to_string(total) +
                                " != operator dim " + std::to_string(rho.rows()));
  }
  // rho index = (outer * dk + k) * inner + in
  Index outer = 1;
  for (std::size_t s = 0; s < keep; ++s) outer *= dims[s];
  const Index dk = dims[keep];
  const Index inner = total / (outer * dk);

  Operator out = Operator::Zero(dk, dk);
  for (Index o = 0; o < outer; ++o) {
    for (Index in = 0; in < inner; ++in) {
      for (Index a = 0; a < dk; ++a) {
        const Index row = (o * dk + a) * inner + in;
        for (Index b = 0; b < dk; ++b) {
          out(a, b) += rho(row, (o * dk + b) * inner + in);
        }
      }
    }
  }
  return out;
}

inline Operator partial_trace(const Operator& rho, std::initializer_list<Index> dims, std::size_t keep) {
  const std::vector<Index> d(dims);
  return partial_trace(rho, std::span<const Index>(d), keep);
}

/// Truncated bosonic lowering operator: <k|a|k+1> = sqrt(k+1).
inline Operator annihilation(Index n_levels) {
  if (n_levels < 2) throw std::invalid_argument("annihilation: need at least 2 levels");
  Operator a = Operator::Zero(n_levels, n_levels);
  for (Index k = 0; k + 1 < n_levels; ++k) a(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
  return a;
}

/// Thermal occupation distribution p_k ∝ (n/(n+1))^k, renormalized on the
/// kept levels.
inline DensityMatrix thermal_state(Index n_levels, double n_th) {
  if (n_levels < 1) throw std::invalid_argument("thermal_state: need at least 1 level");
  if (!(n_th >= 0.0)) throw std::invalid_argument("thermal_state: n_th must be nonnegative");
  Operator rho = Operator::Zero(n_levels, n_levels);
  const double q = n_th / (n_th + 1.0);
  double w = 1.0;
  double z = 0.0;
  for (Index k = 0; k < n_levels; ++k) {
    rho(k, k) = w;
    z += w;
    w *= q;
  }
  rho /= z;
  return DensityMatrix(std::move(rho));
}

/// Projector |k><k| in an n-level space.
inline DensityMatrix basis_state(Index n_levels, Index k) {
  if (k < 0 || k >= n_levels) throw std::invalid_argument("basis_state: level out of range");
  Operator rho = Operator::Zero(n_levels, n_levels);
  rho(k, k) = 1.0;
  return DensityMatrix(std::move(rho));
}

/// Tr{a† b}.
inline Complex hs_overlap(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "hs_overlap");
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline double purity(const Operator& rho) { return hs_overlap(rho, rho).real(); }

/// Dot product of generalized Bloch vectors, <r1, r2> - 1/N for unit-trace
/// arguments.
///
/// Computed as the overlap of the traceless parts, so it stays exact (and
/// obeys Cauchy-Schwarz) for nearly maximally mixed states and for states
/// whose trace has drifted at rounding level.
inline double bloch_dot(const Operator& r1, const Operator& r2) {
  require_same_dim(r1, r2, "bloch_dot");
  const Index n = r1.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Operator a = r1 - (r1.trace() * inv_n) * identity(n);
  const Operator b = r2 - (r2.trace() * inv_n) * identity(n);
  return hs_overlap(a, b).real();
}

inline double bloch_length(const Operator& rho) {
  const double d = bloch_dot(rho, rho);
  if (d < -tol::radicand) {
    throw NumericalConsistencyError("bloch_length: Tr rho^2 below 1/N by " + std::to_string(-d));
  }
  return d <= 0.0 ? 0.0 : std::sqrt(d);
}

/// Tr{rho obs} for a Hermitian observable.
inline double expectation(const Operator& rho, const Operator& obs) {
  require_same_dim(rho, obs, "expectation");
  const Complex v = (rho.transpose().cwiseProduct(obs)).sum();
  if (std::abs(v.imag()) > tol::imaginary) {
    throw NumericalConsistencyError("expectation: imaginary part " + std::to_string(v.imag()));
  }
  return v.real();
}

namespace detail {

/// Applies f to the spectrum of a Hermitian PSD operator, clamping
/// eigenvalues in [-1e-10, 0) to zero.
template <class F>
Operator psd_function(const Operator& rho, F f, const char* what) {
  require_square(rho, what);
  Eigen::SelfAdjointEigenSolver<Operator> es(rho);
  Eigen::VectorXd lam = es.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol::eigenvalue) {
      throw InvalidStateError(std::string(what) + ": eigenvalue " + std::to_string(lam(i)) + " < 0");
    }
    lam(i) = f(std::max(lam(i), 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

inline Operator hermitian_sqrt(const Operator& rho) {
  return detail::psd_function(rho, [](double x) { return std::sqrt(x); }, "hermitian_sqrt");
}

/// Tr{rho ln rho} (nonpositive), with 0 ln 0 = 0.
inline double von_neumann_entropy(const Operator& rho) {
  require_square(rho, "von_neumann_entropy");
  const Eigen::VectorXd lam = hermitian_eigenvalues(rho);
  double e = 0.0;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tol::eigenvalue) {
      throw InvalidStateError("von_neumann_entropy: eigenvalue " + std::to_string(lam(i)) + " < 0");
    }
    if (lam(i) > 0.0) e += lam(i) * std::log(lam(i));
  }
  return e;
}

}  // namespace mixctl
