#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mixctl/operators.hpp"
#include "support/oracles.hpp"

using namespace mixctl;

namespace {

Operator diag2(double a, double b) {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST(DensityMatrix, AcceptsValidAndRejectsInvalid) {
  EXPECT_NO_THROW(DensityMatrix(diag2(0.6, 0.4)));
  EXPECT_THROW(DensityMatrix(diag2(0.6, 0.5)), InvalidStateError);
  EXPECT_THROW(DensityMatrix(diag2(1.2, -0.2)), InvalidStateError);
  Operator nh = diag2(0.5, 0.5);
  nh(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix{nh}, InvalidStateError);
  EXPECT_THROW(DensityMatrix(Operator::Zero(2, 3)), std::invalid_argument);
}

TEST(CoState, AllowsArbitraryTraceButRequiresHermiticity) {
  EXPECT_NO_THROW(CoState(diag2(3.0, -7.0)));
  Operator nh = diag2(1.0, 1.0);
  nh(0, 1) = Complex(0.0, 1.0);
  EXPECT_THROW(CoState{nh}, InvalidStateError);
}

TEST(Tensor, IdentityAndDiagonalCases) {
  EXPECT_TRUE(tensor(identity(2), identity(2)).isApprox(identity(4)));
  const Operator d = tensor(diag2(1.0, 2.0), identity(2));
  Operator expect = Operator::Zero(4, 4);
  expect.diagonal() << 1.0, 1.0, 2.0, 2.0;
  EXPECT_EQ(max_abs(d - expect), 0.0);
}

TEST(Tensor, MatchesIndexOracle) {
  std::mt19937_64 rng(11);
  const Operator sm = annihilation(2);
  EXPECT_EQ(max_abs(tensor(sm, sm) - oracle::kron(sm, sm)), 0.0);
  const Operator a = oracle::random_hermitian(3, rng);
  const Operator b = oracle::random_hermitian(4, rng);
  EXPECT_LT(max_abs(tensor(a, b) - oracle::kron(a, b)), 1e-15);
}

TEST(PartialTrace, RecoversProductFactors) {
  std::mt19937_64 rng(12);
  const Operator ra = oracle::random_state(2, rng);
  const Operator rb = oracle::random_state(3, rng);
  const Operator joint = tensor(ra, rb);
  EXPECT_LT(max_abs(partial_trace(joint, {2, 3}, 1) - rb), 1e-14);
  EXPECT_LT(max_abs(partial_trace(joint, {2, 3}, 0) - ra), 1e-14);
}

TEST(PartialTrace, BellStateGivesMaximallyMixed) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  const Operator rho = psi * psi.adjoint();
  EXPECT_LT(max_abs(partial_trace(rho, {2, 2}, 0) - 0.5 * identity(2)), 1e-15);
}

TEST(PartialTrace, RandomStateMatchesDirectSum) {
  std::mt19937_64 rng(13);
  const Operator rho = oracle::random_state(6, rng);
  const Operator red = partial_trace(rho, {2, 3}, 0);
  Operator direct = Operator::Zero(2, 2);
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 2; ++b)
      for (Index k = 0; k < 3; ++k) direct(a, b) += rho(a * 3 + k, b * 3 + k);
  EXPECT_LT(max_abs(red - direct), 1e-15);
  EXPECT_NEAR(red.trace().real(), 1.0, 1e-12);
  EXPECT_LT(hermiticity_defect(red), 1e-15);
}

TEST(PartialTrace, RejectsBadDims) {
  EXPECT_THROW(partial_trace(identity(6), {2, 2}, 0), std::invalid_argument);
  EXPECT_THROW(partial_trace(identity(4), {2, 2}, 2), std::invalid_argument);
}

TEST(Annihilation, Entries) {
  const Operator a2 = annihilation(2);
  EXPECT_EQ(a2(0, 1), Complex(1.0));
  EXPECT_EQ(max_abs(a2), 1.0);
  EXPECT_DOUBLE_EQ(annihilation(3)(1, 2).real(), std::sqrt(2.0));
  EXPECT_THROW(annihilation(1), std::invalid_argument);
}

TEST(Annihilation, TruncatedCommutator) {
  const Operator b = annihilation(40);
  const Operator c = b * b.adjoint() - b.adjoint() * b;
  for (Index k = 0; k < 39; ++k) EXPECT_NEAR(c(k, k).real(), 1.0, 1e-12);
  EXPECT_NEAR(c(39, 39).real(), -39.0, 1e-12);
  EXPECT_LT(max_abs(c - Operator(c.diagonal().asDiagonal())), 1e-15);
}

TEST(ThermalState, ZeroTemperatureIsGround) {
  EXPECT_EQ(max_abs(thermal_state(5, 0.0).matrix() - basis_state(5, 0).matrix()), 0.0);
}

TEST(ThermalState, OccupationAndVariance) {
  const Operator rho = thermal_state(40, 2.0);
  const Operator b = annihilation(40);
  // truncated geometric series: sum k q^k / sum q^k
  const double q = 2.0 / 3.0;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 40; ++k) {
    num += k * std::pow(q, k);
    den += std::pow(q, k);
  }
  EXPECT_NEAR(expectation(rho, b.adjoint() * b), num / den, 1e-12);
  EXPECT_NEAR(expectation(rho, b.adjoint() * b), 2.0, 1e-3);
  const Operator x = (b + b.adjoint()) / std::sqrt(2.0);
  EXPECT_NEAR(expectation(rho, x * x), 2.5, 1e-3);
}

TEST(ThermalState, DiagonalAndCommutesWithNumber) {
  const Operator rho = thermal_state(12, 0.7);
  const Operator b = annihilation(12);
  const Operator num = b.adjoint() * b;
  EXPECT_EQ(max_abs(rho - Operator(rho.diagonal().asDiagonal())), 0.0);
  EXPECT_LT(max_abs(rho * num - num * rho), 1e-15);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
}

TEST(HsOverlap, QubitCounterexampleValues) {
  const Operator trg = diag2(0.6, 0.4);
  EXPECT_NEAR(hs_overlap(trg, trg).real(), 0.52, 1e-15);
  EXPECT_NEAR(hs_overlap(basis_state(2, 0), trg).real(), 0.6, 1e-15);
  for (double a : {0.1, 0.35, 0.8}) EXPECT_NEAR(hs_overlap(diag2(a, 1 - a), 0.5 * identity(2)).real(), 0.5, 1e-15);
  EXPECT_THROW(hs_overlap(identity(2), identity(3)), std::invalid_argument);
}

TEST(BlochDot, HandValuesAndSymmetry) {
  EXPECT_NEAR(bloch_dot(basis_state(2, 0), basis_state(2, 1)), -0.5, 1e-15);
  std::mt19937_64 rng(14);
  const Operator a = oracle::random_state(3, rng);
  const Operator b = oracle::random_state(3, rng);
  EXPECT_NEAR(bloch_dot(a, b), bloch_dot(b, a), 1e-15);
  EXPECT_NEAR(bloch_dot(a, a), purity(a) - 1.0 / 3.0, 1e-14);
}

TEST(BlochDot, MatchesGellMannCoefficients) {
  std::mt19937_64 rng(15);
  for (Index n : {2, 3, 4}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Operator a = oracle::random_state(n, rng);
      const Operator b = oracle::random_state(n, rng);
      const double explicit_dot = oracle::bloch_vector(a).dot(oracle::bloch_vector(b));
      EXPECT_NEAR(bloch_dot(a, b), explicit_dot, 1e-12);
      EXPECT_NEAR(hs_overlap(a, b).real(), explicit_dot + 1.0 / static_cast<double>(n), 1e-12);
    }
  }
}

TEST(BlochLength, Values) {
  EXPECT_EQ(bloch_length(0.25 * identity(4)), 0.0);
  EXPECT_NEAR(bloch_length(basis_state(2, 1)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(bloch_length(diag2(0.6, 0.4)), std::sqrt(0.02), 1e-14);
}

TEST(BlochLength, PurityIdentityAndRange) {
  std::mt19937_64 rng(16);
  for (Index n : {2, 3, 4, 8}) {
    const double nn = static_cast<double>(n);
    for (int trial = 0; trial < 25; ++trial) {
      const Operator rho = oracle::random_state(n, rng);
      const double l = bloch_length(rho);
      EXPECT_NEAR(purity(rho), 1.0 / nn + l * l, 1e-12);
      EXPECT_LE(l, std::sqrt((nn - 1.0) / nn) + 1e-12);
    }
    EXPECT_NEAR(bloch_length(oracle::random_pure_state(n, rng)), std::sqrt((nn - 1.0) / nn), 1e-12);
  }
}

TEST(Expectation, ZeroPointAndIdentity) {
  const Operator b = annihilation(10);
  const Operator x = (b + b.adjoint()) / std::sqrt(2.0);
  EXPECT_NEAR(expectation(basis_state(10, 0), x * x), 0.5, 1e-15);
  std::mt19937_64 rng(17);
  EXPECT_NEAR(expectation(oracle::random_state(5, rng), identity(5)), 1.0, 1e-14);
}

TEST(Expectation, RejectsNonHermitianObservable) {
  Operator obs = Operator::Zero(2, 2);
  obs(0, 1) = 1.0;
  Operator rho = diag2(0.5, 0.5);
  rho(0, 1) = Complex(0.0, 0.3);
  rho(1, 0) = Complex(0.0, -0.3);
  EXPECT_THROW(expectation(rho, obs), NumericalConsistencyError);
}

TEST(HermitianSqrt, KnownCases) {
  EXPECT_LT(max_abs(hermitian_sqrt(0.25 * identity(4)) - 0.5 * identity(4)), 1e-15);
  EXPECT_LT(max_abs(hermitian_sqrt(diag2(0.64, 0.36)) - diag2(0.8, 0.6)), 1e-15);
  EXPECT_THROW(hermitian_sqrt(diag2(1.1, -0.1)), InvalidStateError);
}

TEST(HermitianSqrt, SquaresBackAndIsIdempotent) {
  std::mt19937_64 rng(18);
  const Operator rho = oracle::random_state(8, rng);
  const Operator s = hermitian_sqrt(rho);
  EXPECT_LT(max_abs(s * s - rho), 1e-8);
  EXPECT_LT(max_abs(hermitian_sqrt(s * s) - s), 1e-7);
  EXPECT_GT(hermitian_eigenvalues(s).minCoeff(), -1e-12);
}

TEST(HermitianSqrt, ClampsTinyNegativeEigenvalues) {
  const Operator s = hermitian_sqrt(diag2(1.0 + 5e-11, -5e-11));
  EXPECT_NEAR(s(0, 0).real(), 1.0, 1e-10);
  EXPECT_EQ(s(1, 1).real(), 0.0);
}

TEST(Entropy, Values) {
  EXPECT_NEAR(von_neumann_entropy(basis_state(3, 2)), 0.0, 1e-15);
  EXPECT_NEAR(von_neumann_entropy(0.5 * identity(2)), -std::log(2.0), 1e-15);
  EXPECT_NEAR(von_neumann_entropy(diag2(0.6, 0.4)), 0.6 * std::log(0.6) + 0.4 * std::log(0.4), 1e-15);
}
