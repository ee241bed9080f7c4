#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mixctl/functionals.hpp"
#include "support/oracles.hpp"

using namespace mixctl;

namespace {

Operator diag2(double a, double b) {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

FunctionalSpec spec_of(FunctionalKind k, const Operator& target, double a1 = 0.5, double a2 = 0.5) {
  return FunctionalSpec{k, a1, a2, target};
}

}  // namespace

TEST(FunctionalKind, ParseRoundTrip) {
  for (auto k : {FunctionalKind::re, FunctionalKind::sm, FunctionalKind::hs, FunctionalKind::split,
                 FunctionalKind::split_adaptive}) {
    EXPECT_EQ(parse_functional_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_functional_kind("fidelity"), std::invalid_argument);
}

TEST(FunctionalSpec, RejectsVanishingWeights) {
  EXPECT_THROW(spec_of(FunctionalKind::split, diag2(0.6, 0.4), 0.0, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(spec_of(FunctionalKind::split, diag2(0.6, 0.4), -1.0, 1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(spec_of(FunctionalKind::split_adaptive, diag2(0.6, 0.4), 0.0, 0.0).validate());
}

TEST(OverlapFunctionals, TargetIsNotOptimal) {
  const Operator trg = diag2(0.6, 0.4);
  EXPECT_NEAR(d_re(trg, trg), 0.48, 1e-15);
  EXPECT_NEAR(d_re(basis_state(2, 0), trg), 0.40, 1e-15);
  EXPECT_NEAR(d_sm(basis_state(3, 1), basis_state(3, 1)), 0.0, 1e-15);
  EXPECT_NEAR(d_sm(trg, trg), 1.0 - 0.52 * 0.52, 1e-15);
}

TEST(OverlapFunctionals, UnreliabilityWitness) {
  for (int i = 1; i < 50; ++i) {
    const double beta = 0.5 + 0.5 * i / 50.0;
    const Operator trg = diag2(beta, 1.0 - beta);
    EXPECT_LT(d_re(basis_state(2, 0), trg), d_re(trg, trg)) << "beta=" << beta;
  }
}

TEST(Hs, Values) {
  EXPECT_EQ(d_hs(diag2(0.3, 0.7), diag2(0.3, 0.7)), 0.0);
  EXPECT_NEAR(d_hs(basis_state(2, 0), basis_state(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(d_hs(diag2(1.0, 0.0), diag2(0.6, 0.4)), 0.16, 1e-15);
  EXPECT_THROW(d_hs(identity(2), identity(3)), std::invalid_argument);
}

TEST(Hs, BlochForm) {
  std::mt19937_64 rng(21);
  for (Index n : {2, 3, 4}) {
    for (int t = 0; t < 20; ++t) {
      const Operator a = oracle::random_state(n, rng);
      const Operator b = oracle::random_state(n, rng);
      EXPECT_NEAR(d_hs(a, b), 0.5 * (bloch_dot(a, a) - 2.0 * bloch_dot(a, b) + bloch_dot(b, b)), 1e-12);
      EXPECT_NEAR(d_hs(a, b), d_hs(b, a), 1e-15);
    }
  }
}

TEST(AngleLength, Values) {
  EXPECT_NEAR(d_angle(diag2(0.9, 0.1), diag2(0.7, 0.3)), 0.0, 1e-15);
  EXPECT_NEAR(d_angle(basis_state(2, 0), basis_state(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(d_length(basis_state(2, 0), 0.5 * identity(2)), 1.0, 1e-15);
  EXPECT_NEAR(d_split(0.5, 0.5, basis_state(2, 0), basis_state(2, 1)), 0.5, 1e-15);
  EXPECT_NEAR(d_split(spec_of(FunctionalKind::split, basis_state(2, 1).matrix()), basis_state(2, 0)), 0.5, 1e-15);
  EXPECT_THROW(d_angle(0.5 * identity(2), basis_state(2, 0)), UndefinedAngleError);
  EXPECT_THROW(d_angle(basis_state(2, 0), 0.5 * identity(2)), UndefinedAngleError);
}

TEST(AngleLength, ArccosArgumentMatchesExplicitBlochVectors) {
  std::mt19937_64 rng(22);
  for (Index n : {2, 3, 4}) {
    for (int t = 0; t < 20; ++t) {
      const Operator a = oracle::random_state(n, rng);
      const Operator b = oracle::random_state(n, rng);
      const Eigen::VectorXd ra = oracle::bloch_vector(a);
      const Eigen::VectorXd rb = oracle::bloch_vector(b);
      const double cos_explicit = ra.dot(rb) / (ra.norm() * rb.norm());
      const double theta = std::acos(cos_explicit);
      EXPECT_NEAR(d_angle(a, b), theta * theta / (std::numbers::pi * std::numbers::pi), 1e-10);
      const double nn = static_cast<double>(n);
      EXPECT_NEAR(d_length(a, b), nn / (nn - 1.0) * std::pow(ra.norm() - rb.norm(), 2), 1e-12);
    }
  }
}

TEST(AngleLength, NearlyMaximallyMixedStatesStayConsistent) {
  // Bloch vectors of length ~1e-6 along the same axis. Rounding 0.5 +- 1e-6
  // already perturbs the direction by ~eps/1e-6, which bounds the accuracy;
  // an acos of the cosine would be off by ~sqrt(eps) ~ 1e-8 at pi.
  const Operator a = diag2(0.5 + 1e-6, 0.5 - 1e-6);
  const Operator b = diag2(0.5 + 3e-6, 0.5 - 3e-6);
  EXPECT_NEAR(d_angle(a, b), 0.0, 1e-12);
  EXPECT_NEAR(d_angle(a, diag2(0.5 - 2e-6, 0.5 + 2e-6)), 1.0, 1e-9);
}

TEST(Seeds, ClosedForms) {
  std::mt19937_64 rng(23);
  const Operator trg = oracle::random_state(3, rng);
  const Operator rho = oracle::random_state(3, rng);
  EXPECT_EQ(max_abs(costate_seed(spec_of(FunctionalKind::re, trg), rho).matrix() - trg), 0.0);
  EXPECT_LT(max_abs(costate_seed(spec_of(FunctionalKind::sm, trg), rho).matrix() -
                    2.0 * hs_overlap(rho, trg).real() * trg),
            1e-15);
  EXPECT_LT(max_abs(costate_seed(spec_of(FunctionalKind::hs, trg), rho).matrix() - (trg - rho)), 1e-15);
  EXPECT_EQ(max_abs(costate_seed(spec_of(FunctionalKind::hs, trg), trg).matrix()), 0.0);
}

TEST(Seeds, SplitRequiresNonMaximallyMixedState) {
  EXPECT_THROW(costate_seed(spec_of(FunctionalKind::split, diag2(0.6, 0.4)), 0.5 * identity(2)),
               DegenerateStateError);
}

TEST(Seeds, ParallelGuardGivesZeroAngleGradient) {
  const Operator g = grad_angle(diag2(0.9, 0.1), diag2(0.7, 0.3));
  EXPECT_EQ(max_abs(g), 0.0);
  // maximally mixed target: angle term has no direction, gradient is zero
  EXPECT_EQ(max_abs(grad_angle(diag2(0.9, 0.1), 0.5 * identity(2))), 0.0);
}

TEST(Seeds, FiniteDifferenceGradients) {
  std::mt19937_64 rng(24);
  const double eps = 1e-5;
  double worst = 0.0;
  for (Index n : {2, 4}) {
    for (int t = 0; t < 100; ++t) {
      const Operator rho = oracle::random_state(n, rng);
      const Operator trg = oracle::random_state(n, rng);
      const Operator delta = oracle::random_traceless_hermitian(n, rng);
      struct Case {
        Operator grad;
        std::function<double(const Operator&)> f;
      };
      const Case cases[] = {
          {-costate_seed(spec_of(FunctionalKind::hs, trg), rho).matrix(), [&](const Operator& x) { return d_hs(x, trg); }},
          {-costate_seed(spec_of(FunctionalKind::split, trg, 1.0, 0.0), rho).matrix(),
           [&](const Operator& x) { return d_angle(x, trg); }},
          {-costate_seed(spec_of(FunctionalKind::split, trg, 0.0, 1.0), rho).matrix(),
           [&](const Operator& x) { return d_length(x, trg); }},
      };
      for (const auto& c : cases) {
        const double an = hs_overlap(c.grad, delta).real();
        const double fd = oracle::central_difference(c.f, rho, delta, eps);
        const double rel = std::abs(an - fd) / std::max(std::abs(fd), c.grad.norm());
        worst = std::max(worst, rel);
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Seeds, SmAndReFiniteDifference) {
  std::mt19937_64 rng(25);
  const Operator rho = oracle::random_state(3, rng);
  const Operator trg = oracle::random_state(3, rng);
  const Operator delta = oracle::random_traceless_hermitian(3, rng);
  for (auto k : {FunctionalKind::re, FunctionalKind::sm}) {
    const auto s = spec_of(k, trg);
    const double an = -hs_overlap(costate_seed(s, rho).matrix(), delta).real();
    const double fd = oracle::central_difference([&](const Operator& x) { return functional_value(s, x); }, rho, delta, 1e-5);
    EXPECT_NEAR(an, fd, 1e-9);
  }
}

TEST(Diagnostics, Values) {
  EXPECT_NEAR(d_trace(diag2(1.0, 0.0), diag2(0.6, 0.4)), 0.4, 1e-15);
  EXPECT_NEAR(d_trace(basis_state(2, 0), basis_state(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(d_bures(basis_state(2, 0), basis_state(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(d_hellinger(diag2(0.6, 0.4), diag2(0.4, 0.6)), std::sqrt(1.0 - 2.0 * std::sqrt(0.24)), 1e-12);
  const Operator rho = diag2(0.3, 0.7);
  EXPECT_EQ(d_trace(rho, rho), 0.0);
  EXPECT_LE(d_bures(rho, rho), 1e-9);
  EXPECT_LE(d_hellinger(rho, rho), 1e-9);
  EXPECT_LE(d_js(rho, rho), 1e-9);
}

TEST(Diagnostics, JensenShannonMatchesClassicalFormula) {
  // commuting states reduce to the classical Jensen-Shannon divergence
  const double p = 0.8, q = 0.3;
  auto h = [](double x) { return x > 0 ? -x * std::log(x) : 0.0; };
  const double js = h(0.5 * (p + q)) + h(1 - 0.5 * (p + q)) - 0.5 * (h(p) + h(1 - p)) - 0.5 * (h(q) + h(1 - q));
  EXPECT_NEAR(d_js(diag2(p, 1 - p), diag2(q, 1 - q)), std::sqrt(js), 1e-12);
  EXPECT_NEAR(d_js(basis_state(2, 0), basis_state(2, 1)), std::sqrt(std::log(2.0)), 1e-12);
}

TEST(Report, IdenticalAndKnownPairs) {
  std::mt19937_64 rng(26);
  const Operator rho = oracle::random_state(3, rng);
  const auto r = distance_report(rho, rho);
  EXPECT_NEAR(r.d_re, 1.0 - purity(rho), 1e-14);
  for (double v : {r.d_hs, *r.d_angle, r.d_length, *r.d_split, r.d_trace, r.d_bures, r.d_hellinger, r.d_js}) {
    EXPECT_LE(v, 1e-9);
  }
  const auto k = distance_report(basis_state(2, 0), diag2(0.6, 0.4));
  EXPECT_NEAR(k.d_trace, 0.4, 1e-15);
  EXPECT_NEAR(k.d_hs, 0.16, 1e-15);
  EXPECT_NEAR(k.d_re, 0.40, 1e-15);
  const auto u = distance_report(0.5 * identity(2), diag2(0.6, 0.4));
  EXPECT_FALSE(u.d_angle.has_value());
  EXPECT_FALSE(u.d_split.has_value());
}

TEST(Report, ReliabilityFuzz) {
  std::mt19937_64 rng(27);
  for (Index n : {2, 3, 4}) {
    for (int t = 0; t < 300; ++t) {
      const Operator a = oracle::random_state(n, rng);
      const Operator b = (t % 3 == 0) ? Operator(a) : oracle::random_state(n, rng);
      const bool equal = max_abs(a - b) <= 1e-10;
      const auto r = distance_report(a, b);
      const double vals[] = {r.d_trace, r.d_bures, r.d_hellinger, r.d_js, r.d_hs, *r.d_split};
      for (double v : vals) {
        EXPECT_GE(v, 0.0);
        EXPECT_EQ(v <= 1e-9, equal);
      }
      for (double v : {*r.d_angle, r.d_length, r.d_trace, r.d_bures, *r.d_split}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}
