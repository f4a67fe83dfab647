#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "decoupling/riccati.hpp"
#include "test_support.hpp"

namespace {

using namespace decoupling;
using decoupling::testing::random_matrix;
using decoupling::testing::scalar_instance;
using decoupling::testing::scalar_riccati_root;
using decoupling::testing::uncoupled_instance;

const double kSqrt5 = std::sqrt(5.0);

// Written out from the Riccati form, independent of riccati_residual().
double riccati_oracle(const TwoChannelHamiltonian& h, const ComplexMatrix& q21) {
  const ComplexMatrix lhs = q21 * h.a1() - h.a2() * q21 + q21 * h.b12() * q21;
  return (lhs - h.b12().adjoint()).norm();
}

TEST(Admissibility, ScalarUnitBall) {
  const Admissibility a = check_admissibility(scalar_instance(), 1.0);
  EXPECT_DOUBLE_EQ(a.bound, 1.0);
  EXPECT_TRUE(a.admissible);
}

TEST(Admissibility, ZeroCoupling) {
  EXPECT_TRUE(check_admissibility(uncoupled_instance(), 1.0).admissible);
}

TEST(Admissibility, LargeDeltaFails) {
  ComplexMatrix a1(1, 1), a2(1, 1), b(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  b << 0.7;
  const Admissibility a = check_admissibility(TwoChannelHamiltonian(a1, a2, b), 2.0);
  // 2 * min{1/3, 2/5}
  EXPECT_NEAR(a.bound, 2.0 / 3.0, 1e-15);
  EXPECT_FALSE(a.admissible);
  EXPECT_THROW(check_admissibility(scalar_instance(), 0.0), Error);
}

TEST(Admissibility, BoundFormula) {
  for (double delta : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double expected = 3.0 * std::min(1.0 / (1.0 + delta), delta / (1.0 + delta * delta));
    EXPECT_DOUBLE_EQ(admissibility_bound(3.0, delta), expected);
  }
  EXPECT_DOUBLE_EQ(admissibility_bound(2.0, 1.0), 1.0);
}

TEST(FixedPointMap, ZeroCoupling) {
  const auto h = uncoupled_instance();
  EXPECT_EQ(fixed_point_map(h, kChannel1, ComplexMatrix::Zero(2, 3)).norm(), 0.0);
}

TEST(FixedPointMap, ScalarFirstStep) {
  const ComplexMatrix q1 = fixed_point_map(scalar_instance(), kChannel1, ComplexMatrix::Zero(1, 1));
  EXPECT_NEAR(std::abs(q1(0, 0) - Complex(-0.25)), 0.0, 1e-16);
}

TEST(FixedPointMap, ScalarFixedPoint) {
  ComplexMatrix q(1, 1);
  q << 2.0 - kSqrt5;
  const ComplexMatrix next = fixed_point_map(scalar_instance(), kChannel1, q);
  EXPECT_NEAR(std::abs(next(0, 0) - q(0, 0)), 0.0, 1e-15);
}

TEST(FixedPointMap, MatchesProjectorSumOracle) {
  std::mt19937_64 rng(4);
  const auto h = generate_instance({3, 5, 1.0, 0.6, 2});
  const ComplexMatrix q = 0.2 * random_matrix(5, 3, rng);
  const HermitianEig e2 = hermitian_eig(h.a2());
  const ComplexMatrix hq = h.a1() + h.b12() * q;
  ComplexMatrix oracle = ComplexMatrix::Zero(5, 3);
  for (Eigen::Index k = 0; k < 5; ++k) {
    const ComplexMatrix p = e2.eigenvectors.col(k) * e2.eigenvectors.col(k).adjoint();
    oracle += p * h.b21() * (hq - e2.eigenvalues(k) * ComplexMatrix::Identity(3, 3)).inverse();
  }
  EXPECT_LT((fixed_point_map(h, kChannel1, q) - oracle).norm(), 1e-13);
}

TEST(FixedPointMap, SingularResolventNamed) {
  // A1 + B Q - mu I singular when q pushes H(q) onto mu = 2.
  ComplexMatrix q(1, 1);
  q << 4.0;
  try {
    fixed_point_map(scalar_instance(), kChannel1, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResolventSingular);
    EXPECT_NE(std::string(e.what()).find("mu_0"), std::string::npos);
  }
}

TEST(Solve, ZeroCouplingOneIteration) {
  const RiccatiSolution s = solve(uncoupled_instance(), kChannel1, {});
  EXPECT_EQ(s.iterations_used, 1);
  EXPECT_EQ(s.q.norm(), 0.0);
  EXPECT_EQ(s.riccati_residual, 0.0);
}

TEST(Solve, ScalarClosedForm) {
  const RiccatiSolution s = solve(scalar_instance(), kChannel1, {});
  EXPECT_NEAR(s.q(0, 0).real(), 2.0 - kSqrt5, 1e-12);
  EXPECT_NEAR(s.q(0, 0).imag(), 0.0, 1e-15);
  EXPECT_LE(s.riccati_residual, 1e-12);
  EXPECT_TRUE(s.admissible);
}

TEST(Solve, ScalarClosedFormProperty) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> shift(-3.0, 3.0), dist(0.1, 5.0), frac(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = shift(rng), d = dist(rng);
    const double b = frac(rng) * d / 2 * (trial % 2 ? 1.0 : -1.0);
    ComplexMatrix a1(1, 1), a2(1, 1), b12(1, 1);
    a1 << a;
    a2 << a + d;
    b12 << b;
    const RiccatiSolution s = solve(TwoChannelHamiltonian(a1, a2, b12), kChannel1, {});
    EXPECT_NEAR(s.q(0, 0).real(), scalar_riccati_root(d, b), 1e-12) << "a=" << a << " d=" << d << " b=" << b;
  }
}

TEST(Solve, GeneratedInstanceConvergesGeometrically) {
  const auto h = generate_instance({8, 8, 1.0, 0.5, 3});
  const RiccatiSolution s = solve(h, kChannel1, {});
  EXPECT_LE(s.riccati_residual, 1e-10);
  EXPECT_NEAR(riccati_oracle(h, s.q), s.riccati_residual, 1e-13);
  ASSERT_GE(s.step_norms.size(), 3u);
  for (std::size_t n = 2; n < s.step_norms.size(); ++n) {
    if (s.step_norms[n - 1] > 1e-13) {
      EXPECT_LT(s.step_norms[n], s.step_norms[n - 1]);
    }
  }
}

TEST(Solve, ContractionAndBallInvarianceProperty) {
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const double c = seed % 3 == 0 ? 0.1 : (seed % 3 == 1 ? 0.5 : 0.95);
    const auto h = generate_instance({1 + static_cast<Eigen::Index>(seed % 9), 1 + static_cast<Eigen::Index>((seed * 5) % 7), 0.5 + 0.25 * static_cast<double>(seed % 4), c, seed});
    for (ChannelIndex alpha : {kChannel1, kChannel2}) {
      const RiccatiSolution s = solve(h, alpha, {});
      EXPECT_LE(s.max_iterate_norm, 1.0 + 1e-12);
      EXPECT_LE(s.q_operator_norm, 1.0 + 1e-12);
      for (std::size_t n = 2; n < s.step_norms.size(); ++n) {
        if (s.step_norms[n - 1] > 1e-13) {
          EXPECT_LE(s.step_norms[n], s.step_norms[n - 1]) << "seed " << seed;
        }
      }
    }
  }
}

TEST(Solve, ResidualConsistency) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto h = generate_instance({6, 4, 1.0, 0.8, seed});
    const RiccatiSolution s = solve(h, kChannel1, {});
    const HermitianEig e2 = hermitian_eig(h.a2());
    const double c = 1.0 + operator_norm(h.a1()) + operator_norm(h.b12()) * s.q_operator_norm +
                     e2.eigenvalues.cwiseAbs().maxCoeff();
    EXPECT_LE(s.fixed_point_residual, default_residual_tol(h));
    EXPECT_LE(s.riccati_residual, c * std::max(s.fixed_point_residual, 1e-15) * 10.0);
  }
}

TEST(Solve, UniquenessFromRandomStarts) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  const auto h = generate_instance({6, 6, 1.0, 0.9, 12});
  const RiccatiSolution ref = solve(h, kChannel1, {});
  for (int i = 0; i < 10; ++i) {
    ComplexMatrix q0 = random_matrix(6, 6, rng);
    q0 *= radius(rng) / operator_norm(q0);
    const RiccatiSolution s = solve(h, kChannel1, {}, q0);
    EXPECT_LT((s.q - ref.q).norm(), 1e-8);
  }
}

TEST(Solve, RefusesInadmissibleAndOverlap) {
  ComplexMatrix a(1, 1), b(1, 1);
  a << 1.0;
  b << 0.1;
  try {
    solve(TwoChannelHamiltonian(a, a, b), kChannel1, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Inadmissible);
  }
  ComplexMatrix a1(1, 1), a2(1, 1), big(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  big << 1.2;
  try {
    solve(TwoChannelHamiltonian(a1, a2, big), kChannel1, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Inadmissible);
  }
}

TEST(Solve, OverrideBeyondBoundIsLabeled) {
  // Scalar case stays solvable past the sufficient bound: 2|b| = 2.4 > d = 2.
  ComplexMatrix a1(1, 1), a2(1, 1), b(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  b << 1.2;
  SolverConfig cfg;
  cfg.allow_inadmissible = true;
  const RiccatiSolution s = solve(TwoChannelHamiltonian(a1, a2, b), kChannel1, cfg);
  EXPECT_FALSE(s.admissible);
  EXPECT_NEAR(s.q(0, 0).real(), scalar_riccati_root(2.0, 1.2), 1e-11);
}

TEST(Solve, NotConvergedAndDiverged) {
  const auto h = generate_instance({4, 4, 1.0, 0.9, 1});
  SolverConfig cfg;
  cfg.max_iterations = 2;
  try {
    solve(h, kChannel1, cfg);
    FAIL();
  } catch (const NotConvergedError& e) {
    EXPECT_EQ(e.iterations(), 2);
    EXPECT_GT(e.last_residual(), 0.0);
  }

  ComplexMatrix a(1, 1), b(1, 1);
  a << 1.0;
  b << 1.0;
  // Overlapping scalar channels: q -> 1/q oscillation never settles; a far
  // start with a tiny guard trips the divergence check.
  SolverConfig wild;
  wild.allow_inadmissible = true;
  wild.divergence_guard = 5.0;
  ComplexMatrix q0(1, 1);
  q0 << 0.1;
  try {
    solve(TwoChannelHamiltonian(a, a, b), kChannel1, wild, q0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Diverged);
  }
}

TEST(ConjugateSolution, Zero) {
  const auto h = uncoupled_instance();
  const RiccatiSolution c = conjugate_solution(h, solve(h, kChannel1, {}));
  EXPECT_EQ(c.alpha, kChannel2);
  EXPECT_EQ(c.q.norm(), 0.0);
}

TEST(ConjugateSolution, Scalar) {
  const auto h = scalar_instance();
  const RiccatiSolution c = conjugate_solution(h, solve(h, kChannel1, {}));
  EXPECT_NEAR(c.q(0, 0).real(), kSqrt5 - 2.0, 1e-12);
  // channel-2 scalar Riccati: 2q + 0.5 q^2 = 0.5
  const double q = c.q(0, 0).real();
  EXPECT_NEAR(2.0 * q + 0.5 * q * q, 0.5, 1e-12);
}

TEST(ConjugateSolution, ResidualBoundedByOriginalProperty) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto h = generate_instance({5, 3, 1.0, 0.7, seed});
    const RiccatiSolution s = solve(h, kChannel1, {});
    const RiccatiSolution c = conjugate_solution(h, s);
    EXPECT_LE(c.riccati_residual, 10.0 * std::max(s.riccati_residual, 1e-15));
  }
}

TEST(ConjugateSolution, MatchesIndependentChannel2Solve) {
  const auto h = generate_instance({7, 5, 2.0, 0.9, 6});
  const RiccatiSolution c = conjugate_solution(h, solve(h, kChannel1, {}));
  const RiccatiSolution d = solve(h, kChannel2, {});
  EXPECT_LT((c.q - d.q).norm(), 1e-9);
}

}  // namespace
