#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "decoupling/verify.hpp"
#include "test_support.hpp"

namespace {

using namespace decoupling;
using decoupling::testing::scalar_instance;
using decoupling::testing::uncoupled_instance;

const CheckResult& find(const SpectralReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("no check named " + name);
}

// Gram defect accumulated in long double, independent of Eigen products.
long double gram_defect_ld(const DecoupledChannel& ch) {
  const Eigen::Index n = ch.right_vectors.cols();
  long double worst = 0.0L;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      std::complex<long double> acc = 0.0L;
      for (Eigen::Index i = 0; i < ch.right_vectors.rows(); ++i) {
        const std::complex<long double> d(ch.left_duals(i, k).real(), -ch.left_duals(i, k).imag());
        const std::complex<long double> p(ch.right_vectors(i, j).real(), ch.right_vectors(i, j).imag());
        acc += d * p;
      }
      if (j == k) acc -= 1.0L;
      worst = std::max(worst, std::abs(acc));
    }
  return worst;
}

DecoupledChannel channel1(const TwoChannelHamiltonian& h) {
  return build_channel(h, solve(h, kChannel1, {}));
}

TEST(CheckBiorthogonality, IdentityBasis) {
  DecoupledChannel ch;
  ch.h_alpha = ComplexMatrix::Identity(3, 3);
  ch.right_vectors = ComplexMatrix::Identity(3, 3);
  ch.left_duals = ComplexMatrix::Identity(3, 3);
  EXPECT_EQ(check_biorthogonality(ch), 0.0);
  EXPECT_EQ(check_completeness(ch), 0.0);
}

TEST(CheckBiorthogonality, DetectsSkew) {
  DecoupledChannel ch;
  ch.h_alpha = ComplexMatrix::Identity(2, 2);
  ch.right_vectors = ComplexMatrix::Identity(2, 2);
  ch.left_duals = ComplexMatrix::Identity(2, 2);
  ch.left_duals(1, 0) = 0.25;
  EXPECT_DOUBLE_EQ(check_biorthogonality(ch), 0.25);
  EXPECT_DOUBLE_EQ(check_completeness(ch), 0.25);
}

TEST(CheckCompleteness, MissingVectorsThrow) {
  DecoupledChannel ch;
  ch.h_alpha = ComplexMatrix::Identity(3, 3);
  ch.right_vectors = ComplexMatrix::Identity(3, 2);
  ch.left_duals = ComplexMatrix::Identity(3, 2);
  try {
    check_completeness(ch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteEigensystem);
  }
}

TEST(CheckBiorthogonality, AgreesWithExtendedPrecisionOracle) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const DecoupledChannel ch = channel1(generate_instance({6, 5, 1.0, 0.9, seed}));
    const double lib = check_biorthogonality(ch);
    const long double oracle = gram_defect_ld(ch);
    EXPECT_LE(lib, 1e-10);
    EXPECT_NEAR(lib, static_cast<double>(oracle), 1e-14);
  }
}

TEST(FullReport, ZeroCoupling) {
  const SpectralReport r = full_report(uncoupled_instance(), {}, {});
  EXPECT_TRUE(r.verdict);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(*r.riccati_residual, 0.0);
  EXPECT_LE(*r.spectrum_match_max_error, 1e-15);
  EXPECT_EQ(r.solver_status, "converged");
}

TEST(FullReport, ScalarInstance) {
  const SpectralReport r = full_report(scalar_instance(), {}, {});
  EXPECT_TRUE(r.verdict);
  EXPECT_LE(*r.spectrum_match_max_error, 1e-12);
  ASSERT_EQ(r.spectrum_channel1.size(), 1u);
  EXPECT_NEAR(r.spectrum_channel1[0], 1.0 - std::sqrt(1.25), 1e-12);
  EXPECT_NEAR(r.spectrum_channel2[0], 1.0 + std::sqrt(1.25), 1e-12);
  EXPECT_GT(*r.x_min_eigenvalue, 1.0);
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.error;
}

TEST(FullReport, EveryCheckPresentInOrder) {
  const SpectralReport r = full_report(scalar_instance(), {}, {});
  const std::vector<std::string> expected{
      "admissibility",  "ball_membership",    "fixed_point_residual", "riccati_residual",
      "basic_equation", "original_problem",   "block_diagonalization", "unitarity",
      "self_adjointness", "invariant_subspace", "x_positivity",       "spectrum_split",
      "three_way_spectrum", "spectrum_disjoint", "reality",           "biorthogonality",
      "completeness",   "cross_channel"};
  ASSERT_EQ(r.checks.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(r.checks[i].name, expected[i]);
}

TEST(FullReport, InadmissibleIsSkippedAndFails) {
  ComplexMatrix a1(1, 1), a2(1, 1), b(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  b << 1.2;
  const SpectralReport r = full_report(TwoChannelHamiltonian(a1, a2, b), {}, {});
  EXPECT_FALSE(r.verdict);
  EXPECT_FALSE(r.guaranteed);
  EXPECT_FALSE(r.solver_ran);
  EXPECT_EQ(r.solver_status, "skipped: inadmissible");
  EXPECT_FALSE(find(r, "admissibility").passed);
  EXPECT_FALSE(find(r, "riccati_residual").value.has_value());
  EXPECT_FALSE(find(r, "riccati_residual").error.empty());
}

TEST(FullReport, OverrideBeyondBoundStillChecksEverythingElse) {
  ComplexMatrix a1(1, 1), a2(1, 1), b(1, 1);
  a1 << 0.0;
  a2 << 2.0;
  b << 1.2;
  SolverConfig cfg;
  cfg.allow_inadmissible = true;
  const SpectralReport r = full_report(TwoChannelHamiltonian(a1, a2, b), cfg, {});
  EXPECT_FALSE(r.verdict);
  EXPECT_TRUE(r.checks_passed_except_admissibility());
}

TEST(FullReport, CorruptedSolutionFailsRiccati) {
  const auto h = generate_instance({4, 4, 1.0, 0.5, 11});
  ComplexMatrix q = solve(h, kChannel1, {}).q;
  q(0, 0) += 1e-3;
  ReportOptions opts;
  opts.q_override = q;
  const SpectralReport r = full_report(h, {}, {}, opts);
  EXPECT_FALSE(r.verdict);
  EXPECT_EQ(r.solver_status, "supplied");
  EXPECT_FALSE(find(r, "riccati_residual").passed);
  EXPECT_FALSE(find(r, "block_diagonalization").passed);
  EXPECT_GT(*r.riccati_residual, 1e-6);
}

TEST(FullReport, SuppliedExactSolutionPasses) {
  const auto h = generate_instance({4, 4, 1.0, 0.5, 11});
  ReportOptions opts;
  opts.q_override = solve(h, kChannel1, {}).q;
  EXPECT_TRUE(full_report(h, {}, {}, opts).verdict);
}

TEST(FullReport, SuppliedWrongShapeThrows) {
  ReportOptions opts;
  opts.q_override = ComplexMatrix::Zero(2, 2);
  EXPECT_THROW(full_report(scalar_instance(), {}, {}, opts), Error);
}

TEST(FullReport, CrossChannelAgreement) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SpectralReport r = full_report(generate_instance({5, 6, 1.0, 0.9, seed}), {}, {});
    EXPECT_TRUE(r.verdict) << "seed " << seed;
    EXPECT_LE(*r.cross_channel_difference, 1e-9);
  }
}

TEST(FullReport, WithoutCrossCheck) {
  ReportOptions opts;
  opts.independent_channel2 = false;
  const SpectralReport r = full_report(scalar_instance(), {}, {}, opts);
  EXPECT_EQ(r.checks.size(), 17u);
  EXPECT_TRUE(r.verdict);
}

TEST(FullReport, ZeroToleranceFailsNonzeroDefect) {
  ToleranceProfile tol;
  tol.riccati = 0.0;
  const SpectralReport r = full_report(generate_instance({4, 4, 1.0, 0.5, 2}), {}, tol);
  if (*r.riccati_residual > 0.0) {
    EXPECT_FALSE(find(r, "riccati_residual").passed);
    EXPECT_FALSE(r.verdict);
  }
}

TEST(FullReport, Deterministic) {
  const auto h = generate_instance({6, 6, 1.0, 0.7, 5});
  const SpectralReport a = full_report(h, {}, {});
  const SpectralReport b = full_report(h, {}, {});
  EXPECT_EQ(a.instance_digest, b.instance_digest);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) EXPECT_EQ(a.checks[i].value, b.checks[i].value);
}

TEST(InstanceDigest, SensitiveToEveryEntry) {
  const auto h = scalar_instance();
  const std::string d = instance_digest(h);
  EXPECT_EQ(d.rfind("sha256:", 0), 0u);
  EXPECT_EQ(d.size(), 7u + 64u);
  ComplexMatrix b = h.b12();
  b(0, 0) = std::nextafter(0.5, 1.0);
  EXPECT_NE(instance_digest(TwoChannelHamiltonian(h.a1(), h.a2(), b)), d);
}

TEST(ToleranceProfile, SetKnownAndUnknown) {
  ToleranceProfile t;
  t.set("riccati", 1e-6);
  EXPECT_EQ(t.riccati, 1e-6);
  EXPECT_THROW(t.set("nonsense", 1.0), Error);
  EXPECT_THROW(t.set("riccati", -1.0), Error);
  int count = 0;
  t.for_each([&](const std::string&, double&) { ++count; });
  EXPECT_EQ(count, 16);
}

}  // namespace
