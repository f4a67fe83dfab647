#pragma once

// Two-channel Hamiltonians H = [[A1, B12], [B12*, A2]], the energy-dependent
// effective potential of one channel, and a seeded instance generator.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "decoupling/linalg.hpp"

namespace decoupling {

/// Channel label 1 or 2. The complementary channel is always the other one.
class ChannelIndex {
 public:
  constexpr explicit ChannelIndex(int value) : value_(value) {
    if (value != 1 && value != 2)
      throw Error(ErrorCode::InvalidParams, "channel index must be 1 or 2, got " + std::to_string(value));
  }

  constexpr int value() const noexcept { return value_; }
  constexpr ChannelIndex complement() const { return ChannelIndex(3 - value_); }

  friend constexpr bool operator==(ChannelIndex, ChannelIndex) = default;

 private:
  int value_;
};

inline constexpr ChannelIndex kChannel1{1};
inline constexpr ChannelIndex kChannel2{2};

class TwoChannelHamiltonian {
 public:
  /// Validates shapes, finiteness and hermiticity of the channel blocks.
  /// Blocks within tolerance of Hermitian are stored symmetrized.
  TwoChannelHamiltonian(ComplexMatrix a1, ComplexMatrix a2, ComplexMatrix b12,
                        std::optional<double> hermitian_tol = std::nullopt) {
    require_square(a1, "a1");
    require_square(a2, "a2");
    if (a1.rows() < 1 || a2.rows() < 1)
      throw Error(ErrorCode::InvalidParams, "channel dimensions must be at least 1");
    if (b12.rows() != a1.rows() || b12.cols() != a2.rows())
      throw Error(ErrorCode::DimensionMismatch,
                  "b12 is " + std::to_string(b12.rows()) + "x" + std::to_string(b12.cols()) +
                      ", expected " + std::to_string(a1.rows()) + "x" + std::to_string(a2.rows()));
    require_finite(a1, "a1");
    require_finite(a2, "a2");
    require_finite(b12, "b12");
    check_hermitian(a1, "a1", hermitian_tol);
    check_hermitian(a2, "a2", hermitian_tol);
    a1_ = 0.5 * (a1 + a1.adjoint());
    a2_ = 0.5 * (a2 + a2.adjoint());
    b12_ = std::move(b12);
  }

  Eigen::Index n1() const noexcept { return a1_.rows(); }
  Eigen::Index n2() const noexcept { return a2_.rows(); }
  Eigen::Index dim(ChannelIndex alpha) const noexcept { return alpha.value() == 1 ? n1() : n2(); }

  const ComplexMatrix& a1() const noexcept { return a1_; }
  const ComplexMatrix& a2() const noexcept { return a2_; }
  const ComplexMatrix& b12() const noexcept { return b12_; }
  ComplexMatrix b21() const { return b12_.adjoint(); }

  /// A_alpha.
  const ComplexMatrix& channel(ChannelIndex alpha) const noexcept {
    return alpha.value() == 1 ? a1_ : a2_;
  }

  /// B_{alpha beta}: maps channel beta into channel alpha.
  ComplexMatrix coupling(ChannelIndex alpha) const {
    return alpha.value() == 1 ? b12_ : ComplexMatrix(b12_.adjoint());
  }

 private:
  static void check_hermitian(const ComplexMatrix& m, const std::string& name,
                              std::optional<double> tol) {
    const double t = tol.value_or(default_hermitian_tol(m));
    const double defect = hermitian_defect(m);
    if (!(defect <= t))
      throw Error(ErrorCode::NotHermitian, name + " is not Hermitian: ||m - m*||_inf = " +
                                               std::to_string(defect));
  }

  ComplexMatrix a1_;
  ComplexMatrix a2_;
  ComplexMatrix b12_;
};

/// The full (n1+n2)-square block matrix.
inline ComplexMatrix assemble_full(const TwoChannelHamiltonian& h) {
  return block2x2(h.a1(), h.b12(), h.b21(), h.a2());
}

struct GapReport {
  RealVector sigma1;
  RealVector sigma2;
  double d0 = 0.0;
  double b_hs_norm = 0.0;
  /// d0/2 - ||B12||_2; positive means the unit-ball solvability condition holds.
  double unit_ball_margin = 0.0;
};

inline GapReport gap_report(const TwoChannelHamiltonian& h) {
  GapReport r;
  r.sigma1 = hermitian_eig(h.a1()).eigenvalues;
  r.sigma2 = hermitian_eig(h.a2()).eigenvalues;
  r.d0 = spectral_distance(r.sigma1, r.sigma2);
  r.b_hs_norm = hilbert_schmidt_norm(h.b12());
  r.unit_ball_margin = 0.5 * r.d0 - r.b_hs_norm;
  return r;
}

/// Default pole guard for resolvent evaluations: 1e-8 * max(1, ||A_beta||).
inline double default_resolvent_guard(const ComplexMatrix& a_beta) {
  return 1e-8 * std::max(1.0, operator_norm(a_beta));
}

/// V_alpha(z) = -B_{alpha beta} (A_beta - z)^{-1} B_{beta alpha}, evaluated by a
/// direct linear solve against A_beta - z.
inline ComplexMatrix effective_potential(const TwoChannelHamiltonian& h, ChannelIndex alpha,
                                         Complex z,
                                         std::optional<double> resolvent_guard = std::nullopt) {
  const ChannelIndex beta = alpha.complement();
  const ComplexMatrix& a_beta = h.channel(beta);
  const double guard = resolvent_guard.value_or(default_resolvent_guard(a_beta));
  const RealVector mu = hermitian_eig(a_beta).eigenvalues;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (std::abs(z - mu(k)) <= guard)
      throw Error(ErrorCode::ResolventSingular,
                  "z is within " + std::to_string(guard) + " of eigenvalue " +
                      std::to_string(mu(k)) + " of A_" + std::to_string(beta.value()));
  }
  const Eigen::Index nb = a_beta.rows();
  const ComplexMatrix shifted = a_beta - z * ComplexMatrix::Identity(nb, nb);
  const ComplexMatrix b_ab = h.coupling(alpha);
  const ComplexMatrix b_ba = h.coupling(beta);
  return -b_ab * solve_linear(shifted, b_ba);
}

struct GeneratorParams {
  Eigen::Index n1 = 1;
  Eigen::Index n2 = 1;
  double gap = 1.0;
  double coupling_scale = 0.5;
  std::uint64_t seed = 0;
};

namespace detail {

// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
// diag(R) folded back into Q.
inline ComplexMatrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

// Hermitian matrix with one eigenvalue pinned at `pinned` and the rest drawn
// uniformly from [lo, hi].
inline ComplexMatrix random_hermitian(Eigen::Index n, double pinned, double lo, double hi,
                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(lo, hi);
  ComplexVector lambda(n);
  lambda(0) = pinned;
  for (Eigen::Index i = 1; i < n; ++i) lambda(i) = uniform(rng);
  const ComplexMatrix u = random_unitary(n, rng);
  ComplexMatrix m = u * lambda.asDiagonal() * u.adjoint();
  return 0.5 * (m + m.adjoint());
}

}  // namespace detail

/// Seeded test instance with sigma(A1) in [-s, 0], sigma(A2) in [gap, gap + s],
/// s = max(gap, 1), dist(sigma(A1), sigma(A2)) = gap and
/// ||B12||_2 = coupling_scale * gap / 2.
inline TwoChannelHamiltonian generate_instance(const GeneratorParams& p) {
  if (p.n1 < 1 || p.n2 < 1) throw Error(ErrorCode::InvalidParams, "n1 and n2 must be at least 1");
  if (!(p.gap > 0.0) || !std::isfinite(p.gap))
    throw Error(ErrorCode::InvalidParams, "gap must be positive and finite");
  if (!(p.coupling_scale > 0.0 && p.coupling_scale < 1.0))
    throw Error(ErrorCode::InvalidParams, "coupling_scale must lie in (0, 1)");

  std::mt19937_64 rng(p.seed);
  const double spread = std::max(p.gap, 1.0);
  ComplexMatrix a1 = detail::random_hermitian(p.n1, 0.0, -spread, 0.0, rng);
  ComplexMatrix a2 = detail::random_hermitian(p.n2, p.gap, p.gap, p.gap + spread, rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix b(p.n1, p.n2);
  for (Eigen::Index j = 0; j < p.n2; ++j)
    for (Eigen::Index i = 0; i < p.n1; ++i) b(i, j) = Complex(normal(rng), normal(rng));
  b *= (p.coupling_scale * p.gap / 2.0) / b.norm();

  return TwoChannelHamiltonian(std::move(a1), std::move(a2), std::move(b));
}

}  // namespace decoupling
