#pragma once

// Energy-independent channel Hamiltonians H_alpha = A_alpha + B_{alpha beta} Q_{beta alpha},
// their biorthogonal eigensystems, and the block transform that reduces the
// full Hamiltonian to diag{H1, H2}.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "decoupling/linalg.hpp"
#include "decoupling/model.hpp"
#include "decoupling/riccati.hpp"

namespace decoupling {

struct DecoupledChannel {
  ChannelIndex alpha = kChannel1;
  /// Q_{beta alpha} the channel was built from.
  ComplexMatrix q;
  ComplexMatrix h_alpha;
  ComplexMatrix w_alpha;
  /// X_alpha = I + Q* Q.
  ComplexMatrix x_alpha;
  /// Eigenvalue paired with each column of right_vectors, ascending real part.
  ComplexVector eigenvalues;
  /// Eigenvalues of h_alpha from a general (non-Hermitian) eigensolve.
  ComplexVector direct_eigenvalues;
  ComplexMatrix right_vectors;
  /// Duals X_alpha psi_j, scaled so that <psi_j, dual_j> = 1.
  ComplexMatrix left_duals;
  /// True when the eigensystem came from the Hermitian similarity transform.
  bool hermitian_route = false;
};

inline double default_reality_tol(const ComplexMatrix& h_alpha) {
  return 1e-10 * std::max(1.0, operator_norm(h_alpha));
}

namespace detail {

// Right eigenvectors of a non-Hermitian h, X-normalized, with X-orthogonal
// vectors inside numerically degenerate clusters.
inline void general_biorthogonal_system(const ComplexMatrix& h, const ComplexMatrix& x,
                                        ComplexVector& values, ComplexMatrix& vectors) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::EigFailure, "general eigensolver did not converge");
  const Eigen::Index n = h.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a).real() < es.eigenvalues()(b).real();
  });
  values.resize(n);
  vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    values(j) = es.eigenvalues()(order[static_cast<std::size_t>(j)]);
    vectors.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
  }
  const double cluster_tol = 1e-8 * std::max(1.0, operator_norm(h));
  Eigen::Index start = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j > start && std::abs(values(j) - values(start)) > cluster_tol) start = j;
    for (Eigen::Index i = start; i < j; ++i) {
      const Complex proj = vectors.col(i).dot(x * vectors.col(j));
      vectors.col(j) -= proj * vectors.col(i);
    }
    const double nrm2 = std::real(vectors.col(j).dot(x * vectors.col(j)));
    vectors.col(j) /= std::sqrt(nrm2);
  }
}

}  // namespace detail

/// Builds H_alpha and its eigensystem from a solution for channel alpha.
inline DecoupledChannel build_channel(const TwoChannelHamiltonian& h, const RiccatiSolution& sol,
                                      std::optional<double> reality_tol = std::nullopt) {
  const ChannelIndex alpha = sol.alpha;
  const Eigen::Index na = h.dim(alpha);
  if (sol.q.rows() != h.dim(alpha.complement()) || sol.q.cols() != na)
    throw Error(ErrorCode::DimensionMismatch, "Q has the wrong shape for this channel");

  DecoupledChannel ch;
  ch.alpha = alpha;
  ch.q = sol.q;
  ch.w_alpha = h.coupling(alpha) * sol.q;
  ch.h_alpha = h.channel(alpha) + ch.w_alpha;
  ch.x_alpha = ComplexMatrix::Identity(na, na) + sol.q.adjoint() * sol.q;

  ch.direct_eigenvalues = general_eigenvalues(ch.h_alpha);
  const double rtol = reality_tol.value_or(default_reality_tol(ch.h_alpha));
  const double max_imag = ch.direct_eigenvalues.imag().cwiseAbs().maxCoeff();
  if (!(max_imag <= rtol))
    throw Error(ErrorCode::NonRealSpectrum,
                "max |Im z| = " + std::to_string(max_imag) + " exceeds " + std::to_string(rtol));

  const HermitianEig xe = hermitian_eig(ch.x_alpha);
  const ComplexMatrix x_sqrt = xe.apply([](double v) { return std::sqrt(v); });
  const ComplexMatrix x_inv_sqrt = xe.apply([](double v) { return 1.0 / std::sqrt(v); });
  const ComplexMatrix similar = x_sqrt * ch.h_alpha * x_inv_sqrt;

  if (is_hermitian(similar)) {
    // psi = X^{-1/2} phi, dual = X^{1/2} phi for an orthonormal eigenbasis phi.
    const HermitianEig se = hermitian_eig(similar);
    ch.eigenvalues = se.eigenvalues.cast<Complex>();
    ch.right_vectors = x_inv_sqrt * se.eigenvectors;
    ch.left_duals = x_sqrt * se.eigenvectors;
    ch.hermitian_route = true;
  } else {
    detail::general_biorthogonal_system(ch.h_alpha, ch.x_alpha, ch.eigenvalues, ch.right_vectors);
    ch.left_duals = ch.x_alpha * ch.right_vectors;
  }
  return ch;
}

/// ||H_alpha - A_alpha - V_alpha(H_alpha)||_HS with
/// V_alpha(Y) = B_{alpha beta} sum_k P_k B_{beta alpha} (Y - mu_k)^{-1}.
inline double verify_basic_equation(const TwoChannelHamiltonian& h, const DecoupledChannel& ch,
                                    std::optional<double> resolvent_guard = std::nullopt) {
  const ChannelIndex alpha = ch.alpha;
  const ChannelIndex beta = alpha.complement();
  const Eigen::Index na = h.dim(alpha);
  const HermitianEig be = hermitian_eig(h.channel(beta));
  const double guard = resolvent_guard.value_or(default_resolvent_guard(h.channel(beta)));
  const ComplexMatrix b_ba = h.coupling(beta);

  ComplexMatrix spectral_sum = ComplexMatrix::Zero(h.dim(beta), na);
  for (Eigen::Index k = 0; k < be.eigenvalues.size(); ++k) {
    const double mu = be.eigenvalues(k);
    for (Eigen::Index j = 0; j < ch.direct_eigenvalues.size(); ++j)
      if (std::abs(ch.direct_eigenvalues(j) - mu) <= guard)
        throw Error(ErrorCode::ResolventSingular,
                    "eigenvalue of H_alpha within guard of mu_" + std::to_string(k));
    const ComplexMatrix projector = be.eigenvectors.col(k) * be.eigenvectors.col(k).adjoint();
    const ComplexMatrix shifted = ch.h_alpha - mu * ComplexMatrix::Identity(na, na);
    // B (Y - mu)^{-1} = ((Y - mu)^T \ B^T)^T
    const ComplexMatrix b_res = solve_linear(shifted.transpose(), b_ba.transpose()).transpose();
    spectral_sum += projector * b_res;
  }
  const ComplexMatrix v = h.coupling(alpha) * spectral_sum;
  return hilbert_schmidt_norm(ch.h_alpha - h.channel(alpha) - v);
}

/// ||(A_alpha + V_alpha(z_j)) psi_j - z_j psi_j|| / ||psi_j|| with V_alpha(z) from
/// the energy-dependent effective potential.
inline double eigenpair_solves_original(const TwoChannelHamiltonian& h, const DecoupledChannel& ch,
                                        Eigen::Index j) {
  if (j < 0 || j >= ch.eigenvalues.size())
    throw Error(ErrorCode::InvalidParams, "eigenpair index out of range");
  const Complex z = ch.eigenvalues(j);
  const ComplexVector psi = ch.right_vectors.col(j);
  const ComplexMatrix v = effective_potential(h, ch.alpha, z);
  const ComplexVector r = (h.channel(ch.alpha) + v) * psi - z * psi;
  return r.norm() / psi.norm();
}

struct DecouplingTransform {
  /// [[I, Q12], [Q21, I]].
  ComplexMatrix q_block;
  ComplexMatrix q_block_inverse;
  ComplexMatrix x1;
  ComplexMatrix x2;
  /// q_block * diag{X1, X2}^{-1/2}.
  ComplexMatrix q_tilde;
  /// q_block^{-1} H q_block; block diagonal up to roundoff.
  ComplexMatrix h_prime;
  /// q_tilde* H q_tilde; Hermitian and block diagonal.
  ComplexMatrix h_double_prime;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;

  ComplexMatrix h1_prime() const { return h_prime.topLeftCorner(n1, n1); }
  ComplexMatrix h2_prime() const { return h_prime.bottomRightCorner(n2, n2); }
  ComplexMatrix h1_double_prime() const { return h_double_prime.topLeftCorner(n1, n1); }
  ComplexMatrix h2_double_prime() const { return h_double_prime.bottomRightCorner(n2, n2); }

  double offdiag_norm() const {
    return std::hypot(hilbert_schmidt_norm(h_prime.topRightCorner(n1, n2)),
                      hilbert_schmidt_norm(h_prime.bottomLeftCorner(n2, n1)));
  }

  double unitarity_defect() const {
    const Eigen::Index n = q_tilde.cols();
    return hilbert_schmidt_norm(q_tilde.adjoint() * q_tilde - ComplexMatrix::Identity(n, n));
  }
};

/// Q_{21} from a solution for either channel.
inline ComplexMatrix channel1_q(const RiccatiSolution& sol) {
  return sol.alpha.value() == 1 ? sol.q : ComplexMatrix(-sol.q.adjoint());
}

inline DecouplingTransform build_transform(const TwoChannelHamiltonian& h,
                                           const RiccatiSolution& sol) {
  const ComplexMatrix q21 = channel1_q(sol);
  if (q21.rows() != h.n2() || q21.cols() != h.n1())
    throw Error(ErrorCode::DimensionMismatch, "Q has the wrong shape for this instance");
  const ComplexMatrix q12 = -q21.adjoint();
  const Eigen::Index n1 = h.n1(), n2 = h.n2();

  DecouplingTransform t;
  t.n1 = n1;
  t.n2 = n2;
  t.q_block = block2x2(ComplexMatrix::Identity(n1, n1), q12, q21, ComplexMatrix::Identity(n2, n2));
  t.q_block_inverse = inverse(t.q_block);
  t.x1 = ComplexMatrix::Identity(n1, n1) + q21.adjoint() * q21;
  t.x2 = ComplexMatrix::Identity(n2, n2) + q21 * q21.adjoint();

  const auto inv_sqrt = [](double v) { return 1.0 / std::sqrt(v); };
  const ComplexMatrix x1_inv_sqrt = hermitian_eig(t.x1).apply(inv_sqrt);
  const ComplexMatrix x2_inv_sqrt = hermitian_eig(t.x2).apply(inv_sqrt);
  const ComplexMatrix x_inv_sqrt = block2x2(x1_inv_sqrt, ComplexMatrix::Zero(n1, n2),
                                            ComplexMatrix::Zero(n2, n1), x2_inv_sqrt);
  t.q_tilde = t.q_block * x_inv_sqrt;

  const ComplexMatrix full = assemble_full(h);
  t.h_prime = t.q_block_inverse * full * t.q_block;
  t.h_double_prime = t.q_tilde.adjoint() * full * t.q_tilde;
  return t;
}

struct InvariantSubspace {
  ChannelIndex alpha = kChannel1;
  /// Columns {e_k, Q_{beta alpha} e_k}, laid out in full-space coordinates.
  ComplexMatrix basis;
  ComplexMatrix h_alpha;
  /// The part of H in this subspace: q_block diag{H_alpha, 0} q_block^{-1}.
  ComplexMatrix part;

  double invariance_residual(const TwoChannelHamiltonian& h) const {
    return hilbert_schmidt_norm(assemble_full(h) * basis - basis * h_alpha);
  }
};

inline InvariantSubspace invariant_subspace(const TwoChannelHamiltonian& h,
                                            const RiccatiSolution& sol) {
  const ChannelIndex alpha = sol.alpha;
  const Eigen::Index n1 = h.n1(), n2 = h.n2();
  const Eigen::Index na = h.dim(alpha);

  InvariantSubspace s;
  s.alpha = alpha;
  s.h_alpha = h.channel(alpha) + h.coupling(alpha) * sol.q;
  s.basis.resize(n1 + n2, na);
  if (alpha.value() == 1) {
    s.basis << ComplexMatrix::Identity(n1, n1), sol.q;
  } else {
    s.basis << sol.q, ComplexMatrix::Identity(n2, n2);
  }

  const DecouplingTransform t = build_transform(h, sol);
  ComplexMatrix diag = ComplexMatrix::Zero(n1 + n2, n1 + n2);
  if (alpha.value() == 1)
    diag.topLeftCorner(n1, n1) = s.h_alpha;
  else
    diag.bottomRightCorner(n2, n2) = s.h_alpha;
  s.part = t.q_block * diag * t.q_block_inverse;
  return s;
}

}  // namespace decoupling
