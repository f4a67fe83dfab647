#pragma once

// Contraction fixed-point solver for the angular operator Q_{beta alpha}:
//
//   Q = sum_k P_k B_{beta alpha} (A_alpha + B_{alpha beta} Q - mu_k)^{-1},
//
// where A_beta = sum_k mu_k P_k. At the fixed point Q also satisfies the
// stationary Riccati equation
//
//   Q A_alpha - A_beta Q + Q B_{alpha beta} Q = B_{beta alpha}.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "decoupling/linalg.hpp"
#include "decoupling/model.hpp"

namespace decoupling {

struct SolverConfig {
  /// Radius of the ball ||Q|| <= delta the solution is sought in.
  double delta = 1.0;
  int max_iterations = 500;
  /// Absolute stopping tolerance; unset means 1e-12 * max(1, ||B12||_2).
  std::optional<double> residual_tol;
  double divergence_guard = 1e3;
  /// Attempt the iteration even when the solvability bound fails.
  bool allow_inadmissible = false;
};

struct Admissibility {
  bool admissible = false;
  /// d0 * min{1/(1+delta), delta/(1+delta^2)}.
  double bound = 0.0;
  double d0 = 0.0;
  double b_hs_norm = 0.0;
};

inline double admissibility_bound(double d0, double delta) {
  return d0 * std::min(1.0 / (1.0 + delta), delta / (1.0 + delta * delta));
}

inline Admissibility check_admissibility(const TwoChannelHamiltonian& h, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidParams, "delta must be positive");
  const GapReport g = gap_report(h);
  Admissibility a;
  a.d0 = g.d0;
  a.b_hs_norm = g.b_hs_norm;
  a.bound = admissibility_bound(g.d0, delta);
  a.admissible = g.b_hs_norm < a.bound;
  return a;
}

/// The map Q -> Phi(Q) for one channel. A_beta is diagonalized once; in its
/// eigenbasis row k of U* Phi(Q) is (U* B_{beta alpha})_k (H(Q) - mu_k)^{-1}.
class FixedPointMap {
 public:
  FixedPointMap(const TwoChannelHamiltonian& h, ChannelIndex alpha)
      : alpha_(alpha),
        a_alpha_(h.channel(alpha)),
        b_ab_(h.coupling(alpha)),
        beta_eig_(hermitian_eig(h.channel(alpha.complement()))),
        c_(beta_eig_.eigenvectors.adjoint() * h.coupling(alpha.complement())) {}

  ChannelIndex alpha() const noexcept { return alpha_; }
  Eigen::Index rows() const noexcept { return c_.rows(); }
  Eigen::Index cols() const noexcept { return c_.cols(); }
  const RealVector& beta_spectrum() const noexcept { return beta_eig_.eigenvalues; }

  ComplexMatrix operator()(const ComplexMatrix& q) const {
    if (q.rows() != rows() || q.cols() != cols())
      throw Error(ErrorCode::DimensionMismatch,
                  "Q must be " + std::to_string(rows()) + "x" + std::to_string(cols()));
    const Eigen::Index na = cols();
    const ComplexMatrix h_q = a_alpha_ + b_ab_ * q;
    ComplexMatrix y(rows(), na);
    for (Eigen::Index k = 0; k < rows(); ++k) {
      const double mu = beta_eig_.eigenvalues(k);
      const ComplexMatrix shifted_t =
          (h_q - mu * ComplexMatrix::Identity(na, na)).transpose();
      try {
        y.row(k) = solve_linear(shifted_t, c_.row(k).transpose()).transpose();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Singular) throw;
        throw Error(ErrorCode::ResolventSingular,
                    "A_alpha + B Q - mu I is singular at mu_" + std::to_string(k) + " = " +
                        std::to_string(mu));
      }
    }
    return beta_eig_.eigenvectors * y;
  }

 private:
  ChannelIndex alpha_;
  ComplexMatrix a_alpha_;
  ComplexMatrix b_ab_;
  HermitianEig beta_eig_;
  ComplexMatrix c_;
};

inline ComplexMatrix fixed_point_map(const TwoChannelHamiltonian& h, ChannelIndex alpha,
                                     const ComplexMatrix& q) {
  return FixedPointMap(h, alpha)(q);
}

/// ||Q A_alpha - A_beta Q + Q B_{alpha beta} Q - B_{beta alpha}||_HS.
inline double riccati_residual(const TwoChannelHamiltonian& h, ChannelIndex alpha,
                               const ComplexMatrix& q) {
  const ChannelIndex beta = alpha.complement();
  if (q.rows() != h.dim(beta) || q.cols() != h.dim(alpha))
    throw Error(ErrorCode::DimensionMismatch, "Q has the wrong shape for this channel");
  return hilbert_schmidt_norm(q * h.channel(alpha) - h.channel(beta) * q +
                              q * h.coupling(alpha) * q - h.coupling(beta));
}

struct RiccatiSolution {
  ChannelIndex alpha = kChannel1;
  /// Q_{beta alpha}, n_beta x n_alpha.
  ComplexMatrix q;
  int iterations_used = 0;
  double fixed_point_residual = 0.0;
  double riccati_residual = 0.0;
  double q_operator_norm = 0.0;
  bool admissible = false;
  double admissibility_bound = 0.0;
  /// Largest operator norm seen over all iterates.
  double max_iterate_norm = 0.0;
  /// ||q^(n+1) - q^(n)||_HS for every evaluated step.
  std::vector<double> step_norms;
};

inline double default_residual_tol(const TwoChannelHamiltonian& h) {
  return 1e-12 * std::max(1.0, hilbert_schmidt_norm(h.b12()));
}

/// Iterates q <- Phi(q) from `initial` (zero when unset) until both the last
/// step and the fixed-point residual of the current iterate are below the
/// tolerance.
inline RiccatiSolution solve(const TwoChannelHamiltonian& h, ChannelIndex alpha,
                             const SolverConfig& cfg,
                             const std::optional<ComplexMatrix>& initial = std::nullopt) {
  if (cfg.max_iterations < 1) throw Error(ErrorCode::InvalidParams, "max_iterations must be >= 1");
  if (cfg.residual_tol && !(*cfg.residual_tol > 0.0))
    throw Error(ErrorCode::InvalidParams, "residual_tol must be positive");

  const Admissibility adm = check_admissibility(h, cfg.delta);
  if (!cfg.allow_inadmissible) {
    if (!(adm.d0 > 0.0))
      throw Error(ErrorCode::Inadmissible, "channel spectra overlap (d0 = 0)");
    if (!adm.admissible)
      throw Error(ErrorCode::Inadmissible,
                  "||B||_2 = " + std::to_string(adm.b_hs_norm) + " is not below the bound " +
                      std::to_string(adm.bound));
  }

  const double tol = cfg.residual_tol.value_or(default_residual_tol(h));
  const FixedPointMap phi(h, alpha);

  RiccatiSolution sol;
  sol.alpha = alpha;
  sol.admissible = adm.admissible;
  sol.admissibility_bound = adm.bound;

  ComplexMatrix q = initial.value_or(ComplexMatrix::Zero(phi.rows(), phi.cols()));
  if (q.rows() != phi.rows() || q.cols() != phi.cols())
    throw Error(ErrorCode::DimensionMismatch, "initial iterate has the wrong shape");
  sol.max_iterate_norm = operator_norm(q);

  double last_step = 0.0;
  for (int n = 0;; ++n) {
    if (n >= cfg.max_iterations) throw NotConvergedError(n, last_step);
    ComplexMatrix next = phi(q);
    const double next_norm = operator_norm(next);
    sol.max_iterate_norm = std::max(sol.max_iterate_norm, next_norm);
    const double fp = hilbert_schmidt_norm(next - q);
    sol.step_norms.push_back(fp);
    if (fp <= tol && (n == 0 || last_step <= tol)) {
      sol.q = std::move(q);
      sol.iterations_used = n + 1;
      sol.fixed_point_residual = fp;
      break;
    }
    if (!std::isfinite(next_norm) || next_norm > cfg.divergence_guard)
      throw Error(ErrorCode::Diverged, "iterate norm " + std::to_string(next_norm) +
                                           " exceeded the divergence guard after " +
                                           std::to_string(n + 1) + " iterations");
    last_step = fp;
    q = std::move(next);
  }

  sol.riccati_residual = riccati_residual(h, alpha, sol.q);
  sol.q_operator_norm = operator_norm(sol.q);
  return sol;
}

/// The complementary channel's solution Q_{alpha beta} = -Q_{beta alpha}*.
inline RiccatiSolution conjugate_solution(const TwoChannelHamiltonian& h,
                                          const RiccatiSolution& sol) {
  RiccatiSolution out;
  out.alpha = sol.alpha.complement();
  out.q = -sol.q.adjoint();
  out.iterations_used = sol.iterations_used;
  out.admissible = sol.admissible;
  out.admissibility_bound = sol.admissibility_bound;
  out.max_iterate_norm = sol.max_iterate_norm;
  out.q_operator_norm = operator_norm(out.q);
  out.riccati_residual = riccati_residual(h, out.alpha, out.q);
  out.fixed_point_residual =
      hilbert_schmidt_norm(fixed_point_map(h, out.alpha, out.q) - out.q);
  return out;
}

}  // namespace decoupling
