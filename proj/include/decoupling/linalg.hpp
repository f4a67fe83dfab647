#pragma once

// Dense complex linear algebra shared by every other header. Thin layer over
// Eigen that adds the validation and error reporting the rest of the library
// relies on.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "decoupling/errors.hpp"

namespace decoupling {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Eigensystem of a Hermitian matrix: ascending real eigenvalues and the
/// matching orthonormal eigenvectors as columns.
struct HermitianEig {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;

  /// V f(Λ) V* for a scalar function f applied to the eigenvalues.
  template <typename F>
  ComplexMatrix apply(F&& f) const {
    ComplexVector fd(eigenvalues.size());
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) fd(i) = f(eigenvalues(i));
    return eigenvectors * fd.asDiagonal() * eigenvectors.adjoint();
  }

  ComplexMatrix reconstruct() const {
    return apply([](double x) { return x; });
  }
};

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline void require_finite(const ComplexMatrix& m, const std::string& what) {
  if (!all_finite(m)) throw Error(ErrorCode::InvalidParams, what + " has non-finite entries");
}

inline void require_square(const ComplexMatrix& m, const std::string& what) {
  if (m.rows() != m.cols())
    throw Error(ErrorCode::DimensionMismatch,
                what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ", expected square");
}

/// Induced infinity norm (maximum absolute row sum).
inline double inf_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double hilbert_schmidt_norm(const ComplexMatrix& m) { return m.norm(); }

/// Largest singular value.
inline double operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  if (svd.info() != Eigen::Success)
    throw Error(ErrorCode::ConvergenceFailure, "singular value decomposition did not converge");
  return svd.singularValues()(0);
}

inline double hermitian_defect(const ComplexMatrix& m) {
  return inf_norm(m - m.adjoint());
}

/// Default Hermitian acceptance threshold: 1e-12 * max(1, ||m||_inf).
inline double default_hermitian_tol(const ComplexMatrix& m) {
  return 1e-12 * std::max(1.0, inf_norm(m));
}

inline bool is_hermitian(const ComplexMatrix& m, std::optional<double> tol = std::nullopt) {
  if (m.rows() != m.cols()) return false;
  return hermitian_defect(m) <= tol.value_or(default_hermitian_tol(m));
}

/// Validates, symmetrizes and decomposes. Eigenvalues come back ascending.
inline HermitianEig hermitian_eig(const ComplexMatrix& m,
                                  std::optional<double> hermitian_tol = std::nullopt) {
  require_square(m, "matrix");
  const double tol = hermitian_tol.value_or(default_hermitian_tol(m));
  const double defect = hermitian_defect(m);
  if (!(defect <= tol))
    throw Error(ErrorCode::NotHermitian,
                "||m - m*||_inf = " + std::to_string(defect) + " exceeds " + std::to_string(tol));
  if (m.size() == 0) return {};
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Eigenvalues of a general square matrix, sorted by real part then imaginary part.
inline ComplexVector general_eigenvalues(const ComplexMatrix& m) {
  require_square(m, "matrix");
  if (m.size() == 0) return {};
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::EigFailure, "general eigensolver did not converge");
  std::vector<Complex> vals(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(vals.begin(), vals.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return Eigen::Map<ComplexVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Relative pivot threshold below which a matrix is declared singular.
inline constexpr double kSingularPivotThreshold = 1e-14;

/// Solves m x = rhs by LU with full pivoting.
inline ComplexMatrix solve_linear(const ComplexMatrix& m, const ComplexMatrix& rhs) {
  require_square(m, "coefficient matrix");
  if (rhs.rows() != m.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "rhs has " + std::to_string(rhs.rows()) + " rows, expected " +
                    std::to_string(m.rows()));
  if (m.size() == 0) return ComplexMatrix(0, rhs.cols());
  Eigen::FullPivLU<ComplexMatrix> lu(m);
  lu.setThreshold(kSingularPivotThreshold);
  if (!lu.isInvertible())
    throw Error(ErrorCode::Singular, "matrix is numerically singular (rank " +
                                         std::to_string(lu.rank()) + " of " +
                                         std::to_string(m.rows()) + ")");
  return lu.solve(rhs);
}

inline ComplexMatrix inverse(const ComplexMatrix& m) {
  return solve_linear(m, ComplexMatrix::Identity(m.rows(), m.cols()));
}

/// min |x - y| over x in s1, y in s2.
inline double spectral_distance(std::span<const double> s1, std::span<const double> s2) {
  if (s1.empty() || s2.empty()) throw Error(ErrorCode::EmptySpectrum, "spectral distance of an empty set");
  std::vector<double> a(s1.begin(), s1.end());
  std::vector<double> b(s2.begin(), s2.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double best = std::abs(a.front() - b.front());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    best = std::min(best, std::abs(a[i] - b[j]));
    if (a[i] < b[j]) ++i; else ++j;
  }
  return best;
}

inline double spectral_distance(const RealVector& s1, const RealVector& s2) {
  return spectral_distance(std::span<const double>(s1.data(), static_cast<std::size_t>(s1.size())),
                           std::span<const double>(s2.data(), static_cast<std::size_t>(s2.size())));
}

/// Stacks [[a, b], [c, d]].
inline ComplexMatrix block2x2(const ComplexMatrix& a, const ComplexMatrix& b,
                              const ComplexMatrix& c, const ComplexMatrix& d) {
  ComplexMatrix out(a.rows() + c.rows(), a.cols() + b.cols());
  out << a, b, c, d;
  return out;
}

}  // namespace decoupling
