#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kernelrn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Relative tolerances shared by the dense linear-algebra layer.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kEigTol = 1e-10;
inline constexpr double kRankTol = 1e-9;

/// Raised when an input matrix has the wrong shape for an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input matrix contains NaN or infinite entries.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a matrix that must be positive semidefinite is indefinite
/// beyond the allowed clipping tolerance.
class NotPsdError : public std::domain_error {
 public:
  NotPsdError(const std::string& what, double min_eig)
      : std::domain_error(what), min_eig_(min_eig) {}
  double min_eig() const noexcept { return min_eig_; }

 private:
  double min_eig_;
};

struct HermitianEig {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // columns, unitary
};

struct PsdVerdict {
  bool is_psd = false;
  double min_eig = 0.0;
};

struct PinvSqrt {
  ComplexMatrix w;
  std::size_t rank = 0;
};

bool all_finite(const ComplexMatrix& m);

/// max |M[i,j] - conj(M[j,i])|; requires a square matrix.
double hermitian_defect(const ComplexMatrix& m);

/// (M + M*) / 2
ComplexMatrix hermitian_part(const ComplexMatrix& m);

/// Eigendecomposition of the Hermitian part of `m`. Throws DimensionError for
/// non-square input and NonFiniteError for NaN/inf entries.
HermitianEig hermitian_eig(const ComplexMatrix& m);

/// is_psd = (min_eig >= -tol).
PsdVerdict psd_verdict(const ComplexMatrix& m, double tol);

/// Pseudo-inverse square root U_r diag(1/sqrt(l)) U_r* of a PSD matrix.
/// Eigenvalues l <= rank_tol * l_max are treated as zero. Throws NotPsdError
/// when min_eig < -rank_tol * l_max.
PinvSqrt pinv_sqrt(const ComplexMatrix& m, double rank_tol = kRankTol);

/// Principal square root of a PSD matrix; negative eigenvalues down to
/// -clip_tol * max(1, l_max) are clipped to zero.
ComplexMatrix psd_sqrt(const ComplexMatrix& m, double clip_tol = kRankTol);

/// Largest singular value.
double spectral_norm(const ComplexMatrix& m);

}  // namespace kernelrn
