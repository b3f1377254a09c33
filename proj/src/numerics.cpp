#include "kernelrn/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace kernelrn {

namespace {

void require_square(const ComplexMatrix& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(op) + ": matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
}

void require_finite(const ComplexMatrix& m, const char* op) {
  if (!all_finite(m)) throw NonFiniteError(std::string(op) + ": non-finite entries");
}

}  // namespace

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex z = m(i, j);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
  }
  return true;
}

double hermitian_defect(const ComplexMatrix& m) {
  require_square(m, "hermitian_defect");
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  require_square(m, "hermitian_part");
  return (m + m.adjoint()) * 0.5;
}

HermitianEig hermitian_eig(const ComplexMatrix& m) {
  require_square(m, "hermitian_eig");
  require_finite(m, "hermitian_eig");
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

PsdVerdict psd_verdict(const ComplexMatrix& m, double tol) {
  require_square(m, "psd_verdict");
  require_finite(m, "psd_verdict");
  if (m.size() == 0) return {true, 0.0};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues()(0);
  return {min_eig >= -tol, min_eig};
}

PinvSqrt pinv_sqrt(const ComplexMatrix& m, double rank_tol) {
  const auto eig = hermitian_eig(m);
  const Eigen::Index n = m.rows();
  PinvSqrt out{ComplexMatrix::Zero(n, n), 0};
  if (n == 0) return out;
  const double lmax = eig.eigenvalues(n - 1);
  const double lmin = eig.eigenvalues(0);
  if (lmax <= 0.0) {
    if (lmin < -rank_tol * std::max(1.0, std::abs(lmin))) {
      throw NotPsdError("pinv_sqrt: matrix is negative definite", lmin);
    }
    return out;
  }
  if (lmin < -rank_tol * lmax) {
    throw NotPsdError("pinv_sqrt: matrix is not positive semidefinite", lmin);
  }
  // eigenvalues ascend, so the retained ones are the trailing block
  const double cutoff = rank_tol * lmax;
  Eigen::Index r = 0;
  while (r < n && eig.eigenvalues(n - 1 - r) > cutoff) ++r;
  const auto ur = eig.eigenvectors.rightCols(r);
  const RealVector inv_roots = eig.eigenvalues.tail(r).cwiseSqrt().cwiseInverse();
  out.w = ur * inv_roots.cast<Complex>().asDiagonal() * ur.adjoint();
  out.rank = static_cast<std::size_t>(r);
  return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m, double clip_tol) {
  const auto eig = hermitian_eig(m);
  const Eigen::Index n = m.rows();
  if (n == 0) return {};
  const double lmax = eig.eigenvalues(n - 1);
  const double lmin = eig.eigenvalues(0);
  if (lmin < -clip_tol * std::max(1.0, lmax)) {
    throw NotPsdError("psd_sqrt: matrix is not positive semidefinite", lmin);
  }
  RealVector roots = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors * roots.cast<Complex>().asDiagonal() * eig.eigenvectors.adjoint();
}

double spectral_norm(const ComplexMatrix& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::BDCSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace kernelrn
