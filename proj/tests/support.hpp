#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "kernelrn/numerics.hpp"

namespace testing_support {

using kernelrn::Complex;
using kernelrn::ComplexMatrix;
using kernelrn::ComplexVector;
using kernelrn::RealVector;

// Property-test generator: a seeded engine plus shape helpers.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  Complex cnormal() { return {normal() / std::sqrt(2.0), normal() / std::sqrt(2.0)}; }

  ComplexMatrix matrix(std::size_t rows, std::size_t cols) {
    ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = cnormal();
    return m;
  }

  ComplexVector vector(std::size_t n) { return matrix(n, 1).col(0); }

  ComplexMatrix hermitian(std::size_t n) {
    const ComplexMatrix a = matrix(n, n);
    return (a + a.adjoint()) / 2.0;
  }

  ComplexMatrix unitary(std::size_t n) {
    Eigen::HouseholderQR<ComplexMatrix> qr(matrix(n, n));
    return qr.householderQ() * ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  }

  // PSD with the given eigenvalues in a random eigenbasis.
  ComplexMatrix with_spectrum(const std::vector<double>& eig) {
    const ComplexMatrix u = unitary(eig.size());
    RealVector d = Eigen::Map<const RealVector>(eig.data(), static_cast<Eigen::Index>(eig.size()));
    return u * d.cast<Complex>().asDiagonal() * u.adjoint();
  }

  // Random PSD of the given rank: V V* with `rank` random columns.
  ComplexMatrix psd(std::size_t n, std::size_t rank) {
    const ComplexMatrix v = matrix(n, rank);
    return v * v.adjoint();
  }

  std::vector<std::size_t> partition(std::size_t n) {
    std::vector<std::size_t> sizes;
    std::size_t left = n;
    while (left > 0) {
      const std::size_t k = index(1, left);
      sizes.push_back(k);
      left -= k;
    }
    return sizes;
  }

 private:
  std::mt19937_64 eng_;
};

inline std::vector<double> sorted_eigenvalues(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> s((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return {s.eigenvalues().data(), s.eigenvalues().data() + s.eigenvalues().size()};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? d : INFINITY;
}

}  // namespace testing_support
