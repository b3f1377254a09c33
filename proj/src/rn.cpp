#include "kernelrn/rn.hpp"

#include <algorithm>
#include <cmath>

namespace kernelrn {

namespace {

void require_same_square(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError(std::string(op) + ": inputs must be square of equal size (got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

void require_psd(const ComplexMatrix& m, double clip_tol, const char* what) {
  const auto eig = psd_verdict(m, 0.0);
  if (m.size() == 0 || eig.is_psd) return;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  const double lmax = solver.eigenvalues()(solver.eigenvalues().size() - 1);
  if (eig.min_eig < -clip_tol * std::max(1.0, lmax)) {
    throw NotPsdError(std::string(what) + " is indefinite beyond the clip tolerance (min eigenvalue " +
                          std::to_string(eig.min_eig) + ")",
                      eig.min_eig);
  }
}

DensityVerdict classify(const DensityReport& rep, const RnTolerances& tols) {
  const bool floor_ok = rep.lambda_min >= -tols.density_tol;
  const bool leak_ok = rep.support_leak <= tols.leak_tol;
  if (!floor_ok || !leak_ok) return DensityVerdict::not_dominated;
  if (rep.lambda_max <= 1.0 + tols.density_tol) return DensityVerdict::dominated;
  if (rep.lambda_max <= 1.0 + tols.density_tol + tols.mc_band) return DensityVerdict::inconclusive;
  return DensityVerdict::not_dominated;
}

}  // namespace

std::string to_string(DensityVerdict v) {
  switch (v) {
    case DensityVerdict::dominated:
      return "dominated";
    case DensityVerdict::not_dominated:
      return "not_dominated";
    case DensityVerdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

KolmogorovFactor kolmogorov_factor(const ComplexMatrix& g, double rank_tol, double psd_clip_tol) {
  const auto eig = hermitian_eig(g);
  const Eigen::Index n = g.rows();
  KolmogorovFactor f;
  f.v = ComplexMatrix::Zero(0, n);
  f.basis = ComplexMatrix::Zero(n, 0);
  if (n == 0) return f;
  const double lmax = eig.eigenvalues(n - 1);
  const double lmin = eig.eigenvalues(0);
  if (lmin < -psd_clip_tol * std::max(1.0, lmax)) {
    throw NotPsdError("kolmogorov_factor: Gram matrix is indefinite beyond the clip tolerance", lmin);
  }
  // clipped eigenvalues fall below the cutoff and are dropped with the null space
  const double cutoff = lmax > 0.0 ? rank_tol * lmax : 0.0;
  Eigen::Index r = 0;
  while (r < n && eig.eigenvalues(n - 1 - r) > cutoff) ++r;
  f.rank = static_cast<std::size_t>(r);
  f.basis = eig.eigenvectors.rightCols(r);
  const RealVector kept = eig.eigenvalues.tail(r);
  f.retained.assign(kept.data(), kept.data() + r);
  f.v = kept.cwiseSqrt().cast<Complex>().asDiagonal() * f.basis.adjoint();
  f.residual = (f.v.adjoint() * f.v - hermitian_part(g)).norm() / (1.0 + g.norm());
  return f;
}

DensityReport rn_density(const ComplexMatrix& gk, const ComplexMatrix& gl, const RnTolerances& tols) {
  require_same_square(gk, gl, "rn_density");
  if (!all_finite(gk) || !all_finite(gl)) throw NonFiniteError("rn_density: non-finite entries");
  require_psd(gk, tols.psd_clip_tol, "rn_density: G_K");

  const auto factor = kolmogorov_factor(gl, tols.rank_tol, tols.psd_clip_tol);
  const ComplexMatrix gk_h = hermitian_part(gk);
  const double gk_norm = gk_h.norm();

  DensityReport rep;
  rep.tolerances = tols;
  rep.rank = factor.rank;
  rep.lambda_min_positive = factor.retained.empty() ? 0.0 : factor.retained.front();

  const auto r = static_cast<Eigen::Index>(factor.rank);
  if (r > 0) {
    const RealVector inv_roots =
        Eigen::Map<const RealVector>(factor.retained.data(), r).cwiseSqrt().cwiseInverse();
    const auto scale = inv_roots.cast<Complex>().asDiagonal();
    rep.density = hermitian_part(scale * (factor.basis.adjoint() * gk_h * factor.basis) * scale);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rep.density, Eigen::EigenvaluesOnly);
    const RealVector ev = solver.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + r);
    rep.lambda_min = rep.eigenvalues.front();
    rep.lambda_max = rep.eigenvalues.back();
  } else {
    rep.density = ComplexMatrix::Zero(0, 0);
  }

  const Eigen::Index n = gl.rows();
  const ComplexMatrix proj = factor.basis * factor.basis.adjoint();
  const ComplexMatrix outside = ComplexMatrix::Identity(n, n) - proj;
  rep.support_leak = (outside * gk_h * outside).norm() / (1.0 + gk_norm);
  if (r > 0) {
    const ComplexMatrix rebuilt = factor.v.adjoint() * rep.density * factor.v;
    rep.reconstruction_residual = (rebuilt - proj * gk_h * proj).norm() / (1.0 + gk_norm);
  }

  rep.verdict = classify(rep, tols);
  return rep;
}

OrderTest order_test(const ComplexMatrix& g, const ComplexMatrix& g_sigma, double tol) {
  require_same_square(g, g_sigma, "order_test");
  const auto v = psd_verdict(g - g_sigma, tol);
  return {v.is_psd, v.min_eig, tol};
}

ShiftDensityResult shift_density(const KernelEstimate& k, const SubalgebraSpec& b, std::size_t order,
                                 Enforcement enforce, RnTolerances tols, double z) {
  if (k.max_len() < order + 1) {
    throw std::out_of_range("shift_density: kernel max_len " + std::to_string(k.max_len()) +
                            " must be >= order + 1 = " + std::to_string(order + 1));
  }
  ShiftDensityResult out;
  out.order = order;
  out.gram = assemble_gram(k, order, b, enforce, tols.psd_clip_tol);
  out.shifted = assemble_gram(shifted_kernel(k, b, order), b, enforce, tols.psd_clip_tol);

  tols.mc_band = 0.0;
  // Monte Carlo noise puts some mass of G_Sigma outside range(G)
  tols.leak_tol = std::max(tols.leak_tol, 4.0 * out.shifted.se / (1.0 + out.shifted.matrix.norm()));
  out.report = rn_density(out.shifted.matrix, out.gram.matrix, tols);
  // lambda_max of W G_Sigma W moves by at most (|dG_Sigma| + lambda_max |dG|) / lambda_min+(G)
  if (out.report.rank > 0) {
    out.report.tolerances.mc_band = z * (out.shifted.se + std::max(0.0, out.report.lambda_max) * out.gram.se) /
                                    out.report.lambda_min_positive;
    out.report.verdict = classify(out.report, out.report.tolerances);
  }
  return out;
}

}  // namespace kernelrn
