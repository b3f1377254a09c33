#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kernelrn/kernel.hpp"
#include "kernelrn/numerics.hpp"

namespace kernelrn {

struct RnTolerances {
  double rank_tol = kRankTol;  // relative eigenvalue cutoff for range(G_L)
  double psd_clip_tol = 1e-9;  // relative clipping of slightly negative eigenvalues
  double density_tol = 1e-8;   // slack on 0 <= A <= I
  double leak_tol = 1e-6;      // relative mass of G_K outside range(G_L)
  double mc_band = 0.0;        // Monte Carlo uncertainty of lambda_max
};

/// Truncated Kolmogorov decomposition G = V* V with V of full row rank.
struct KolmogorovFactor {
  ComplexMatrix v;              // rank x n
  ComplexMatrix basis;          // n x rank, retained eigenvectors of G
  std::vector<double> retained; // retained eigenvalues, ascending
  std::size_t rank = 0;
  double residual = 0.0;        // |V*V - G|_F / (1 + |G|_F)
};

KolmogorovFactor kolmogorov_factor(const ComplexMatrix& g, double rank_tol = kRankTol,
                                   double psd_clip_tol = 1e-9);

enum class DensityVerdict { dominated, not_dominated, inconclusive };
std::string to_string(DensityVerdict v);

struct DensityReport {
  ComplexMatrix density;            // r x r, coordinates of the retained range of G_L
  std::vector<double> eigenvalues;  // ascending
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double reconstruction_residual = 0.0;
  double support_leak = 0.0;
  double lambda_min_positive = 0.0;  // smallest retained eigenvalue of G_L
  std::size_t rank = 0;
  DensityVerdict verdict = DensityVerdict::inconclusive;
  RnTolerances tolerances;

  /// lambda_max - 1; positive values measure how far domination fails.
  double violation_margin() const noexcept { return lambda_max - 1.0; }
};

/// Radon-Nikodym density of the kernel with Gram G_K against the kernel with
/// Gram G_L: the unique A with G_K = V_L* A V_L on the range of G_L.
DensityReport rn_density(const ComplexMatrix& gk, const ComplexMatrix& gl, const RnTolerances& tols = {});

struct OrderTest {
  bool passes = false;
  double min_eig_of_difference = 0.0;
  double tol = 0.0;
};

/// passes iff min_eig(G - G_sigma) >= -tol.
OrderTest order_test(const ComplexMatrix& g, const ComplexMatrix& g_sigma, double tol);

struct ShiftDensityResult {
  DensityReport report;
  GramMatrix gram;     // K_B at order M
  GramMatrix shifted;  // (K_B)_Sigma at order M
  std::size_t order = 0;
};

/// Density of (K_B)_Sigma with respect to K_B at order M, i.e. sum_i B_i* B_i
/// on the truncated Kolmogorov space. tols.mc_band is replaced by the band
/// propagated from the kernel's standard errors at confidence z, and
/// tols.leak_tol is raised to 4 SE of G_Sigma relative to its norm when larger.
ShiftDensityResult shift_density(const KernelEstimate& k, const SubalgebraSpec& b, std::size_t order,
                                 Enforcement enforce, RnTolerances tols = {}, double z = 3.0);

}  // namespace kernelrn
