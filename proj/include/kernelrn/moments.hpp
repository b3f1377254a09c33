#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernelrn/ensembles.hpp"

namespace kernelrn {

enum class MomentKind { c, d, c_block };
std::string to_string(MomentKind k);

/// Scalar moment sequence indexed by m = 0..M with Monte Carlo errors.
struct MomentSequence {
  MomentKind kind = MomentKind::c;
  std::size_t block = 0;  // 1-based block index for c_block
  std::vector<double> values;
  std::vector<double> se;
  /// SE of values[m+1] - values[m] from paired per-sample differences.
  std::vector<double> step_se;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string ensemble;

  std::size_t max_order() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

struct MomentOptions {
  unsigned workers = 0;
};

struct MomentRequest {
  std::size_t max_order = 0;
  bool c = true;
  bool d = false;
  std::vector<std::size_t> block_sizes;  // empty: no block sequences
};

/// One pass over the sample stream producing every requested sequence.
struct MomentRun {
  std::optional<MomentSequence> c;
  std::optional<MomentSequence> d;
  std::vector<MomentSequence> blocks;
  /// c_m - d_m with SE from paired per-sample differences (both c and d requested).
  std::vector<double> c_minus_d;
  std::vector<double> c_minus_d_se;
};

/// Requires a single-generator ensemble and samples >= 2.
MomentRun run_moment_pass(const EnsembleSpec& spec, const MomentRequest& request, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options = {});

/// values[m] = (1/S) sum_s (1/N) Tr(A_s^m (A_s^m)*).
MomentSequence c_sequence(const EnsembleSpec& spec, std::size_t max_order, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options = {});

/// values[m] = (1/S) sum_s (1/N) Tr((A_s* A_s)^m).
MomentSequence d_sequence(const EnsembleSpec& spec, std::size_t max_order, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options = {});

/// values[m] = (1/S) sum_s (1/k_r) Tr(P_r A_s^m (A_s^m)* P_r), one sequence per block.
std::vector<MomentSequence> block_c_sequence(const EnsembleSpec& spec, const std::vector<std::size_t>& sizes,
                                             std::size_t max_order, std::size_t samples, std::uint64_t seed,
                                             const MomentOptions& options = {});

enum class TestOutcome { pass, fail, inconclusive };
std::string to_string(TestOutcome t);

/// Ratio test c_{m+1}/c_m <= 1 with one-sided slack z * SE.
struct RatioVerdict {
  std::vector<double> ratio;      // values[m+1] / values[m]
  std::vector<double> margin;     // values[m] - values[m+1]
  std::vector<double> margin_se;  // SE of the margin
  std::vector<TestOutcome> flags;
  TestOutcome overall = TestOutcome::pass;
  std::optional<std::size_t> first_failing;
  double z = 3.0;
};

/// Floating-point slack added to every ratio comparison.
inline constexpr double kRatioRelTol = 1e-12;

RatioVerdict ratio_test(const MomentSequence& seq, double z = 3.0);

class ReferenceOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Largest m for which catalan(m) fits in 64 bits.
inline constexpr unsigned kCatalanCap = 36;

/// C_m = binom(2m, m) / (m + 1), exact.
std::uint64_t catalan(unsigned m);

/// binom(n, k), exact; throws ReferenceOverflowError beyond 64 bits.
std::uint64_t binomial(unsigned n, unsigned k);

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// p-th moment binom((m+1)p, p) / (mp + 1) of the Fuss-Catalan law of order
/// m + 1, reduced to lowest terms. Requires p >= 1.
Rational fuss_catalan_moment(unsigned m, unsigned p);

/// Marchenko-Pastur moment sigma2^k sum_{r<k} binom(k,r) binom(k-1,r) y^r / (r+1).
/// The Narayana coefficients are exact integers. Requires k >= 1, y > 0, sigma2 > 0.
double mp_moment(unsigned k, double y, double sigma2);

struct AsymptoticRow {
  std::size_t m = 0;
  double measured = 0.0;
  double se = 0.0;
  double limit = 0.0;
  double deviation_over_se = 0.0;  // (measured - limit) / se; +-inf when se == 0 and they differ
};

/// Large-N Ginibre limits: tau^m for kind c, tau^m C_m for kind d.
std::vector<AsymptoticRow> asymptotic_report(const MomentSequence& seq, double tau);

/// Rows for c_m - d_m against tau^m (1 - C_m).
std::vector<AsymptoticRow> difference_report(const MomentRun& run, double tau);

}  // namespace kernelrn
