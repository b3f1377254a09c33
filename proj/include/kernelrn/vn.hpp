#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kernelrn/ensembles.hpp"
#include "kernelrn/kernel.hpp"
#include "kernelrn/numerics.hpp"

namespace kernelrn {

inline constexpr std::size_t kMaxPolynomialDegree = 16;

/// Parses "∅" or "" as the empty word, "112" as letters 1,1,2 and "1.10.2"
/// as letters 1,10,2. Throws std::invalid_argument on anything else.
Word parse_word(std::string_view text);

/// f(Z) = sum_a c_a Z^a in d noncommuting variables.
class NcPolynomial {
 public:
  explicit NcPolynomial(std::size_t d);

  static NcPolynomial monomial(std::size_t d, const Word& w, Complex c = 1.0);
  /// sum_i c_i Z_i with d = c.size().
  static NcPolynomial linear(const std::vector<Complex>& c);

  /// Adds c to the coefficient of Z^w; terms that cancel to zero are dropped.
  NcPolynomial& add(const Word& w, Complex c);

  std::size_t d() const noexcept { return d_; }
  const std::map<Word, Complex>& terms() const noexcept { return terms_; }
  std::size_t degree() const noexcept;
  double l1_norm() const noexcept;
  double l2_norm() const noexcept;
  bool is_monomial() const noexcept { return terms_.size() == 1; }
  /// Nonempty and every term has length one.
  bool is_linear() const noexcept;

  /// f(A_1, ..., A_d) with A^w multiplying letters left to right.
  ComplexMatrix evaluate(const std::vector<ComplexMatrix>& a) const;

 private:
  std::size_t d_;
  std::map<Word, Complex> terms_;
};

/// Matrix of f(L) from span{xi_w : |w| <= depth} into span{xi_w : |w| <= depth + deg}
/// in enumerate_words order; entry (a w, w) = c_a.
ComplexMatrix creation_matrix(const NcPolynomial& f, std::size_t depth, std::size_t word_cap = kDefaultWordCap);

struct CreationNormBound {
  double lower = 0.0;  // norm of f(L) on the depth-D truncation
  double upper = 0.0;  // sum of |c_a|
  std::optional<double> exact;
  std::string exact_reason;  // "monomial", "linear" or empty
  std::size_t depth = 0;
  bool converged = true;  // false when depth doubling stopped at the word cap

  /// Bounds used by certified verdicts: exact when known.
  double certified_lower() const noexcept { return exact ? *exact : lower; }
  double certified_upper() const noexcept { return exact ? *exact : upper; }
};

CreationNormBound creation_norm(const NcPolynomial& f, std::size_t depth,
                                std::size_t word_cap = kDefaultWordCap);

/// Depth deg + 6, doubled while the lower bound still moves by >= 1e-6, the
/// word count stays under the cap and the truncation has at most 1024 columns.
CreationNormBound creation_norm_auto(const NcPolynomial& f, std::size_t word_cap = kDefaultWordCap);

enum class VnVerdict { certified_pass, certified_fail, inconclusive };
std::string to_string(VnVerdict v);

struct VnOptions {
  std::optional<std::size_t> depth;  // empty: creation_norm_auto
  double z = 3.0;
  double bound_tol = 1e-10;  // absolute slack for rounding at equality
  unsigned workers = 0;
  std::size_t word_cap = kDefaultWordCap;
};

struct VnResult {
  ComplexMatrix lhs;           // E_B(Y^{1/2} X Y^{1/2})
  double lhs_se = 0.0;         // Frobenius norm of entrywise SEs of lhs
  ComplexMatrix comparison;    // W lhs W with W = pinv_sqrt(Y)
  double lambda_max = 0.0;     // of comparison
  std::vector<double> block_lambda_max;  // per block of the subalgebra partition
  std::vector<double> block_se;          // Frobenius SE of each comparison block
  std::size_t y_rank = 0;
  CreationNormBound bounds;
  VnVerdict verdict = VnVerdict::inconclusive;
  double z = 3.0;
  double bound_tol = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo check of E_B(Y^{1/2} E[f(A) f(A)*] Y^{1/2}) <= |f(L)|^2 Y.
/// Y must be PSD and lie in B. Pass is certified when every block satisfies
/// lambda_max <= lower^2 - z se, failure when some block has
/// lambda_max >= upper^2 + z se.
VnResult vn_check(const EnsembleSpec& spec, const NcPolynomial& f, const SubalgebraSpec& b, const ComplexMatrix& y,
                  std::size_t samples, std::uint64_t seed, const VnOptions& options = {});

struct VectorBoundResult {
  double lhs = 0.0;  // mean |f(A)* v|^2
  double se = 0.0;
  double v_norm2 = 0.0;
  CreationNormBound bounds;
  double rhs_lower = 0.0;  // certified_lower^2 |v|^2
  double rhs_upper = 0.0;  // certified_upper^2 |v|^2
  VnVerdict verdict = VnVerdict::inconclusive;
  std::size_t samples = 0;
};

VectorBoundResult vector_bound_check(const EnsembleSpec& spec, const NcPolynomial& f, const ComplexVector& v,
                                     std::size_t samples, std::uint64_t seed, const VnOptions& options = {});

}  // namespace kernelrn
