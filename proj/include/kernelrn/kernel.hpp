#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kernelrn/ensembles.hpp"
#include "kernelrn/numerics.hpp"

namespace kernelrn {

inline constexpr std::size_t kDefaultWordCap = 10000;

/// Element of the free semigroup on generators 1..d. The empty word is the
/// neutral element.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<std::uint32_t> letters) : letters_(std::move(letters)) {}

  /// The word i i ... i of the given length.
  static Word repeat(std::uint32_t letter, std::size_t length) {
    return Word(std::vector<std::uint32_t>(length, letter));
  }

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  std::span<const std::uint32_t> letters() const noexcept { return letters_; }
  std::uint32_t back() const { return letters_.back(); }

  Word reversed() const;
  Word appended(std::uint32_t letter) const;
  /// The word with its last letter removed; the empty word for length <= 1.
  Word prefix() const;
  Word operator+(const Word& rhs) const;

  /// "∅" for the empty word, otherwise letters joined by '.' when any letter
  /// exceeds 9 and concatenated otherwise ("112").
  std::string to_string() const;

  friend bool operator==(const Word&, const Word&) = default;
  /// Length first, then lexicographic.
  friend bool operator<(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.letters_ < b.letters_;
  }

 private:
  std::vector<std::uint32_t> letters_;
};

class WordCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// sum_{k <= max_len} d^k, saturating at SIZE_MAX.
std::size_t word_count(std::size_t d, std::size_t max_len);

/// All words of length <= max_len ordered by (length, lexicographic).
/// Throws WordCapError when the count exceeds `cap`.
std::vector<Word> enumerate_words(std::size_t d, std::size_t max_len,
                                  std::size_t cap = kDefaultWordCap);

/// Position of `w` in enumerate_words(d, ...).
std::size_t word_index(const Word& w, std::size_t d);

/// Choice of unital subalgebra B of M_N and its conditional expectation E_B.
class SubalgebraSpec {
 public:
  enum class Kind { full, diagonal, blocks, scalar };

  static SubalgebraSpec full() { return SubalgebraSpec(Kind::full, {}); }
  static SubalgebraSpec diagonal() { return SubalgebraSpec(Kind::diagonal, {}); }
  static SubalgebraSpec scalar() { return SubalgebraSpec(Kind::scalar, {}); }
  static SubalgebraSpec blocks(std::vector<std::size_t> sizes);

  Kind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::string name() const;

  /// Throws DimensionError unless the algebra fits in M_n.
  void check_dimension(std::size_t n) const;

  /// Diagonal blocks (offset, size) of the finest block decomposition that
  /// every element of the algebra respects: one block for full, n singletons
  /// for diagonal and scalar.
  std::vector<std::pair<std::size_t, std::size_t>> partition(std::size_t n) const;

  /// Membership of y in B up to an absolute tolerance.
  bool contains(const ComplexMatrix& y, double tol) const;

 private:
  SubalgebraSpec(Kind kind, std::vector<std::size_t> sizes) : kind_(kind), sizes_(std::move(sizes)) {}
  Kind kind_;
  std::vector<std::size_t> sizes_;
};

/// E_B(x): identity, diagonal part, block-diagonal compression or
/// normalized-trace multiple of I.
ComplexMatrix conditional_expectation(const ComplexMatrix& x, const SubalgebraSpec& b);

enum class Enforcement { none, phase, biunitary, block };

std::string to_string(Enforcement e);
/// Throws std::invalid_argument for an unknown name.
Enforcement parse_enforcement(std::string_view name);

/// Raised when a sample produces non-finite word products.
class SamplingError : public std::runtime_error {
 public:
  SamplingError(const std::string& what, std::uint64_t sample_index)
      : std::runtime_error(what), sample_index_(sample_index) {}
  std::uint64_t sample_index() const noexcept { return sample_index_; }

 private:
  std::uint64_t sample_index_;
};

struct EstimateOptions {
  unsigned workers = 0;  // 0 = all hardware threads
  std::size_t word_cap = kDefaultWordCap;
};

/// Monte Carlo estimate of K(a, b) = E[A^a (A^b)*] over all words up to
/// max_len. Only blocks with index(a) <= index(b) are stored; the rest are
/// adjoints, so K(a, b) = K(b, a)* holds exactly.
class KernelEstimate {
 public:
  std::size_t generators() const noexcept { return d_; }
  std::size_t max_len() const noexcept { return max_len_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t samples() const noexcept { return samples_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool phase_invariant() const noexcept { return phase_invariant_; }
  const std::string& ensemble() const noexcept { return ensemble_; }
  const std::vector<Word>& words() const noexcept { return words_; }

  std::size_t index_of(const Word& w) const;

  ComplexMatrix block(std::size_t i, std::size_t j) const;
  ComplexMatrix block(const Word& a, const Word& b) const { return block(index_of(a), index_of(b)); }

  /// Frobenius norm of the entrywise standard errors of block (i, j).
  double se(std::size_t i, std::size_t j) const { return se_[packed(i, j)]; }
  double se(const Word& a, const Word& b) const { return se(index_of(a), index_of(b)); }

  /// Standard error of (1/N) Tr of block (i, j).
  double trace_se(std::size_t i, std::size_t j) const { return trace_se_[packed(i, j)]; }

 private:
  friend KernelEstimate estimate_kernel(const EnsembleSpec&, std::size_t, std::size_t, std::uint64_t,
                                        const EstimateOptions&);
  std::size_t packed(std::size_t i, std::size_t j) const;

  std::size_t d_ = 0;
  std::size_t max_len_ = 0;
  std::size_t dim_ = 0;
  std::size_t samples_ = 0;
  std::uint64_t seed_ = 0;
  bool phase_invariant_ = false;
  std::string ensemble_;
  std::vector<Word> words_;
  std::vector<ComplexMatrix> upper_;
  std::vector<double> se_;
  std::vector<double> trace_se_;
};

/// K_hat(a, b) = (1/S) sum_s A_s^a (A_s^b)* for |a|, |b| <= max_len, where
/// A^a multiplies letters left to right and A^{empty} = I.
KernelEstimate estimate_kernel(const EnsembleSpec& spec, std::size_t max_len, std::size_t samples,
                               std::uint64_t seed, const EstimateOptions& options = {});

/// A finite section of an operator-valued kernel: every block (i, j) over a
/// word list, with standard-error summaries carried along.
struct KernelSection {
  std::vector<Word> words;
  std::size_t dim = 0;
  std::vector<ComplexMatrix> blocks;  // row-major, words.size()^2 entries
  std::vector<double> se;
  std::vector<double> trace_se;

  std::size_t size() const noexcept { return words.size(); }
  const ComplexMatrix& at(std::size_t i, std::size_t j) const { return blocks[i * words.size() + j]; }
};

/// K_B(a, b) = E_B(K_hat(a, b)) over words of length <= order.
KernelSection restricted_kernel(const KernelEstimate& k, std::size_t order, const SubalgebraSpec& b);

/// (K_B)_Sigma(a, b) = sum_i E_B(K_hat(a i, b i)) over words of length <= order.
/// Throws std::out_of_range when order > max_len - 1.
KernelSection shifted_kernel(const KernelEstimate& k, const SubalgebraSpec& b, std::size_t order);
KernelSection shifted_kernel(const KernelEstimate& k, const SubalgebraSpec& b);

struct GramMatrix {
  ComplexMatrix matrix;
  std::vector<Word> words;
  Enforcement enforce = Enforcement::none;
  // Standard-error bound on the spectral norm of the noise in `matrix`:
  // sqrt(sum over blocks of per-block bounds squared). Scalar blocks use the
  // normalized-trace SE, other blocks the Frobenius SE.
  double se = 0.0;
  double min_eig = 0.0;  // before any clipping
  double max_eig = 0.0;
};

/// Block matrix [section(a_i, a_j)] with optional symmetry enforcement.
/// `b` must be a Blocks algebra for Enforcement::block. Throws NotPsdError
/// when min_eig < -psd_clip_tol * max(1, max_eig).
GramMatrix assemble_gram(const KernelSection& section, const SubalgebraSpec& b, Enforcement enforce,
                         double psd_clip_tol);

/// Gram matrix of K_B at order M. Enforcement other than none requires a
/// phase-invariant ensemble.
GramMatrix assemble_gram(const KernelEstimate& k, std::size_t order, const SubalgebraSpec& b,
                         Enforcement enforce, double psd_clip_tol);

}  // namespace kernelrn
