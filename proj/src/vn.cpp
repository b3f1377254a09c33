#include "kernelrn/vn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernelrn/parallel.hpp"

namespace kernelrn {

namespace {

constexpr std::size_t kVnBatch = 64;
constexpr double kAutoDepthTol = 1e-6;
constexpr std::size_t kAutoMaxColumns = 1024;

// Entrywise running mean and sum of squared deviations, fed in index order.
struct MatrixMoments {
  ComplexMatrix mean;
  Eigen::MatrixXd m2;
  std::size_t count = 0;

  void push(const ComplexMatrix& x) {
    if (count == 0) {
      mean = ComplexMatrix::Zero(x.rows(), x.cols());
      m2 = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    }
    ++count;
    const ComplexMatrix delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += (delta.array() * (x - mean).array().conjugate()).real().matrix();
  }

  // entrywise standard error of the mean
  Eigen::MatrixXd se() const {
    if (count < 2) return Eigen::MatrixXd::Constant(mean.rows(), mean.cols(), std::numeric_limits<double>::infinity());
    return (m2.array().max(0.0) / static_cast<double>(count - 1) / static_cast<double>(count)).sqrt().matrix();
  }
};

void check_polynomial(const NcPolynomial& f, const EnsembleSpec& spec) {
  if (f.d() != generator_count(spec)) {
    throw DimensionError("polynomial has " + std::to_string(f.d()) + " variables but the ensemble has " +
                         std::to_string(generator_count(spec)) + " generators");
  }
  if (f.terms().empty()) throw std::invalid_argument("polynomial has no terms");
}

CreationNormBound bounds_for(const NcPolynomial& f, const VnOptions& options) {
  return options.depth ? creation_norm(f, *options.depth, options.word_cap)
                       : creation_norm_auto(f, options.word_cap);
}

VnVerdict decide(const std::vector<double>& lambdas, const std::vector<double>& ses, double lower2, double upper2,
                 double z, double tol) {
  bool all_pass = true;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (lambdas[k] >= upper2 + z * ses[k] + tol) return VnVerdict::certified_fail;
    if (!(lambdas[k] <= lower2 - z * ses[k] + tol)) all_pass = false;
  }
  return all_pass ? VnVerdict::certified_pass : VnVerdict::inconclusive;
}

}  // namespace

Word parse_word(std::string_view text) {
  if (text.empty() || text == "∅") return Word();
  std::vector<std::uint32_t> letters;
  const bool dotted = text.find('.') != std::string_view::npos;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = dotted ? text.find('.', pos) : pos + 1;
    if (end == std::string_view::npos) end = text.size();
    const auto piece = text.substr(pos, end - pos);
    if (piece.empty() || piece.size() > 9 ||
        !std::all_of(piece.begin(), piece.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw std::invalid_argument("malformed word \"" + std::string(text) + "\"");
    }
    const auto letter = static_cast<std::uint32_t>(std::stoul(std::string(piece)));
    if (letter == 0) throw std::invalid_argument("word \"" + std::string(text) + "\": letters start at 1");
    letters.push_back(letter);
    pos = end + (dotted ? 1 : 0);
    if (dotted && end == text.size() - 1) throw std::invalid_argument("malformed word \"" + std::string(text) + "\"");
  }
  return Word(std::move(letters));
}

NcPolynomial::NcPolynomial(std::size_t d) : d_(d) {
  if (d == 0) throw std::invalid_argument("polynomial needs at least one variable");
}

NcPolynomial NcPolynomial::monomial(std::size_t d, const Word& w, Complex c) {
  NcPolynomial f(d);
  f.add(w, c);
  return f;
}

NcPolynomial NcPolynomial::linear(const std::vector<Complex>& c) {
  NcPolynomial f(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) f.add(Word::repeat(static_cast<std::uint32_t>(i + 1), 1), c[i]);
  return f;
}

NcPolynomial& NcPolynomial::add(const Word& w, Complex c) {
  for (auto l : w.letters()) {
    if (l < 1 || l > d_) {
      throw std::invalid_argument("word " + w.to_string() + " uses a letter outside 1.." + std::to_string(d_));
    }
  }
  if (w.size() > kMaxPolynomialDegree) {
    throw std::invalid_argument("term degree " + std::to_string(w.size()) + " exceeds the cap " +
                                std::to_string(kMaxPolynomialDegree));
  }
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw NonFiniteError("non-finite coefficient");
  const Complex sum = terms_[w] + c;
  if (sum == Complex(0.0)) {
    terms_.erase(w);
  } else {
    terms_[w] = sum;
  }
  return *this;
}

std::size_t NcPolynomial::degree() const noexcept {
  std::size_t deg = 0;
  for (const auto& [w, c] : terms_) deg = std::max(deg, w.size());
  return deg;
}

double NcPolynomial::l1_norm() const noexcept {
  double s = 0.0;
  for (const auto& [w, c] : terms_) s += std::abs(c);
  return s;
}

double NcPolynomial::l2_norm() const noexcept {
  double s = 0.0;
  for (const auto& [w, c] : terms_) s += std::norm(c);
  return std::sqrt(s);
}

bool NcPolynomial::is_linear() const noexcept {
  return !terms_.empty() &&
         std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.size() == 1; });
}

ComplexMatrix NcPolynomial::evaluate(const std::vector<ComplexMatrix>& a) const {
  if (a.size() != d_) {
    throw DimensionError("evaluate: expected " + std::to_string(d_) + " matrices, got " + std::to_string(a.size()));
  }
  const auto n = a.front().rows();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& [w, c] : terms_) {
    ComplexMatrix p = ComplexMatrix::Identity(n, n);
    for (auto l : w.letters()) p = (p * a[l - 1]).eval();
    out += c * p;
  }
  return out;
}

ComplexMatrix creation_matrix(const NcPolynomial& f, std::size_t depth, std::size_t word_cap) {
  const std::size_t d = f.d();
  const auto cols = enumerate_words(d, depth, word_cap);
  const std::size_t rows = word_count(d, depth + f.degree());
  if (rows > word_cap) {
    throw WordCapError("creation_matrix: " + std::to_string(rows) + " target words exceed the cap " +
                       std::to_string(word_cap));
  }
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (const auto& [a, c] : f.terms()) {
      m(static_cast<Eigen::Index>(word_index(a + cols[j], d)), static_cast<Eigen::Index>(j)) += c;
    }
  }
  return m;
}

CreationNormBound creation_norm(const NcPolynomial& f, std::size_t depth, std::size_t word_cap) {
  CreationNormBound b;
  b.depth = depth;
  const ComplexMatrix m = creation_matrix(f, depth, word_cap);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> gram(m.adjoint() * m, Eigen::EigenvaluesOnly);
  b.lower = std::sqrt(std::max(0.0, gram.eigenvalues()(gram.eigenvalues().size() - 1)));
  b.upper = f.l1_norm();
  if (f.is_monomial()) {
    // L^a is an isometry
    b.exact = std::abs(f.terms().begin()->second);
    b.exact_reason = "monomial";
  } else if (f.is_linear()) {
    // L_1..L_d have orthogonal ranges
    b.exact = f.l2_norm();
    b.exact_reason = "linear";
  }
  return b;
}

CreationNormBound creation_norm_auto(const NcPolynomial& f, std::size_t word_cap) {
  std::size_t depth = f.degree() + 6;
  auto best = creation_norm(f, depth, word_cap);
  for (;;) {
    const std::size_t next = depth * 2;
    if (word_count(f.d(), next + f.degree()) > word_cap || word_count(f.d(), next) > kAutoMaxColumns) {
      best.converged = false;
      return best;
    }
    auto b = creation_norm(f, next, word_cap);
    const double change = b.lower - best.lower;
    best = b;
    depth = next;
    if (std::abs(change) < kAutoDepthTol) return best;
  }
}

std::string to_string(VnVerdict v) {
  switch (v) {
    case VnVerdict::certified_pass:
      return "certified_pass";
    case VnVerdict::certified_fail:
      return "certified_fail";
    case VnVerdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

VnResult vn_check(const EnsembleSpec& spec, const NcPolynomial& f, const SubalgebraSpec& b, const ComplexMatrix& y,
                  std::size_t samples, std::uint64_t seed, const VnOptions& options) {
  validate(spec);
  check_polynomial(f, spec);
  if (samples < 2) throw std::invalid_argument("vn_check: samples must be >= 2");
  const std::size_t n = dimension(spec);
  b.check_dimension(n);
  if (y.rows() != static_cast<Eigen::Index>(n) || y.cols() != static_cast<Eigen::Index>(n)) {
    throw DimensionError("vn_check: Y must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!all_finite(y)) throw NonFiniteError("vn_check: Y has non-finite entries");
  const double y_scale = 1.0 + y.norm();
  if (hermitian_defect(y) > kHermitianTol * y_scale) throw std::invalid_argument("vn_check: Y is not Hermitian");
  if (!b.contains(y, 1e-12 * y_scale)) {
    throw std::invalid_argument("vn_check: Y does not belong to the " + b.name() + " subalgebra");
  }

  VnResult r;
  r.bounds = bounds_for(f, options);
  r.z = options.z;
  r.bound_tol = options.bound_tol;
  r.samples = samples;

  const auto w = pinv_sqrt(y);  // throws NotPsdError for indefinite Y
  r.y_rank = w.rank;
  const ComplexMatrix y_half = psd_sqrt(y);

  struct Draw {
    ComplexMatrix lhs;
    ComplexMatrix cmp;
  };
  MatrixMoments lhs_acc, cmp_acc;
  ordered_parallel_for(
      samples, options.workers, kVnBatch,
      [&](std::size_t i) {
        const ComplexMatrix fa = f.evaluate(sample(spec, {seed, i}));
        if (!all_finite(fa)) throw SamplingError("vn_check: non-finite f(A) in sample " + std::to_string(i), i);
        const ComplexMatrix x = fa * fa.adjoint();
        Draw d;
        d.lhs = conditional_expectation(y_half * x * y_half, b);
        d.cmp = w.w * d.lhs * w.w;
        return d;
      },
      [&](std::size_t, Draw&& d) {
        lhs_acc.push(d.lhs);
        cmp_acc.push(d.cmp);
      });

  r.lhs = hermitian_part(lhs_acc.mean);
  r.lhs_se = lhs_acc.se().norm();
  r.comparison = hermitian_part(cmp_acc.mean);
  const Eigen::MatrixXd cmp_se = cmp_acc.se();

  r.lambda_max = -std::numeric_limits<double>::infinity();
  for (auto [offset, size] : b.partition(n)) {
    const auto o = static_cast<Eigen::Index>(offset);
    const auto k = static_cast<Eigen::Index>(size);
    const auto eig = hermitian_eig(r.comparison.block(o, o, k, k));
    r.block_lambda_max.push_back(eig.eigenvalues(k - 1));
    r.block_se.push_back(cmp_se.block(o, o, k, k).norm());
    r.lambda_max = std::max(r.lambda_max, eig.eigenvalues(k - 1));
  }

  const double lo = r.bounds.certified_lower();
  const double hi = r.bounds.certified_upper();
  r.verdict = decide(r.block_lambda_max, r.block_se, lo * lo, hi * hi, options.z, options.bound_tol);
  return r;
}

VectorBoundResult vector_bound_check(const EnsembleSpec& spec, const NcPolynomial& f, const ComplexVector& v,
                                     std::size_t samples, std::uint64_t seed, const VnOptions& options) {
  validate(spec);
  check_polynomial(f, spec);
  if (samples < 2) throw std::invalid_argument("vector_bound_check: samples must be >= 2");
  const std::size_t n = dimension(spec);
  if (v.size() != static_cast<Eigen::Index>(n)) {
    throw DimensionError("vector_bound_check: v must have length " + std::to_string(n));
  }
  if (!v.allFinite()) throw NonFiniteError("vector_bound_check: v has non-finite entries");

  VectorBoundResult r;
  r.v_norm2 = v.squaredNorm();
  if (r.v_norm2 == 0.0) throw std::invalid_argument("vector_bound_check: v must be nonzero");
  r.bounds = bounds_for(f, options);
  r.samples = samples;

  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  ordered_parallel_for(
      samples, options.workers, kVnBatch,
      [&](std::size_t i) {
        const ComplexMatrix fa = f.evaluate(sample(spec, {seed, i}));
        const double val = (fa.adjoint() * v).squaredNorm();
        if (!std::isfinite(val)) throw SamplingError("vector_bound_check: non-finite value in sample " + std::to_string(i), i);
        return val;
      },
      [&](std::size_t, double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
      });
  r.lhs = mean;
  r.se = std::sqrt(std::max(0.0, m2) / static_cast<double>(count - 1) / static_cast<double>(count));

  const double lo = r.bounds.certified_lower();
  const double hi = r.bounds.certified_upper();
  r.rhs_lower = lo * lo * r.v_norm2;
  r.rhs_upper = hi * hi * r.v_norm2;
  r.verdict = decide({r.lhs}, {r.se}, r.rhs_lower, r.rhs_upper, options.z, options.bound_tol * r.v_norm2);
  return r;
}

}  // namespace kernelrn
