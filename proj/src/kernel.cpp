#include "kernelrn/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kernelrn/parallel.hpp"

namespace kernelrn {

// ---------------------------------------------------------------- words

Word Word::reversed() const {
  return Word(std::vector<std::uint32_t>(letters_.rbegin(), letters_.rend()));
}

Word Word::appended(std::uint32_t letter) const {
  auto out = letters_;
  out.push_back(letter);
  return Word(std::move(out));
}

Word Word::prefix() const {
  if (letters_.empty()) return {};
  return Word(std::vector<std::uint32_t>(letters_.begin(), letters_.end() - 1));
}

Word Word::operator+(const Word& rhs) const {
  auto out = letters_;
  out.insert(out.end(), rhs.letters_.begin(), rhs.letters_.end());
  return Word(std::move(out));
}

std::string Word::to_string() const {
  if (letters_.empty()) return "∅";
  const bool wide = std::any_of(letters_.begin(), letters_.end(), [](auto l) { return l > 9; });
  std::string s;
  for (std::size_t k = 0; k < letters_.size(); ++k) {
    if (wide && k > 0) s += '.';
    s += std::to_string(letters_[k]);
  }
  return s;
}

std::size_t word_count(std::size_t d, std::size_t max_len) {
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  std::size_t level = 1;
  for (std::size_t k = 0; k <= max_len; ++k) {
    if (total > kMax - level) return kMax;
    total += level;
    if (k < max_len) {
      if (d != 0 && level > kMax / d) {
        return kMax;
      }
      level *= d;
    }
  }
  return total;
}

std::vector<Word> enumerate_words(std::size_t d, std::size_t max_len, std::size_t cap) {
  if (d < 1) throw std::invalid_argument("enumerate_words: d must be >= 1");
  const std::size_t count = word_count(d, max_len);
  if (count > cap) {
    throw WordCapError("enumerate_words: " + std::to_string(count == SIZE_MAX ? 0 : count) +
                       " words for d=" + std::to_string(d) + ", max_len=" + std::to_string(max_len) +
                       " exceeds cap " + std::to_string(cap));
  }
  std::vector<Word> words;
  words.reserve(count);
  words.emplace_back();
  std::size_t level_begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t level_end = words.size();
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (std::uint32_t i = 1; i <= d; ++i) words.push_back(words[p].appended(i));
    }
    level_begin = level_end;
  }
  return words;
}

std::size_t word_index(const Word& w, std::size_t d) {
  std::size_t offset = word_count(d, w.size()) - [&] {
    std::size_t top = 1;
    for (std::size_t k = 0; k < w.size(); ++k) top *= d;
    return top;
  }();
  std::size_t rank = 0;
  for (auto letter : w.letters()) {
    if (letter < 1 || letter > d) {
      throw std::out_of_range("word_index: letter " + std::to_string(letter) + " outside 1.." +
                              std::to_string(d));
    }
    rank = rank * d + (letter - 1);
  }
  return offset + rank;
}

// ---------------------------------------------------------- subalgebras

SubalgebraSpec SubalgebraSpec::blocks(std::vector<std::size_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("blocks subalgebra: sizes must be non-empty");
  for (auto k : sizes) {
    if (k == 0) throw std::invalid_argument("blocks subalgebra: block sizes must be >= 1");
  }
  return SubalgebraSpec(Kind::blocks, std::move(sizes));
}

std::string SubalgebraSpec::name() const {
  switch (kind_) {
    case Kind::full:
      return "full";
    case Kind::diagonal:
      return "diagonal";
    case Kind::blocks:
      return "blocks";
    case Kind::scalar:
      return "scalar";
  }
  return "unknown";
}

void SubalgebraSpec::check_dimension(std::size_t n) const {
  if (kind_ != Kind::blocks) return;
  const auto total = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
  if (total != n) {
    throw DimensionError("blocks subalgebra: sizes sum to " + std::to_string(total) +
                         " but the matrix dimension is " + std::to_string(n));
  }
}

std::vector<std::pair<std::size_t, std::size_t>> SubalgebraSpec::partition(std::size_t n) const {
  check_dimension(n);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  switch (kind_) {
    case Kind::full:
      out.emplace_back(0, n);
      break;
    case Kind::diagonal:
    case Kind::scalar:
      for (std::size_t i = 0; i < n; ++i) out.emplace_back(i, 1);
      break;
    case Kind::blocks: {
      std::size_t offset = 0;
      for (auto k : sizes_) {
        out.emplace_back(offset, k);
        offset += k;
      }
      break;
    }
  }
  return out;
}

bool SubalgebraSpec::contains(const ComplexMatrix& y, double tol) const {
  if (y.rows() != y.cols()) return false;
  const auto n = static_cast<std::size_t>(y.rows());
  if (kind_ == Kind::blocks) {
    const auto total = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
    if (total != n) return false;
  }
  if (kind_ == Kind::scalar) {
    if (n == 0) return true;
    const Complex c = y.trace() / static_cast<double>(n);
    return (y - c * ComplexMatrix::Identity(y.rows(), y.cols())).cwiseAbs().maxCoeff() <= tol;
  }
  const ComplexMatrix diff = y - conditional_expectation(y, *this);
  return diff.size() == 0 || diff.cwiseAbs().maxCoeff() <= tol;
}

ComplexMatrix conditional_expectation(const ComplexMatrix& x, const SubalgebraSpec& b) {
  if (x.rows() != x.cols()) throw DimensionError("conditional_expectation: matrix must be square");
  const auto n = static_cast<std::size_t>(x.rows());
  b.check_dimension(n);
  switch (b.kind()) {
    case SubalgebraSpec::Kind::full:
      return x;
    case SubalgebraSpec::Kind::diagonal:
      return x.diagonal().asDiagonal();
    case SubalgebraSpec::Kind::scalar: {
      if (n == 0) return x;
      const Complex c = x.trace() / static_cast<double>(n);
      return c * ComplexMatrix::Identity(x.rows(), x.cols());
    }
    case SubalgebraSpec::Kind::blocks: {
      ComplexMatrix out = ComplexMatrix::Zero(x.rows(), x.cols());
      for (auto [offset, size] : b.partition(n)) {
        const auto o = static_cast<Eigen::Index>(offset);
        const auto k = static_cast<Eigen::Index>(size);
        out.block(o, o, k, k) = x.block(o, o, k, k);
      }
      return out;
    }
  }
  return x;
}

std::string to_string(Enforcement e) {
  switch (e) {
    case Enforcement::none:
      return "none";
    case Enforcement::phase:
      return "phase";
    case Enforcement::biunitary:
      return "biunitary";
    case Enforcement::block:
      return "block";
  }
  return "none";
}

Enforcement parse_enforcement(std::string_view name) {
  if (name == "none") return Enforcement::none;
  if (name == "phase") return Enforcement::phase;
  if (name == "biunitary") return Enforcement::biunitary;
  if (name == "block") return Enforcement::block;
  throw std::invalid_argument("unknown enforcement '" + std::string(name) +
                              "' (expected none|phase|biunitary|block)");
}

// ------------------------------------------------------- kernel estimate

std::size_t KernelEstimate::index_of(const Word& w) const {
  if (w.size() > max_len_) {
    throw std::out_of_range("kernel estimate: word " + w.to_string() + " longer than max_len " +
                            std::to_string(max_len_));
  }
  return word_index(w, d_);
}

std::size_t KernelEstimate::packed(std::size_t i, std::size_t j) const {
  const std::size_t w = words_.size();
  if (i >= w || j >= w) throw std::out_of_range("kernel estimate: block index out of range");
  if (i > j) std::swap(i, j);
  // row i of the upper triangle starts after rows 0..i-1
  return i * w - i * (i - 1) / 2 + (j - i);
}

ComplexMatrix KernelEstimate::block(std::size_t i, std::size_t j) const {
  const auto& b = upper_[packed(i, j)];
  if (i <= j) return b;
  return b.adjoint();
}

namespace {

struct PairSums {
  ComplexMatrix sum;
  Eigen::MatrixXd sum_abs2;
  Complex trace_sum{0.0, 0.0};
  double trace_abs2_sum = 0.0;
};

}  // namespace

KernelEstimate estimate_kernel(const EnsembleSpec& spec, std::size_t max_len, std::size_t samples,
                               std::uint64_t seed, const EstimateOptions& options) {
  validate(spec);
  if (samples < 1) throw std::invalid_argument("estimate_kernel: samples must be >= 1");

  KernelEstimate k;
  k.d_ = generator_count(spec);
  k.max_len_ = max_len;
  k.dim_ = dimension(spec);
  k.samples_ = samples;
  k.seed_ = seed;
  k.phase_invariant_ = phase_invariant(spec);
  k.ensemble_ = ensemble_name(spec);
  k.words_ = enumerate_words(k.d_, max_len, options.word_cap);

  const std::size_t nwords = k.words_.size();
  const std::size_t npairs = nwords * (nwords + 1) / 2;
  const auto n = static_cast<Eigen::Index>(k.dim_);

  std::vector<PairSums> acc(npairs);
  for (auto& p : acc) {
    p.sum = ComplexMatrix::Zero(n, n);
    p.sum_abs2 = Eigen::MatrixXd::Zero(n, n);
  }

  const auto& words = k.words_;
  const std::size_t d = k.d_;
  auto compute = [&](std::size_t s) {
    const auto tuple = sample(spec, {seed, s});
    // A^{w i} = A^w A_i; words are ordered so every prefix precedes its extensions
    std::vector<ComplexMatrix> powers(nwords);
    powers[0] = ComplexMatrix::Identity(n, n);
    for (std::size_t w = 1; w < nwords; ++w) {
      const auto parent = word_index(words[w].prefix(), d);
      powers[w].noalias() = powers[parent] * tuple[words[w].back() - 1];
    }
    std::vector<ComplexMatrix> products;
    products.reserve(npairs);
    for (std::size_t i = 0; i < nwords; ++i) {
      for (std::size_t j = i; j < nwords; ++j) {
        ComplexMatrix p;
        p.noalias() = powers[i] * powers[j].adjoint();
        if (!all_finite(p)) {
          throw SamplingError("estimate_kernel: non-finite product A^" + words[i].to_string() +
                                  " (A^" + words[j].to_string() + ")* in sample " + std::to_string(s),
                              s);
        }
        products.push_back(std::move(p));
      }
    }
    return products;
  };
  auto accumulate = [&](std::size_t, std::vector<ComplexMatrix>&& products) {
    for (std::size_t p = 0; p < npairs; ++p) {
      acc[p].sum += products[p];
      acc[p].sum_abs2 += products[p].cwiseAbs2();
      const Complex tr = products[p].trace() / static_cast<double>(n);
      acc[p].trace_sum += tr;
      acc[p].trace_abs2_sum += std::norm(tr);
    }
  };

  const std::size_t bytes_per_sample = npairs * k.dim_ * k.dim_ * sizeof(Complex);
  const std::size_t batch = std::clamp<std::size_t>((std::size_t{256} << 20) / std::max<std::size_t>(bytes_per_sample, 1), 1, 64);
  ordered_parallel_for(samples, options.workers, batch, compute, accumulate);

  const double s = static_cast<double>(samples);
  const bool exact = std::holds_alternative<Deterministic>(spec);
  k.upper_.reserve(npairs);
  k.se_.reserve(npairs);
  k.trace_se_.reserve(npairs);
  std::size_t p = 0;
  for (std::size_t i = 0; i < nwords; ++i) {
    for (std::size_t j = i; j < nwords; ++j, ++p) {
      ComplexMatrix mean = acc[p].sum / s;
      if (i == j) mean = hermitian_part(mean);
      double se = 0.0;
      double trace_se = 0.0;
      if (exact) {
        // identical draws: the estimator has no sampling error
      } else if (samples < 2) {
        se = trace_se = std::numeric_limits<double>::infinity();
      } else {
        // population variance per entry, E|x|^2 - |E x|^2, with Bessel correction
        const Eigen::MatrixXd var =
            ((acc[p].sum_abs2 / s - mean.cwiseAbs2()) * (s / (s - 1.0))).cwiseMax(0.0);
        se = std::sqrt(var.sum() / s);
        const Complex tmean = acc[p].trace_sum / s;
        const double tvar = std::max(0.0, (acc[p].trace_abs2_sum / s - std::norm(tmean)) * (s / (s - 1.0)));
        trace_se = std::sqrt(tvar / s);
      }
      k.upper_.push_back(std::move(mean));
      k.se_.push_back(se);
      k.trace_se_.push_back(trace_se);
    }
  }
  return k;
}

// ------------------------------------------------------ kernel sections

KernelSection restricted_kernel(const KernelEstimate& k, std::size_t order, const SubalgebraSpec& b) {
  if (order > k.max_len()) {
    throw std::out_of_range("restricted_kernel: order " + std::to_string(order) + " exceeds max_len " +
                            std::to_string(k.max_len()));
  }
  b.check_dimension(k.dim());
  KernelSection out;
  out.words = enumerate_words(k.generators(), order, std::numeric_limits<std::size_t>::max());
  out.dim = k.dim();
  const std::size_t w = out.words.size();
  out.blocks.resize(w * w);
  out.se.resize(w * w);
  out.trace_se.resize(w * w);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = i; j < w; ++j) {
      // words of length <= order keep their positions in the full list
      out.blocks[i * w + j] = conditional_expectation(k.block(i, j), b);
      out.se[i * w + j] = out.se[j * w + i] = k.se(i, j);
      out.trace_se[i * w + j] = out.trace_se[j * w + i] = k.trace_se(i, j);
      if (i != j) out.blocks[j * w + i] = out.blocks[i * w + j].adjoint();
    }
  }
  return out;
}

KernelSection shifted_kernel(const KernelEstimate& k, const SubalgebraSpec& b, std::size_t order) {
  if (k.max_len() < 1 || order > k.max_len() - 1) {
    throw std::out_of_range("shifted_kernel: order " + std::to_string(order) +
                            " requires max_len >= order + 1 (have " + std::to_string(k.max_len()) + ")");
  }
  b.check_dimension(k.dim());
  KernelSection out;
  out.words = enumerate_words(k.generators(), order, std::numeric_limits<std::size_t>::max());
  out.dim = k.dim();
  const std::size_t w = out.words.size();
  const auto n = static_cast<Eigen::Index>(k.dim());
  out.blocks.resize(w * w);
  out.se.resize(w * w);
  out.trace_se.resize(w * w);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = i; j < w; ++j) {
      ComplexMatrix sum = ComplexMatrix::Zero(n, n);
      double se = 0.0;
      double trace_se = 0.0;
      for (std::uint32_t g = 1; g <= k.generators(); ++g) {
        const auto ai = k.index_of(out.words[i].appended(g));
        const auto bj = k.index_of(out.words[j].appended(g));
        sum += k.block(ai, bj);
        se += k.se(ai, bj);
        trace_se += k.trace_se(ai, bj);
      }
      out.blocks[i * w + j] = conditional_expectation(sum, b);
      if (i == j) out.blocks[i * w + j] = hermitian_part(out.blocks[i * w + j]);
      out.se[i * w + j] = out.se[j * w + i] = se;
      out.trace_se[i * w + j] = out.trace_se[j * w + i] = trace_se;
      if (i != j) out.blocks[j * w + i] = out.blocks[i * w + j].adjoint();
    }
  }
  return out;
}

KernelSection shifted_kernel(const KernelEstimate& k, const SubalgebraSpec& b) {
  if (k.max_len() < 1) throw std::out_of_range("shifted_kernel: max_len must be >= 1");
  return shifted_kernel(k, b, k.max_len() - 1);
}

GramMatrix assemble_gram(const KernelSection& section, const SubalgebraSpec& b, Enforcement enforce,
                         double psd_clip_tol) {
  const std::size_t w = section.size();
  const auto n = static_cast<Eigen::Index>(section.dim);
  if (enforce == Enforcement::block && b.kind() != SubalgebraSpec::Kind::blocks) {
    throw std::invalid_argument("assemble_gram: enforce=block requires a blocks subalgebra");
  }
  const auto parts = b.partition(section.dim);

  GramMatrix g;
  g.words = section.words;
  g.enforce = enforce;
  g.matrix = ComplexMatrix::Zero(static_cast<Eigen::Index>(w) * n, static_cast<Eigen::Index>(w) * n);
  double se2 = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = i; j < w; ++j) {
      const bool same_level = section.words[i].size() == section.words[j].size();
      ComplexMatrix blk;
      double se = section.se[i * w + j];
      if (enforce == Enforcement::none) {
        blk = section.at(i, j);
      } else if (!same_level) {
        blk = ComplexMatrix::Zero(n, n);
        se = 0.0;
      } else if (enforce == Enforcement::phase) {
        blk = section.at(i, j);
      } else if (enforce == Enforcement::biunitary) {
        Complex c = section.at(i, j).trace() / static_cast<double>(n);
        if (i == j) c = c.real();
        blk = c * ComplexMatrix::Identity(n, n);
        se = section.trace_se[i * w + j];
      } else {
        blk = ComplexMatrix::Zero(n, n);
        for (auto [offset, size] : parts) {
          const auto o = static_cast<Eigen::Index>(offset);
          const auto k = static_cast<Eigen::Index>(size);
          Complex c = section.at(i, j).block(o, o, k, k).trace() / static_cast<double>(size);
          if (i == j) c = c.real();
          blk.block(o, o, k, k) = c * ComplexMatrix::Identity(k, k);
        }
      }
      const auto ri = static_cast<Eigen::Index>(i) * n;
      const auto cj = static_cast<Eigen::Index>(j) * n;
      g.matrix.block(ri, cj, n, n) = blk;
      if (i != j) g.matrix.block(cj, ri, n, n) = blk.adjoint();
      se2 += (i == j ? 1.0 : 2.0) * se * se;
    }
  }
  g.se = std::sqrt(se2);

  if (g.matrix.size() > 0) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(g.matrix, Eigen::EigenvaluesOnly);
    g.min_eig = solver.eigenvalues()(0);
    g.max_eig = solver.eigenvalues()(solver.eigenvalues().size() - 1);
    if (g.min_eig < -psd_clip_tol * std::max(1.0, g.max_eig)) {
      throw NotPsdError("assemble_gram: min eigenvalue " + std::to_string(g.min_eig) +
                            " below clip tolerance; increase the sample count",
                        g.min_eig);
    }
  }
  return g;
}

GramMatrix assemble_gram(const KernelEstimate& k, std::size_t order, const SubalgebraSpec& b,
                         Enforcement enforce, double psd_clip_tol) {
  if (enforce != Enforcement::none && !k.phase_invariant()) {
    throw std::invalid_argument("assemble_gram: enforce=" + to_string(enforce) + " requires a phase-invariant ensemble (got " +
                                k.ensemble() + ")");
  }
  return assemble_gram(restricted_kernel(k, order, b), b, enforce, psd_clip_tol);
}

}  // namespace kernelrn
