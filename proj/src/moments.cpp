#include "kernelrn/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kernelrn/kernel.hpp"
#include "kernelrn/parallel.hpp"

namespace kernelrn {

namespace {

constexpr std::size_t kMomentBatch = 64;
constexpr double kUnitaryTol = 1e-8;

// Per-sample scalars laid out as [c_0..c_M | d_0..d_M | block_1 0..M | ...].
struct SampleMoments {
  std::vector<double> values;
};

struct Layout {
  std::size_t width = 0;  // M + 1
  bool c = false;
  bool d = false;
  std::size_t blocks = 0;
  std::size_t c_off = 0, d_off = 0, b_off = 0, total = 0;
};

Layout make_layout(const MomentRequest& req) {
  Layout l;
  l.width = req.max_order + 1;
  l.c = req.c;
  l.d = req.d;
  l.blocks = req.block_sizes.size();
  std::size_t off = 0;
  if (l.c) {
    l.c_off = off;
    off += l.width;
  }
  if (l.d) {
    l.d_off = off;
    off += l.width;
  }
  l.b_off = off;
  off += l.blocks * l.width;
  l.total = off;
  return l;
}

SampleMoments compute_sample(const EnsembleSpec& spec, const MomentRequest& req, const Layout& l,
                             std::uint64_t seed, std::size_t index) {
  const auto mats = sample(spec, {seed, index});
  const ComplexMatrix& a = mats.front();
  const auto n = static_cast<double>(a.rows());
  SampleMoments out;
  out.values.assign(l.total, 0.0);

  if (l.c || l.blocks > 0) {
    ComplexMatrix power = ComplexMatrix::Identity(a.rows(), a.cols());
    for (std::size_t m = 0; m < l.width; ++m) {
      if (m > 0) power = (power * a).eval();
      if (!all_finite(power)) {
        throw SamplingError("moment pass: non-finite power A^" + std::to_string(m) + " in sample " +
                                std::to_string(index),
                            index);
      }
      if (l.c) out.values[l.c_off + m] = power.squaredNorm() / n;
      if (l.blocks > 0) {
        const RealVector rows = power.rowwise().squaredNorm();
        std::size_t offset = 0;
        for (std::size_t r = 0; r < l.blocks; ++r) {
          const std::size_t k = req.block_sizes[r];
          out.values[l.b_off + r * l.width + m] =
              rows.segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(k)).sum() /
              static_cast<double>(k);
          offset += k;
        }
      }
    }
  }

  if (l.d) {
    // Tr(W^{2k}) = |W^k|_F^2 and Tr(W^{2k+1}) = |A W^k|_F^2 with W = A* A
    const ComplexMatrix w = a.adjoint() * a;
    ComplexMatrix wk = ComplexMatrix::Identity(a.cols(), a.cols());
    for (std::size_t m = 0; m < l.width; ++m) {
      if (m >= 2 && m % 2 == 0) wk = (wk * w).eval();
      const double tr = (m % 2 == 0) ? wk.squaredNorm() : (a * wk).squaredNorm();
      if (!std::isfinite(tr)) {
        throw SamplingError("moment pass: non-finite trace of (A*A)^" + std::to_string(m) + " in sample " +
                                std::to_string(index),
                            index);
      }
      out.values[l.d_off + m] = tr / n;
    }
  }
  return out;
}

struct Stats {
  std::vector<double> mean;
  std::vector<double> se;
};

// Column means and standard errors of a row-major S x width table.
Stats column_stats(const std::vector<double>& table, std::size_t samples, std::size_t width) {
  Stats s;
  s.mean.assign(width, 0.0);
  s.se.assign(width, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = 0; j < width; ++j) s.mean[j] += table[i * width + j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const double dv = table[i * width + j] - s.mean[j];
      s.se[j] += dv * dv;
    }
  }
  for (auto& v : s.se) v = std::sqrt(v / static_cast<double>(samples - 1) / static_cast<double>(samples));
  return s;
}

// Extract columns [off, off + width) and the paired differences of consecutive
// columns, returning the sequence with se and step_se filled.
MomentSequence summarize(const std::vector<double>& table, std::size_t samples, std::size_t total,
                         std::size_t off, std::size_t width) {
  std::vector<double> cols(samples * width);
  std::vector<double> steps(samples * (width > 0 ? width - 1 : 0));
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t m = 0; m < width; ++m) cols[i * width + m] = table[i * total + off + m];
    for (std::size_t m = 0; m + 1 < width; ++m) {
      steps[i * (width - 1) + m] = table[i * total + off + m + 1] - table[i * total + off + m];
    }
  }
  const auto vs = column_stats(cols, samples, width);
  MomentSequence seq;
  seq.values = vs.mean;
  seq.se = vs.se;
  seq.step_se = column_stats(steps, samples, width - 1).se;
  return seq;
}

void check_request(const EnsembleSpec& spec, const MomentRequest& req, std::size_t samples) {
  validate(spec);
  if (generator_count(spec) != 1) {
    throw std::invalid_argument("moment sequences need a single-generator ensemble, got d = " +
                                std::to_string(generator_count(spec)));
  }
  if (samples < 2) throw std::invalid_argument("moment sequences need samples >= 2");
  if (!req.block_sizes.empty()) {
    SubalgebraSpec::blocks(req.block_sizes).check_dimension(dimension(spec));
  }
}

// A^m (A^m)* = (A* A)^m = I for unitary A, so every normalized trace is 1.
MomentRun unitary_run(const EnsembleSpec& spec, const MomentRequest& req, std::size_t samples,
                      std::uint64_t seed, unsigned workers) {
  ordered_parallel_for(
      samples, workers, kMomentBatch,
      [&](std::size_t i) {
        const auto u = sample(spec, {seed, i}).front();
        const auto n = u.rows();
        return (u.adjoint() * u - ComplexMatrix::Identity(n, n)).norm();
      },
      [&](std::size_t i, double defect) {
        if (!(defect <= kUnitaryTol)) {
          throw SamplingError("moment pass: sample " + std::to_string(i) + " is not unitary", i);
        }
      });
  const std::size_t width = req.max_order + 1;
  MomentSequence ones;
  ones.values.assign(width, 1.0);
  ones.se.assign(width, 0.0);
  ones.step_se.assign(width - 1, 0.0);
  MomentRun run;
  if (req.c) run.c = ones;
  if (req.d) run.d = ones;
  for (std::size_t r = 0; r < req.block_sizes.size(); ++r) run.blocks.push_back(ones);
  if (req.c && req.d) {
    run.c_minus_d.assign(width, 0.0);
    run.c_minus_d_se.assign(width, 0.0);
  }
  return run;
}

}  // namespace

std::string to_string(MomentKind k) {
  switch (k) {
    case MomentKind::c:
      return "c";
    case MomentKind::d:
      return "d";
    case MomentKind::c_block:
      return "c_block";
  }
  return "c";
}

std::string to_string(TestOutcome t) {
  switch (t) {
    case TestOutcome::pass:
      return "pass";
    case TestOutcome::fail:
      return "fail";
    case TestOutcome::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

MomentRun run_moment_pass(const EnsembleSpec& spec, const MomentRequest& request, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options) {
  check_request(spec, request, samples);
  const Layout layout = make_layout(request);

  MomentRun run;
  if (std::holds_alternative<HaarUnitary>(spec)) {
    run = unitary_run(spec, request, samples, seed, options.workers);
  } else {
    std::vector<double> table(samples * layout.total);
    ordered_parallel_for(
        samples, options.workers, kMomentBatch,
        [&](std::size_t i) { return compute_sample(spec, request, layout, seed, i); },
        [&](std::size_t i, SampleMoments&& s) {
          std::copy(s.values.begin(), s.values.end(), table.begin() + static_cast<std::ptrdiff_t>(i * layout.total));
        });

    if (layout.c) run.c = summarize(table, samples, layout.total, layout.c_off, layout.width);
    if (layout.d) run.d = summarize(table, samples, layout.total, layout.d_off, layout.width);
    for (std::size_t r = 0; r < layout.blocks; ++r) {
      run.blocks.push_back(summarize(table, samples, layout.total, layout.b_off + r * layout.width, layout.width));
    }
    if (layout.c && layout.d) {
      std::vector<double> diff(samples * layout.width);
      for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t m = 0; m < layout.width; ++m) {
          diff[i * layout.width + m] =
              table[i * layout.total + layout.c_off + m] - table[i * layout.total + layout.d_off + m];
        }
      }
      const auto st = column_stats(diff, samples, layout.width);
      run.c_minus_d = st.mean;
      run.c_minus_d_se = st.se;
    }
  }

  const std::string name = ensemble_name(spec);
  auto stamp = [&](MomentSequence& s, MomentKind kind, std::size_t block) {
    s.kind = kind;
    s.block = block;
    s.samples = samples;
    s.seed = seed;
    s.ensemble = name;
  };
  if (run.c) stamp(*run.c, MomentKind::c, 0);
  if (run.d) stamp(*run.d, MomentKind::d, 0);
  for (std::size_t r = 0; r < run.blocks.size(); ++r) stamp(run.blocks[r], MomentKind::c_block, r + 1);
  return run;
}

MomentSequence c_sequence(const EnsembleSpec& spec, std::size_t max_order, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options) {
  MomentRequest req;
  req.max_order = max_order;
  return *run_moment_pass(spec, req, samples, seed, options).c;
}

MomentSequence d_sequence(const EnsembleSpec& spec, std::size_t max_order, std::size_t samples,
                          std::uint64_t seed, const MomentOptions& options) {
  MomentRequest req;
  req.max_order = max_order;
  req.c = false;
  req.d = true;
  return *run_moment_pass(spec, req, samples, seed, options).d;
}

std::vector<MomentSequence> block_c_sequence(const EnsembleSpec& spec, const std::vector<std::size_t>& sizes,
                                             std::size_t max_order, std::size_t samples, std::uint64_t seed,
                                             const MomentOptions& options) {
  if (sizes.empty()) throw std::invalid_argument("block_c_sequence: no blocks given");
  MomentRequest req;
  req.max_order = max_order;
  req.c = false;
  req.block_sizes = sizes;
  return run_moment_pass(spec, req, samples, seed, options).blocks;
}

RatioVerdict ratio_test(const MomentSequence& seq, double z) {
  RatioVerdict v;
  v.z = z;
  const auto& x = seq.values;
  for (std::size_t m = 0; m + 1 < x.size(); ++m) {
    const double se_m = m < seq.se.size() ? seq.se[m] : 0.0;
    const double step = m < seq.step_se.size() ? seq.step_se[m] : 0.0;
    v.ratio.push_back(x[m] != 0.0 ? x[m + 1] / x[m] : std::numeric_limits<double>::infinity());
    v.margin.push_back(x[m] - x[m + 1]);
    v.margin_se.push_back(step);

    TestOutcome flag;
    const double slack = kRatioRelTol * std::max(std::abs(x[m]), std::abs(x[m + 1]));
    if (!(x[m] > z * se_m) || !std::isfinite(x[m + 1])) {
      flag = TestOutcome::inconclusive;
    } else if (x[m + 1] <= x[m] + z * step + slack) {
      flag = TestOutcome::pass;
    } else {
      flag = TestOutcome::fail;
    }
    v.flags.push_back(flag);
    if (flag == TestOutcome::fail && !v.first_failing) v.first_failing = m;
  }
  if (v.first_failing) {
    v.overall = TestOutcome::fail;
  } else if (std::find(v.flags.begin(), v.flags.end(), TestOutcome::inconclusive) != v.flags.end()) {
    v.overall = TestOutcome::inconclusive;
  } else {
    v.overall = TestOutcome::pass;
  }
  return v;
}

std::uint64_t binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i: it is i * binom(n - k + i, i)
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max()) {
      throw ReferenceOverflowError("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                                   ") exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t catalan(unsigned m) {
  if (m > kCatalanCap) {
    throw ReferenceOverflowError("catalan(" + std::to_string(m) + ") exceeds 64 bits; cap is " +
                                 std::to_string(kCatalanCap));
  }
  unsigned __int128 c = 1;
  for (unsigned j = 0; j < m; ++j) c = c * 2 * (2 * j + 1) / (j + 2);
  return static_cast<std::uint64_t>(c);
}

Rational fuss_catalan_moment(unsigned m, unsigned p) {
  if (p < 1) throw std::invalid_argument("fuss_catalan_moment: p must be >= 1");
  const auto top = static_cast<unsigned long long>(m + 1) * p;
  if (top > std::numeric_limits<unsigned>::max()) throw ReferenceOverflowError("fuss_catalan_moment: order too large");
  const std::uint64_t num = binomial(static_cast<unsigned>(top), p);
  const std::uint64_t den = static_cast<std::uint64_t>(m) * p + 1;
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

double mp_moment(unsigned k, double y, double sigma2) {
  if (k < 1) throw std::invalid_argument("mp_moment: k must be >= 1");
  if (!(y > 0.0) || !(sigma2 > 0.0) || !std::isfinite(y) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("mp_moment: y and sigma2 must be positive and finite");
  }
  double sum = 0.0;
  double y_pow = 1.0;
  for (unsigned r = 0; r < k; ++r) {
    // Narayana number N(k, r + 1) = binom(k, r) binom(k - 1, r) / (r + 1), an integer
    double coeff;
    try {
      const unsigned __int128 prod =
          static_cast<unsigned __int128>(binomial(k, r)) * binomial(k - 1, r);
      coeff = static_cast<double>(prod / (r + 1));
    } catch (const ReferenceOverflowError&) {
      coeff = std::exp(std::lgamma(k + 1.0) - std::lgamma(r + 1.0) - std::lgamma(k - r + 1.0) +
                       std::lgamma(static_cast<double>(k)) - std::lgamma(r + 1.0) - std::lgamma(k - r + 0.0) -
                       std::log(r + 1.0));
    }
    sum += coeff * y_pow;
    y_pow *= y;
  }
  return std::pow(sigma2, static_cast<double>(k)) * sum;
}

namespace {

double normalized_deviation(double measured, double limit, double se) {
  const double diff = measured - limit;
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

double catalan_real(std::size_t m) {
  if (m <= kCatalanCap) return static_cast<double>(catalan(static_cast<unsigned>(m)));
  return std::exp(std::lgamma(2.0 * m + 1.0) - 2.0 * std::lgamma(m + 1.0) - std::log(m + 1.0));
}

}  // namespace

std::vector<AsymptoticRow> asymptotic_report(const MomentSequence& seq, double tau) {
  if (seq.kind == MomentKind::c_block) {
    throw std::invalid_argument("asymptotic_report: block sequences have no single-tau limit");
  }
  std::vector<AsymptoticRow> rows;
  for (std::size_t m = 0; m < seq.values.size(); ++m) {
    AsymptoticRow row;
    row.m = m;
    row.measured = seq.values[m];
    row.se = m < seq.se.size() ? seq.se[m] : 0.0;
    row.limit = std::pow(tau, static_cast<double>(m));
    if (seq.kind == MomentKind::d) row.limit *= catalan_real(m);
    row.deviation_over_se = normalized_deviation(row.measured, row.limit, row.se);
    rows.push_back(row);
  }
  return rows;
}

std::vector<AsymptoticRow> difference_report(const MomentRun& run, double tau) {
  if (!run.c || !run.d) throw std::invalid_argument("difference_report: run lacks c or d");
  std::vector<AsymptoticRow> rows;
  for (std::size_t m = 0; m < run.c_minus_d.size(); ++m) {
    AsymptoticRow row;
    row.m = m;
    row.measured = run.c_minus_d[m];
    row.se = run.c_minus_d_se[m];
    row.limit = std::pow(tau, static_cast<double>(m)) * (1.0 - catalan_real(m));
    row.deviation_over_se = normalized_deviation(row.measured, row.limit, row.se);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kernelrn
