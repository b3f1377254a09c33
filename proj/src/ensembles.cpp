#include "kernelrn/ensembles.hpp"

#include <cmath>
#include <numeric>

namespace kernelrn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

ComplexMatrix gaussian_matrix(SampleStream& stream, std::size_t n, double variance) {
  ComplexMatrix a(n, n);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = stream.next_complex_gaussian(variance);
  }
  return a;
}

ComplexMatrix haar_unitary(SampleStream& stream, std::size_t n) {
  const ComplexMatrix z = gaussian_matrix(stream, n, 1.0);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  // Q diag(r_ii / |r_ii|) removes the phase ambiguity of the factorization.
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex rkk = r(k, k);
    const double mag = std::abs(rkk);
    q.col(k) *= mag > 0.0 ? rkk / mag : Complex(1.0, 0.0);
  }
  return q;
}

}  // namespace

void validate(const EnsembleSpec& spec) {
  std::visit(
      Overloaded{
          [](const Ginibre& g) {
            if (g.n < 1) throw InvalidSpecError("ginibre: n must be >= 1");
            if (!positive_finite(g.tau)) throw InvalidSpecError("ginibre: tau must be finite and > 0");
          },
          [](const GinibreRaw& g) {
            if (g.n < 1) throw InvalidSpecError("ginibre_raw: n must be >= 1");
            if (!positive_finite(g.sigma2)) {
              throw InvalidSpecError("ginibre_raw: sigma2 must be finite and > 0");
            }
          },
          [](const HaarUnitary& h) {
            if (h.n < 1) throw InvalidSpecError("haar: n must be >= 1");
          },
          [](const BlockGinibre& b) {
            if (b.sizes.empty()) throw InvalidSpecError("block_ginibre: sizes must be non-empty");
            for (auto k : b.sizes) {
              if (k < 1) throw InvalidSpecError("block_ginibre: block sizes must be >= 1");
            }
            if (b.tau.size() != b.sizes.size()) {
              throw InvalidSpecError("block_ginibre: tau must be R x R with R = number of blocks");
            }
            for (const auto& row : b.tau) {
              if (row.size() != b.sizes.size()) {
                throw InvalidSpecError("block_ginibre: tau must be R x R with R = number of blocks");
              }
              for (double t : row) {
                if (!std::isfinite(t) || t < 0.0) {
                  throw InvalidSpecError("block_ginibre: tau entries must be finite and >= 0");
                }
              }
            }
          },
          [](const GinibreTuple& g) {
            if (g.d < 1) throw InvalidSpecError("ginibre_tuple: d must be >= 1");
            if (g.n < 1) throw InvalidSpecError("ginibre_tuple: n must be >= 1");
            if (!positive_finite(g.tau)) {
              throw InvalidSpecError("ginibre_tuple: tau must be finite and > 0");
            }
          },
          [](const Deterministic& d) {
            if (d.matrices.empty()) throw InvalidSpecError("deterministic: needs at least one matrix");
            const auto n = d.matrices.front().rows();
            for (const auto& m : d.matrices) {
              if (m.rows() < 1 || m.rows() != m.cols() || m.rows() != n) {
                throw InvalidSpecError("deterministic: matrices must be square of a common size >= 1");
              }
              if (!all_finite(m)) throw InvalidSpecError("deterministic: non-finite entries");
            }
          },
      },
      spec);
}

std::size_t dimension(const EnsembleSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Ginibre& g) { return g.n; },
          [](const GinibreRaw& g) { return g.n; },
          [](const HaarUnitary& h) { return h.n; },
          [](const BlockGinibre& b) {
            return std::accumulate(b.sizes.begin(), b.sizes.end(), std::size_t{0});
          },
          [](const GinibreTuple& g) { return g.n; },
          [](const Deterministic& d) {
            return d.matrices.empty() ? std::size_t{0}
                                      : static_cast<std::size_t>(d.matrices.front().rows());
          },
      },
      spec);
}

std::size_t generator_count(const EnsembleSpec& spec) {
  if (const auto* t = std::get_if<GinibreTuple>(&spec)) return t->d;
  if (const auto* d = std::get_if<Deterministic>(&spec)) return d->matrices.size();
  return 1;
}

bool phase_invariant(const EnsembleSpec& spec) { return !std::holds_alternative<Deterministic>(spec); }

std::string ensemble_name(const EnsembleSpec& spec) {
  return std::visit(Overloaded{
                        [](const Ginibre&) { return std::string("ginibre"); },
                        [](const GinibreRaw&) { return std::string("ginibre_raw"); },
                        [](const HaarUnitary&) { return std::string("haar"); },
                        [](const BlockGinibre&) { return std::string("block_ginibre"); },
                        [](const GinibreTuple&) { return std::string("ginibre_tuple"); },
                        [](const Deterministic&) { return std::string("deterministic"); },
                    },
                    spec);
}

std::vector<ComplexMatrix> sample(const EnsembleSpec& spec, SampleIdentity id) {
  validate(spec);
  SampleStream stream(id);
  return std::visit(
      Overloaded{
          [&](const Ginibre& g) {
            return std::vector<ComplexMatrix>{
                gaussian_matrix(stream, g.n, g.tau / static_cast<double>(g.n))};
          },
          [&](const GinibreRaw& g) {
            return std::vector<ComplexMatrix>{gaussian_matrix(stream, g.n, g.sigma2)};
          },
          [&](const HaarUnitary& h) { return std::vector<ComplexMatrix>{haar_unitary(stream, h.n)}; },
          [&](const BlockGinibre& b) {
            const std::size_t n = dimension(spec);
            std::vector<std::size_t> block_of;
            block_of.reserve(n);
            for (std::size_t r = 0; r < b.sizes.size(); ++r) block_of.insert(block_of.end(), b.sizes[r], r);
            ComplexMatrix a(n, n);
            const double scale = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              for (std::size_t i = 0; i < n; ++i) {
                const double variance = b.tau[block_of[i]][block_of[j]] * scale;
                a(i, j) = stream.next_complex_gaussian(variance);
              }
            }
            return std::vector<ComplexMatrix>{std::move(a)};
          },
          [&](const GinibreTuple& g) {
            std::vector<ComplexMatrix> out;
            out.reserve(g.d);
            for (std::size_t k = 0; k < g.d; ++k) {
              out.push_back(gaussian_matrix(stream, g.n, g.tau / static_cast<double>(g.n)));
            }
            return out;
          },
          [](const Deterministic& d) { return d.matrices; },
      },
      spec);
}

}  // namespace kernelrn
