#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "kernelrn/numerics.hpp"
#include "kernelrn/random.hpp"

namespace kernelrn {

/// Complex Ginibre with entry variance tau / n.
struct Ginibre {
  std::size_t n = 0;
  double tau = 0.0;
};

/// Complex Ginibre with an explicit entry variance.
struct GinibreRaw {
  std::size_t n = 0;
  double sigma2 = 0.0;
};

struct HaarUnitary {
  std::size_t n = 0;
};

/// Gaussian matrix with a block-constant variance profile: entry (i, j) with
/// i in block r and j in block s has variance tau[r][s] / N, N = sum(sizes).
struct BlockGinibre {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> tau;
};

/// d independent Ginibre matrices with entry variance tau / n.
struct GinibreTuple {
  std::size_t d = 0;
  std::size_t n = 0;
  double tau = 0.0;
};

/// Fixed matrices returned for every sample.
struct Deterministic {
  std::vector<ComplexMatrix> matrices;
};

using EnsembleSpec =
    std::variant<Ginibre, GinibreRaw, HaarUnitary, BlockGinibre, GinibreTuple, Deterministic>;

class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidSpecError when dimensions or variances are out of range.
void validate(const EnsembleSpec& spec);

std::size_t dimension(const EnsembleSpec& spec);

/// Number of generators d in the sampled tuple.
std::size_t generator_count(const EnsembleSpec& spec);

/// True when the law is invariant under A -> e^{i theta} A.
bool phase_invariant(const EnsembleSpec& spec);

/// Short lowercase name, e.g. "ginibre".
std::string ensemble_name(const EnsembleSpec& spec);

/// Draws the tuple (A_1, ..., A_d) for one sample. The result depends only on
/// (spec, id).
std::vector<ComplexMatrix> sample(const EnsembleSpec& spec, SampleIdentity id);

}  // namespace kernelrn
