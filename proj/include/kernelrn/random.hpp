#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace kernelrn {

/// Identifies one Monte Carlo draw. The matrices produced for a sample depend
/// only on the ensemble and this pair.
struct SampleIdentity {
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based substream: the k-th output is mix64(key + (k + 1) * gamma),
/// with the key derived from (seed, sample_index). Any sample's stream can be
/// regenerated independently of every other sample.
class SampleStream {
 public:
  explicit SampleStream(SampleIdentity id) noexcept
      : key_(mix64(id.seed ^ mix64(id.sample_index + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() noexcept {
    counter_ += kGamma;
    return mix64(key_ + counter_);
  }

  /// Uniform on (0, 1]; never returns 0 so log() stays finite.
  double next_unit() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Circular complex Gaussian with E|z|^2 = variance.
  std::complex<double> next_complex_gaussian(double variance) noexcept {
    const double radius = std::sqrt(-variance * std::log(next_unit()));
    const double angle = 2.0 * std::numbers::pi * next_unit();
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kernelrn
