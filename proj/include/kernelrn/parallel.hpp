#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace kernelrn {

/// 0 means "all hardware threads".
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates compute(i) for i in [0, count) on up to `workers` threads and
/// feeds the results to accumulate(i, result) strictly in index order on the
/// calling thread. Work is cut into batches of `batch` indices; the batch size
/// must not depend on the worker count, so any reduction performed by
/// `accumulate` is bitwise reproducible for every worker count.
template <class Compute, class Accumulate>
void ordered_parallel_for(std::size_t count, unsigned workers, std::size_t batch, Compute&& compute,
                          Accumulate&& accumulate) {
  using Result = decltype(compute(std::size_t{0}));
  workers = resolve_workers(workers);
  batch = std::max<std::size_t>(batch, 1);
  std::vector<std::optional<Result>> slots(std::min(batch, count));

  for (std::size_t start = 0; start < count; start += batch) {
    const std::size_t len = std::min(batch, count - start);
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, len));
    if (threads <= 1) {
      for (std::size_t k = 0; k < len; ++k) slots[k].emplace(compute(start + k));
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::exception_ptr> failures(len);
      auto run = [&] {
        for (std::size_t k = next++; k < len; k = next++) {
          try {
            slots[k].emplace(compute(start + k));
          } catch (...) {
            failures[k] = std::current_exception();
          }
        }
      };
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
      pool.clear();
      // lowest failing index wins, matching the serial path
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
    }
    for (std::size_t k = 0; k < len; ++k) {
      accumulate(start + k, std::move(*slots[k]));
      slots[k].reset();
    }
  }
}

}  // namespace kernelrn
