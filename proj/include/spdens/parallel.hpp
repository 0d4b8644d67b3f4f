#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>

namespace spdens {

/// body(i) for i in [0, n) on up to `threads` OpenMP threads; the first
/// exception thrown by any iteration is rethrown after the loop.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, threads))
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace spdens
