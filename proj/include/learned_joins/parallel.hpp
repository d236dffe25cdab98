#pragma once

#include <chrono>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ljoin {

struct ChunkRange {
  std::size_t begin;
  std::size_t end;

  std::size_t size() const noexcept { return end - begin; }
};

/// Contiguous chunk w of W over [0, n).
inline ChunkRange chunk_range(std::size_t n, std::size_t workers, std::size_t w) noexcept {
  return {n * w / workers, n * (w + 1) / workers};
}

/// Runs fn(w) for w in [0, workers) on dedicated threads and joins them; the
/// call itself is the phase barrier. The first worker exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t workers, Fn&& fn) {
  if (workers <= 1) {
    fn(std::size_t{0});
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        fn(w);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ljoin
