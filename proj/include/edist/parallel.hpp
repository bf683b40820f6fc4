#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace edist {

/// Runs index-parallel loops on a fixed number of threads.
///
/// Work is split into contiguous index blocks and every index writes only
/// its own output slot; callers reduce the slots in index order afterwards,
/// so results do not depend on the thread count.
class Executor {
 public:
  explicit Executor(std::size_t threads = 1) : threads_(std::max<std::size_t>(1, threads)) {}

  static Executor hardware() { return Executor(std::max(1u, std::thread::hardware_concurrency())); }

  /// Process-wide default used when a caller passes no executor.
  static Executor& global();

  std::size_t threads() const noexcept { return threads_; }

  /// Calls body(i) for i in [0, n). The first exception thrown by any block
  /// is rethrown on the calling thread.
  template <class Body>
  void for_each(std::size_t n, Body&& body) const {
    const std::size_t workers = std::min(threads_, n);
    if (workers <= 1) {
      for (std::size_t i = 0; i < n; ++i) body(i);
      return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
          try {
            for (std::size_t i = begin; i < end; ++i) body(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  /// Evaluates body(i) for every i and returns the results in index order.
  template <class T, class Body>
  std::vector<T> map(std::size_t n, Body&& body) const {
    std::vector<T> out(n);
    for_each(n, [&](std::size_t i) { out[i] = body(i); });
    return out;
  }

 private:
  std::size_t threads_;
};

inline Executor& Executor::global() {
  static Executor instance(1);
  return instance;
}

}  // namespace edist
