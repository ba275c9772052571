#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isa {

/// Evaluates fn(r) for r in [0, count) on up to `workers` threads.
///
/// Results land in slot r, so the output never depends on scheduling. The first
/// exception thrown by any replication is rethrown after all workers join.
template <typename Fn>
auto run_replications(std::size_t count, std::size_t workers, Fn&& fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out(count);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t r = 0; r < count; ++r) out[r] = fn(r);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        out[r] = fn(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// SA_WORKERS when set to a positive integer, otherwise 1.
std::size_t default_workers();

}  // namespace isa
