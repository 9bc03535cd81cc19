#include "segad/common/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace segad {
namespace {
std::atomic<std::size_t> g_max_workers{1};
// Nested calls run inline on the calling worker.
thread_local bool t_inside = false;
}  // namespace

void set_max_workers(std::size_t n) { g_max_workers = std::max<std::size_t>(1, n); }

std::size_t max_workers() { return g_max_workers; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = t_inside ? 1 : std::min(max_workers(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  // Every index below a failing one has already been claimed and runs to
  // completion, so keeping the lowest failing index reproduces the serial
  // outcome.
  std::exception_ptr failure;
  std::size_t failure_index = n;
  std::mutex failure_mu;
  auto run = [&] {
    t_inside = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (i < failure_index) {
          failure_index = i;
          failure = std::current_exception();
        }
        next = n;
        break;
      }
    }
    t_inside = false;
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace segad
