#include "promnet/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace promnet {

namespace {

int default_threads() {
  if (const char* env = std::getenv("PROMNET_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_threads{0};  // 0 = not yet resolved
thread_local int t_nesting = 0;

}  // namespace

int num_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = default_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  int workers = num_threads();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1 || t_nesting > 0) {
    ++t_nesting;
    try {
      fn(0, n);
    } catch (...) {
      --t_nesting;
      throw;
    }
    --t_nesting;
    return;
  }

  std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};

  auto run = [&](std::int64_t begin, std::int64_t end) {
    ++t_nesting;
    try {
      fn(begin, end);
    } catch (...) {
      if (!failed.exchange(true)) first_error = std::current_exception();
    }
    --t_nesting;
  };

  for (int w = 1; w < workers; ++w) {
    std::int64_t begin = w * chunk;
    std::int64_t end = std::min<std::int64_t>(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run, begin, end);
  }
  run(0, std::min<std::int64_t>(n, chunk));
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

}  // namespace promnet
