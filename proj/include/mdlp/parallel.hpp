#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mdlp {

// Worker cap: MDLAB_THREADS (integer >= 1) if set, hardware concurrency
// otherwise. Read on every call so tests can vary it in-process.
inline int worker_count() {
  if (const char* env = std::getenv("MDLAB_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static block partition of [begin, end). Output is independent of the
// worker count as long as fn(i) writes only to slot i.
inline void parallel_for(long long begin, long long end, const std::function<void(long long)>& fn) {
  const long long n = end - begin;
  if (n <= 0) return;
  int workers = worker_count();
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    for (long long i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const long long chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const long long lo = begin + t * chunk;
    const long long hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
      try {
        for (long long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mdlp
