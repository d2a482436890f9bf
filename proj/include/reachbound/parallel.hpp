#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace reachbound {

inline int default_workers() {
  if (const char* env = std::getenv("REACHBOUND_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

// Runs fn(chunk_index, begin, end) over [0, count). Chunk boundaries depend
// only on `chunk`, never on the worker count, so per-chunk accumulation is
// reproducible for any number of threads.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t chunk, int workers, Fn&& fn) {
  if (count == 0) return;
  chunk = std::max<std::size_t>(1, chunk);
  const std::size_t nchunks = (count + chunk - 1) / chunk;
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || nchunks == 1) {
    for (std::size_t c = 0; c < nchunks; ++c)
      fn(c, c * chunk, std::min(count, (c + 1) * chunk));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;  // write guarded by the CAS on `failed`

  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= nchunks || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(c, c * chunk, std::min(count, (c + 1) * chunk));
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) first_error = std::current_exception();
        return;
      }
    }
  };

  const int nt = int(std::min<std::size_t>(std::size_t(workers), nchunks));
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(nt - 1));
  for (int i = 1; i < nt; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace reachbound
