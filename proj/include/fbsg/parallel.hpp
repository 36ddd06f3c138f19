#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fbsg {

// Runs fn(i) for i in [0,n) across `workers` threads. Each index writes only
// its own slot, so the result is deterministic regardless of worker count;
// reductions over the output must be done in index order by the caller.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int workers = 0) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < n;
           i += static_cast<std::size_t>(workers))
        fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Sample mean and standard error of the mean, accumulated in index order.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr r;
  r.n = xs.size();
  if (r.n == 0) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(r.n);
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  if (r.n > 1)
    r.stderr_ = std::sqrt(ss / (static_cast<double>(r.n) * (static_cast<double>(r.n) - 1)));
  return r;
}

}  // namespace fbsg
