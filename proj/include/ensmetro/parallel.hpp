#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace ensmetro {

/// Splits [0, n) into at most `jobs` contiguous chunks and runs body(begin, end)
/// on each. Callers write results by index, so output order never depends on
/// scheduling.
template <typename Body>
void parallel_ranges(int n, int jobs, Body&& body) {
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    if (n > 0) body(0, n);
    return;
  }
  const int chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin < end) pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

}  // namespace ensmetro
