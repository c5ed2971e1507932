#pragma once

#include <thread>
#include <vector>

namespace mmfp {

// Runs fn(worker_id) on n workers and joins. Callers own determinism:
// workers must write to disjoint state, reduced afterwards in fixed order.
template <class Fn>
void run_workers(int n, Fn&& fn) {
  if (n <= 1) {
    fn(0);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) threads.emplace_back([&fn, w]() { fn(w); });
  for (auto& t : threads) t.join();
}

}  // namespace mmfp
