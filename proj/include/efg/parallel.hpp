#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace efg {

/// Contiguous slice [begin, end) of `count` items owned by `worker` of `workers`.
struct WorkRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline WorkRange work_range(std::size_t count, int workers, int worker) {
  const auto w = static_cast<std::size_t>(workers);
  const auto k = static_cast<std::size_t>(worker);
  return {count * k / w, count * (k + 1) / w};
}

/// Runs fn(worker, range) on `workers` threads over a fixed partition of
/// [0, count). The partition depends only on `count` and `workers`, so results
/// that are merged in worker order are reproducible. Worker 0 runs inline.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || count < 2) {
    fn(0, WorkRange{0, count});
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        fn(w, work_range(count, workers, w));
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  try {
    fn(0, work_range(count, workers, 0));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise merge of per-worker partials into parts[0]; the pairing order is
/// fixed for a given number of parts.
template <class T, class Merge>
void tree_reduce(std::vector<T>& parts, Merge&& merge) {
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      merge(parts[i], parts[i + stride]);
    }
  }
}

}  // namespace efg
