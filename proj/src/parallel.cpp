#include "pmd/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <thread>
#include <vector>

namespace pmd {

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  const std::function<void()>& poll) {
  if (count == 0) return;
  const int workers = std::min<std::size_t>(resolve_threads(threads), count);
  if (workers <= 1) {
    fn(0, count);
    if (poll) poll();
    return;
  }
  // Chunks small enough to balance uneven work items.
  const std::size_t chunk =
      std::max<std::size_t>(1, count / (static_cast<std::size_t>(workers) * 16));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= count) break;
        fn(begin, std::min(begin + chunk, count));
      }
    });
  }
  if (poll) {
    int ticks = 0;
    while (next.load() < count) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      // report progress roughly every quarter second
      if (++ticks % 12 == 0 && next.load() < count) poll();
    }
  }
  for (auto& t : pool) t.join();
  if (poll) poll();
}

}  // namespace pmd
