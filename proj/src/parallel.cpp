#include "dynrf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dynrf {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DYNRF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

void parallel_blocks(int n_blocks, int threads, const std::function<void(int)>& fn) {
  threads = std::min(resolve_threads(threads), n_blocks);
  if (n_blocks <= 0) return;
  if (threads <= 1) {
    for (int b = 0; b < n_blocks; ++b) fn(b);
    return;
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      int b = next.fetch_add(1);
      if (b >= n_blocks || failed.load()) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dynrf
