#include "nrr/parallel.h"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace nrr {

namespace {
std::atomic<int> g_thread_cap{0};
}

int thread_count() {
  int cap = g_thread_cap.load();
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  return cap > 0 ? std::min(cap, hw) : hw;
}

void set_thread_cap(int n) { g_thread_cap.store(n); }

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t num_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers =
      static_cast<int>(std::min<std::size_t>(thread_count(), num_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c)
      fn(c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= num_chunks) break;
      fn(c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t chunk = std::max<std::size_t>(1, n / (4 * thread_count()));
  parallel_chunks(n, chunk, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace nrr
