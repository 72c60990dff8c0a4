#include "quarks/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace quarks {

int default_thread_count() {
  const char* env = std::getenv("QUARKS_THREADS");
  if (env == nullptr) return 1;
  int n = std::atoi(env);
  return n > 0 ? n : 1;
}

void parallel_for(Eigen::Index count, int threads,
                  const std::function<void(Eigen::Index)>& fn) {
  if (threads <= 0) threads = default_thread_count();
  if (threads <= 1 || count <= 1) {
    for (Eigen::Index i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = static_cast<int>(std::min<Eigen::Index>(threads, count));
  Eigen::Index chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    Eigen::Index begin = w * chunk;
    Eigen::Index end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (Eigen::Index i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace quarks
