#pragma once

#include <Eigen/Core>
#include <functional>

namespace quarks {

/// Thread count from the QUARKS_THREADS environment variable, 1 if unset.
int default_thread_count();

/// Runs fn(i) for i in [0, count). With more than one thread the index range
/// is split into contiguous chunks; fn must write to disjoint state per index
/// so results do not depend on the schedule.
void parallel_for(Eigen::Index count, int threads,
                  const std::function<void(Eigen::Index)>& fn);

}  // namespace quarks
