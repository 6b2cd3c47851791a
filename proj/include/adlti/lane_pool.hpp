#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace adlti {

// Persistent worker lanes for per-frame fan-out. Each call partitions [0, n)
// into contiguous chunks, one per lane; workers write results into caller
// owned slots, so the combination order is fixed by the caller and results
// are identical for any lane count.
class LanePool {
 public:
  explicit LanePool(unsigned lanes);
  ~LanePool();

  LanePool(const LanePool&) = delete;
  LanePool& operator=(const LanePool&) = delete;

  unsigned lanes() const { return lanes_; }

  // fn(i) is invoked exactly once for every i in [0, n).
  void run(size_t n, const std::function<void(size_t)>& fn);

 private:
  void worker(unsigned lane);

  unsigned lanes_;
  std::vector<std::thread> threads_;
  std::atomic<uint64_t> generation_{0};
  std::atomic<uint64_t> done_{0};
  std::atomic<bool> stop_{false};
  size_t task_n_ = 0;
  const std::function<void(size_t)>* task_fn_ = nullptr;
};

}  // namespace adlti
