#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nanotip {

/// Persistent workers for fork-join loops over disjoint index ranges. The
/// calling thread runs the first chunk itself, so a pool of size 1 spawns
/// nothing.
class WorkerPool {
 public:
  explicit WorkerPool(int threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  /// Splits [begin, end) into size() contiguous chunks and blocks until all
  /// of them have run.
  void parallel_for(int begin, int end, const std::function<void(int, int)>& body);

 private:
  void worker_loop(int id);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int, int)>* body_ = nullptr;
  int begin_ = 0, end_ = 0;
  unsigned long generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace nanotip
