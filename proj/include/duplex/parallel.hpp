#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace duplex {

// Persistent pool of worker threads executing indexed task batches.
//
// Tasks are pre-assigned deterministically: task i runs on worker (i % width),
// and each worker executes its tasks in ascending index order. Results must be
// written to per-task slots, which makes every batch bitwise reproducible for
// any pool width. The calling thread participates as worker 0, so width 1 runs
// everything inline with zero synchronization.
class WorkerPool {
 public:
  explicit WorkerPool(int width) : width_(width < 1 ? 1 : width) {
    for (int w = 1; w < width_; ++w)
      threads_.emplace_back([this, w] { worker_loop(w); });
  }

  ~WorkerPool() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_start_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int width() const { return width_; }

  // Runs tasks 0..n-1; fn(task, worker). Blocks until every task finished.
  void run(int n, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    if (width_ == 1 || n == 1) {
      for (int i = 0; i < n; ++i) fn(i, 0);
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mu_);
      fn_ = &fn;
      n_tasks_ = n;
      pending_ = 0;
      for (int w = 1; w < width_; ++w)
        if (w < n) ++pending_;
      ++generation_;
    }
    cv_start_.notify_all();
    for (int i = 0; i < n; i += width_) fn(i, 0);  // worker 0 = caller
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

  // Splits [0, total) into `blocks` near-equal contiguous ranges and runs
  // fn(block, begin, end) as a task batch. Block count is the caller's choice
  // and is independent of pool width, which keeps any per-block reduction
  // order reproducible.
  void run_blocks(int total, int blocks, const std::function<void(int, int, int)>& fn) {
    if (total <= 0 || blocks <= 0) return;
    if (blocks > total) blocks = total;
    const int base = total / blocks, extra = total % blocks;
    run(blocks, [&](int b, int) {
      const int begin = b * base + (b < extra ? b : extra);
      const int end = begin + base + (b < extra ? 1 : 0);
      fn(b, begin, end);
    });
  }

 private:
  void worker_loop(int w) {
    long long seen = 0;
    for (;;) {
      const std::function<void(int, int)>* fn = nullptr;
      int n = 0;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_start_.wait(lock, [&] { return stop_ || generation_ > seen; });
        if (stop_) return;
        seen = generation_;
        if (w >= n_tasks_) continue;  // no tasks for this worker this round
        fn = fn_;
        n = n_tasks_;
      }
      for (int i = w; i < n; i += width_) (*fn)(i, w);
      {
        std::unique_lock<std::mutex> lock(mu_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  int width_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int, int)>* fn_ = nullptr;
  int n_tasks_ = 0;
  int pending_ = 0;
  long long generation_ = 0;
  bool stop_ = false;
};

}  // namespace duplex
