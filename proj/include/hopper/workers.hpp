// Bounded worker pool for morsel-driven scans, join probes, and stage
// scheduling. Tasks are plain functions; parallel_for slices an index
// range into fixed-size chunks pulled by whichever worker is free.

#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>
#include <vector>

namespace hopper {

class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t worker_count() const { return threads_.size(); }

    std::future<void> submit(std::function<void()> task);

    /// Runs fn(begin..end) split into chunks of at most `chunk`; blocks
    /// until all chunks complete. Safe to call from a worker thread
    /// (runs inline in that case to avoid deadlock).
    void parallel_for(std::size_t begin, std::size_t end, std::size_t chunk,
                      const std::function<void(std::size_t, std::size_t)>& fn);

private:
    void run();

    std::vector<std::thread> threads_;
    std::deque<std::packaged_task<void()>> queue_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_ = false;
    static thread_local bool inside_worker_;
};

}  // namespace hopper
