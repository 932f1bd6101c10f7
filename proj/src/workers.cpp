#include "hopper/workers.hpp"

#include <algorithm>

namespace hopper {

thread_local bool WorkerPool::inside_worker_ = false;

WorkerPool::WorkerPool(std::size_t workers) {
    workers = std::max<std::size_t>(1, workers);
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i)
        threads_.emplace_back([this] { run(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
}

std::future<void> WorkerPool::submit(std::function<void()> task) {
    std::packaged_task<void()> pt(std::move(task));
    std::future<void> fut = pt.get_future();
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(pt));
    }
    cv_.notify_one();
    return fut;
}

void WorkerPool::parallel_for(std::size_t begin, std::size_t end, std::size_t chunk,
                              const std::function<void(std::size_t, std::size_t)>& fn) {
    if (begin >= end) return;
    chunk = std::max<std::size_t>(1, chunk);
    if (inside_worker_ || end - begin <= chunk || worker_count() == 1) {
        // nested parallelism would deadlock on the shared queue; run inline
        for (std::size_t lo = begin; lo < end; lo += chunk)
            fn(lo, std::min(end, lo + chunk));
        return;
    }
    std::vector<std::future<void>> futs;
    for (std::size_t lo = begin; lo < end; lo += chunk) {
        const std::size_t hi = std::min(end, lo + chunk);
        futs.push_back(submit([=, &fn] { fn(lo, hi); }));
    }
    for (auto& f : futs) f.get();
}

void WorkerPool::run() {
    inside_worker_ = true;
    for (;;) {
        std::packaged_task<void()> task;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (stop_ && queue_.empty()) return;
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
    }
}

}  // namespace hopper
