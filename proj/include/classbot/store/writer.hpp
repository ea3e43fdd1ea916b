#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>

namespace classbot::store {

/// A single background thread that runs file writes in submission order.
class WriterQueue {
public:
    WriterQueue();
    ~WriterQueue();

    WriterQueue(const WriterQueue&) = delete;
    WriterQueue& operator=(const WriterQueue&) = delete;

    void post(std::function<void()> job);

    /// Runs job on the writer thread and waits for it; rethrows its error.
    template <class F>
    auto call(F job) -> decltype(job()) {
        using R = decltype(job());
        auto task = std::make_shared<std::packaged_task<R()>>(std::move(job));
        auto future = task->get_future();
        post([task] { (*task)(); });
        return future.get();
    }

    /// Blocks until every job posted so far has run.
    void drain();

private:
    void loop();

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::deque<std::function<void()>> jobs_;
    bool busy_ = false;
    bool stopping_ = false;
    std::thread thread_;
};

}  // namespace classbot::store
