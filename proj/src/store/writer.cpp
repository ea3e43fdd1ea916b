#include "classbot/store/writer.hpp"

namespace classbot::store {

WriterQueue::WriterQueue() : thread_([this] { loop(); }) {}

WriterQueue::~WriterQueue() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    thread_.join();
}

void WriterQueue::post(std::function<void()> job) {
    {
        std::lock_guard lock(mu_);
        jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
}

void WriterQueue::drain() {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return jobs_.empty() && !busy_; });
}

void WriterQueue::loop() {
    std::unique_lock lock(mu_);
    for (;;) {
        cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) {
            return;
        }
        auto job = std::move(jobs_.front());
        jobs_.pop_front();
        busy_ = true;
        lock.unlock();
        try {
            job();
        } catch (...) {
            // Jobs report their own failures; one bad write must not stop the queue.
        }
        lock.lock();
        busy_ = false;
        if (jobs_.empty()) {
            done_cv_.notify_all();
        }
    }
}

}  // namespace classbot::store
