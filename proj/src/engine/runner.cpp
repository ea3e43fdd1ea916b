#include "classbot/engine/runner.hpp"

#include <spdlog/spdlog.h>

#include "classbot/core/error.hpp"

namespace classbot::engine {

EngineRunner::EngineRunner(InteractionEngine& engine, gateway::ChatGateway& gateway, Clock& clock, AuditSink& audit,
                           RunnerOptions options)
    : engine_(engine), gateway_(gateway), clock_(clock), audit_(audit), options_(std::move(options)) {}

EngineRunner::~EngineRunner() { stop(); }

void EngineRunner::start() {
    std::lock_guard lock(mu_);
    if (running_) {
        return;
    }
    stopping_ = false;
    running_ = true;
    worker_ = std::thread([this] { worker_loop(); });
    pump_ = std::thread([this] { pump_loop(); });
}

void EngineRunner::stop() {
    {
        std::lock_guard lock(mu_);
        if (!running_) {
            return;
        }
        stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
    if (pump_.joinable()) {
        pump_.join();
    }
    running_ = false;
    idle_cv_.notify_all();
}

void EngineRunner::enqueue(std::shared_ptr<Job> job) {
    {
        std::lock_guard lock(mu_);
        if (stopping_ || !running_) {
            throw Error(ErrorKind::unavailable, "bot is not running");
        }
        queue_.push_back(std::move(job));
    }
    cv_.notify_one();
}

CommandResult EngineRunner::submit(Command command, bool* queued) {
    auto job = std::make_shared<Job>();
    job->kind = Job::Kind::command;
    job->command = std::move(command);
    auto future = job->result.get_future();
    try {
        enqueue(job);
    } catch (const Error& e) {
        return CommandResult::failure(e.kind(), e.what());
    }
    if (queued != nullptr) {
        *queued = true;
    }
    if (future.wait_for(options_.command_deadline) == std::future_status::ready) {
        return future.get();
    }
    job->abandoned = true;
    return CommandResult::failure(ErrorKind::unavailable, "command deadline exceeded");
}

nlohmann::json EngineRunner::query(std::function<nlohmann::json(const InteractionEngine&)> f) {
    auto task = std::make_shared<std::packaged_task<nlohmann::json()>>(
        [this, f = std::move(f)] { return f(std::as_const(engine_)); });
    auto future = task->get_future();
    auto job = std::make_shared<Job>();
    job->kind = Job::Kind::query;
    job->query = [task] { (*task)(); };
    enqueue(std::move(job));
    if (future.wait_for(options_.command_deadline) != std::future_status::ready) {
        throw Error(ErrorKind::unavailable, "query deadline exceeded");
    }
    return future.get();
}

void EngineRunner::post_event(gateway::ChatEvent event) {
    auto job = std::make_shared<Job>();
    job->kind = Job::Kind::event;
    job->event = std::move(event);
    enqueue(std::move(job));
}

bool EngineRunner::wait_idle(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    auto idle_now = [this] {
        std::unique_lock lock(mu_);
        return queue_.empty() && !busy_ && (!options_.pending_events || options_.pending_events() == 0);
    };
    // The pump holds an event briefly between the gateway and the queue, so
    // idleness has to be seen twice in a row.
    int streak = 0;
    while (std::chrono::steady_clock::now() < deadline) {
        if (idle_now()) {
            if (++streak >= 2) {
                return true;
            }
        } else {
            streak = 0;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return false;
}

void EngineRunner::run_job(Job& job) {
    switch (job.kind) {
        case Job::Kind::query: job.query(); return;
        case Job::Kind::command: {
            if (job.abandoned) {
                audit_.append(AuditEvent{clock_.now(),
                                         job.command.actor,
                                         "command." + std::string(command_name(job.command.body)),
                                         {{"bot", engine_.bot_id()}},
                                         Outcome::error,
                                         "deadline exceeded before execution"});
                return;
            }
            job.result.set_value(engine_.execute(job.command));
            break;
        }
        case Job::Kind::event:
            try {
                engine_.on_event(job.event);
            } catch (const std::exception& e) {
                spdlog::error("event handling failed: {}", e.what());
            }
            ++events_handled_;
            break;
    }
    if (options_.on_change) {
        options_.on_change();
    }
}

void EngineRunner::worker_loop() {
    auto next_tick = std::chrono::steady_clock::now() + options_.tick_interval;
    for (;;) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock lock(mu_);
            cv_.wait_until(lock, next_tick, [this] { return stopping_ || !queue_.empty(); });
            if (!queue_.empty()) {
                job = std::move(queue_.front());
                queue_.pop_front();
                busy_ = true;
            } else if (stopping_) {
                return;
            }
        }
        if (job) {
            run_job(*job);
            std::lock_guard lock(mu_);
            busy_ = false;
        }
        if (std::chrono::steady_clock::now() >= next_tick) {
            if (engine_.tick(clock_.now()) && options_.on_change) {
                options_.on_change();
            }
            next_tick = std::chrono::steady_clock::now() + options_.tick_interval;
        }
    }
}

void EngineRunner::pump_loop() {
    for (;;) {
        auto event = gateway_.next_event();
        if (!event) {
            return;
        }
        std::lock_guard lock(mu_);
        if (stopping_) {
            // Dropped after stop(); the gateway stream is being torn down.
            return;
        }
        auto job = std::make_shared<Job>();
        job->kind = Job::Kind::event;
        job->event = std::move(*event);
        queue_.push_back(std::move(job));
        cv_.notify_one();
    }
}

}  // namespace classbot::engine
