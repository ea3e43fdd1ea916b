#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>

#include "classbot/engine/engine.hpp"

namespace classbot::engine {

struct RunnerOptions {
    /// How long submit() waits for a command before giving up on it.
    std::chrono::milliseconds command_deadline{2000};
    /// Wall-clock period of engine.tick().
    std::chrono::milliseconds tick_interval{200};
    /// Events still buffered in the gateway; lets wait_idle() see them.
    std::function<std::size_t()> pending_events;
    /// Called on the engine thread after every command or event.
    std::function<void()> on_change;
};

/// Owns the single thread that drives an InteractionEngine. Commands,
/// platform events and queries are serialized through one queue; a second
/// thread pumps gateway.next_event() into it.
///
/// Call gateway end-of-stream before stop() so the pump can exit.
class EngineRunner {
public:
    EngineRunner(InteractionEngine& engine, gateway::ChatGateway& gateway, Clock& clock, AuditSink& audit,
                 RunnerOptions options = {});
    ~EngineRunner();

    EngineRunner(const EngineRunner&) = delete;
    EngineRunner& operator=(const EngineRunner&) = delete;

    void start();
    void stop();
    bool running() const { return running_; }

    /// Runs a command on the engine thread. Past the deadline the command is
    /// abandoned: if it has not started it never runs, and the result is an
    /// unavailable failure either way. `queued` reports whether the command
    /// reached the queue; a queued command is always audited by the engine
    /// thread.
    CommandResult submit(Command command, bool* queued = nullptr);

    /// Runs f on the engine thread and returns its value. Exceptions thrown
    /// by f propagate. Throws Error{unavailable} when stopped or past the
    /// deadline.
    nlohmann::json query(std::function<nlohmann::json(const InteractionEngine&)> f);

    /// Queues an event directly, bypassing the gateway stream.
    void post_event(gateway::ChatEvent event);

    /// True once the queue, the gateway buffer and the worker are all idle.
    bool wait_idle(std::chrono::milliseconds timeout);

    std::uint64_t events_handled() const { return events_handled_; }

private:
    struct Job {
        enum class Kind { command, event, query } kind;
        Command command;
        gateway::ChatEvent event;
        std::function<void()> query;
        std::promise<CommandResult> result;
        std::atomic<bool> abandoned{false};
    };

    void worker_loop();
    void pump_loop();
    void run_job(Job& job);
    void enqueue(std::shared_ptr<Job> job);

    InteractionEngine& engine_;
    gateway::ChatGateway& gateway_;
    Clock& clock_;
    AuditSink& audit_;
    RunnerOptions options_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::shared_ptr<Job>> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> events_handled_{0};
    std::thread worker_;
    std::thread pump_;
};

}  // namespace classbot::engine
