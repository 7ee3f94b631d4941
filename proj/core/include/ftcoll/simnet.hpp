#pragma once

#include "ftcoll/failmodel.hpp"
#include "ftcoll/task.hpp"
#include "ftcoll/trace.hpp"
#include "ftcoll/transport.hpp"

#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace ftcoll
{
    struct SimConfig
    {
        std::uint64_t seed = 1;
        std::uint64_t latency_min = 1;
        std::uint64_t latency_max = 10;
        /// Each live process starts at a seeded time in [0, start_jitter].
        std::uint64_t start_jitter = 0;

        friend bool operator==(const SimConfig &, const SimConfig &) = default;
    };

    class DeadlockDetected : public Error
    {
    public:
        DeadlockDetected(std::vector<ProcessId> blocked, Trace trace);

        const std::vector<ProcessId> &blocked() const noexcept { return blocked_; }
        const Trace &trace() const noexcept { return trace_; }

    private:
        std::vector<ProcessId> blocked_;
        Trace trace_;
    };

    /// Deterministic discrete-event simulator. Every process runs the same
    /// entry coroutine against its own endpoint; a single thread resumes
    /// them in virtual-time order. Channels are FIFO with seeded latencies.
    ///
    /// Failure detection is a perfect monitor: a process p is confirmed
    /// failed towards q once p has stopped and every message p sent to q
    /// has arrived.
    class Simulator
    {
    public:
        using Entry = std::function<Task<void>(Transport &)>;

        Simulator(std::size_t n, FailureScript script, SimConfig cfg = {});
        ~Simulator();
        Simulator(const Simulator &) = delete;
        Simulator &operator=(const Simulator &) = delete;

        /// Runs every process to quiescence. Throws DeadlockDetected if some
        /// live process is still blocked when no events remain.
        Trace run(const Entry &entry);

        std::size_t size() const noexcept { return procs_.size(); }
        bool failed(ProcessId p) const { return procs_.at(p).status == Status::failed; }
        /// Set when the entry coroutine of p ended with an exception.
        const std::optional<std::string> &abort_reason(ProcessId p) const { return procs_.at(p).abort; }
        std::size_t sends(ProcessId p) const { return procs_.at(p).sent; }

    private:
        class Endpoint;
        struct WaitAwaiter;
        struct HaltAwaiter;

        enum class Status : std::uint8_t
        {
            pending,
            runnable,
            blocked,
            done,
            failed,
        };

        struct Wait
        {
            std::vector<ProcessId> candidates;
            OpId op = 0;
            PhaseSet phases;
        };

        struct Proc
        {
            Status status = Status::pending;
            bool started = false;
            std::unique_ptr<Endpoint> endpoint;
            Task<void> task;
            std::size_t sent = 0;
            std::deque<Envelope> mailbox;
            std::optional<Wait> wait;
            std::optional<RecvResult> wait_result;
            std::coroutine_handle<> waiter;
            std::optional<std::string> abort;
        };

        struct Event
        {
            std::uint64_t time = 0;
            std::uint64_t order = 0;
            std::optional<ProcessId> start;
            std::optional<Envelope> arrival;
        };

        struct Later
        {
            bool operator()(const Event &a, const Event &b) const noexcept
            {
                return a.time != b.time ? a.time > b.time : a.order > b.order;
            }
        };

        void record(EventKind kind, ProcessId actor, std::optional<ProcessId> peer, OpId op,
                    std::optional<Phase> phase, std::string note);
        bool do_send(ProcessId from, Envelope env);
        bool try_complete_wait(ProcessId p);
        bool confirmed(ProcessId observer, ProcessId p) const;
        void resume(ProcessId p, const Entry &entry);
        void mark_failed(ProcessId p, std::string note);
        void reevaluate(ProcessId p);
        void reevaluate_all();
        std::uint64_t draw(std::uint64_t lo, std::uint64_t hi);

        FailureScript script_;
        SimConfig cfg_;
        std::mt19937_64 rng_;
        std::vector<Proc> procs_;
        std::vector<std::vector<std::uint64_t>> inflight_;
        std::vector<std::vector<std::uint64_t>> last_arrival_;
        std::priority_queue<Event, std::vector<Event>, Later> events_;
        std::deque<ProcessId> ready_;
        std::uint64_t now_ = 0;
        std::uint64_t order_ = 0;
        Trace trace_;
        bool ran_ = false;
    };
} // namespace ftcoll
