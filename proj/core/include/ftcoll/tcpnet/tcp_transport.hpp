#pragma once

#include "ftcoll/tcpnet/frame.hpp"
#include "ftcoll/tcpnet/registry.hpp"
#include "ftcoll/trace.hpp"
#include "ftcoll/transport.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace ftcoll::tcp
{
    using Millis = std::chrono::milliseconds;

    /// Thrown out of send() by the default crash handler when the process
    /// reaches its scripted failure point.
    class ProcessCrashed : public Error
    {
    public:
        ProcessCrashed() : Error("process crashed as scripted") {}
    };

    struct TcpConfig
    {
        Millis probe_timeout{500};
        std::uint32_t probe_attempts = 3;
        /// How long a writer keeps trying to connect before dropping its
        /// queue; unset means probe_timeout * probe_attempts.
        std::optional<Millis> connect_budget;
        /// Mirrors FailureScript's after_sends point for this process.
        std::optional<std::uint64_t> fail_after_sends;
        /// Called after the fail event is recorded. Must not return normally;
        /// unset means flush(), crash() and throw ProcessCrashed.
        std::function<void()> on_crash;
    };

    /// Binds and listens on `a` (port 0 picks a free port). Returns the fd.
    int bind_listener(const Address &a);
    std::uint16_t listening_port(int fd);

    /// One connection per attempt: connect, send a probe, wait for the ack.
    /// Each attempt takes up to `timeout`, so a dead peer costs about
    /// timeout * attempts.
    bool probe_address(const Address &a, ProcessId from, ProcessId to, Millis timeout, std::uint32_t attempts);

    /// Transport over TCP for one process of a deployment.
    ///
    /// Outbound frames go through one lazily connected writer per peer.
    /// Inbound connections are served by reader threads that fill the
    /// mailbox and answer probes. A receive waits in probe_timeout slices;
    /// when a slice passes without a match, or a candidate's connection
    /// closes, the candidate is probed. A peer is confirmed failed once its
    /// probes go unanswered and none of its inbound connections remains
    /// open, so everything it sent is drained first.
    class TcpTransport final : public Transport, private FailureMonitor
    {
    public:
        /// `listen_fd` comes from bind_listener; -1 binds registry.at(self).
        TcpTransport(ProcessId self, Registry registry, TcpConfig cfg = {}, int listen_fd = -1);
        ~TcpTransport() override;

        TcpTransport(const TcpTransport &) = delete;
        TcpTransport &operator=(const TcpTransport &) = delete;

        ProcessId self() const override { return self_; }
        std::size_t size() const override { return registry_.size(); }

        Task<void> send(Envelope env) override;
        Task<RecvResult> recv_from(ProcessId sender, OpId op, PhaseSet phases) override;
        Task<RecvResult> recv_any(std::vector<ProcessId> candidates, OpId op, PhaseSet phases) override;

        FailureMonitor &monitor() override { return *this; }

        void record_init(OpId op, std::string note) override;
        void record_deliver(OpId op, std::string note) override;
        /// Records a fail event and stops recording.
        void record_fail(std::string note);

        bool probe_liveness(ProcessId peer);
        bool probe_liveness(ProcessId peer, Millis timeout, std::uint32_t attempts);

        /// Blocks until every queued outbound frame is written or dropped.
        void flush();
        /// Stops answering probes and closes every socket, as if killed.
        void crash();

        /// Local events, times from the monotonic clock in nanoseconds.
        Trace trace() const;
        std::uint64_t sends() const noexcept { return sends_.load(); }

    private:
        struct Outbox;

        bool confirm_failed(ProcessId p) override;
        RecvResult wait_for(const std::vector<ProcessId> &candidates, OpId op, PhaseSet phases);
        void record(EventKind kind, std::optional<ProcessId> peer, OpId op, std::optional<Phase> phase,
                    std::string note);
        void listen_loop();
        void read_loop(int fd);
        void write_loop(ProcessId peer, Outbox &box);
        void deliver_frame(Frame frame, std::optional<ProcessId> &conn_peer);
        void connection_closed(std::optional<ProcessId> conn_peer);
        Outbox &outbox(ProcessId peer);

        const ProcessId self_;
        const Registry registry_;
        const TcpConfig cfg_;
        int listen_fd_ = -1;

        std::atomic<bool> stop_{false};
        std::atomic<bool> dead_{false};
        std::atomic<std::uint64_t> sends_{0};

        mutable std::mutex mu_;
        std::condition_variable cv_;
        std::deque<Envelope> mailbox_;
        std::vector<bool> confirmed_;
        std::vector<bool> suspected_;
        std::vector<std::uint32_t> open_inbound_;
        std::vector<std::thread> readers_;

        std::mutex out_mu_;
        std::condition_variable out_cv_;
        std::vector<std::unique_ptr<Outbox>> outboxes_;

        mutable std::mutex trace_mu_;
        bool recording_ = true;
        Trace trace_;

        std::thread listener_;
    };
} // namespace ftcoll::tcp
