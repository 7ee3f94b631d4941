#pragma once

#include "ftcoll/failmodel.hpp"
#include "ftcoll/failure_info.hpp"
#include "ftcoll/task.hpp"
#include "ftcoll/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ftcoll
{
    struct Payload
    {
        Value value;
        FailureInfo failinfo;

        friend bool operator==(const Payload &, const Payload &) = default;
    };

    struct Envelope
    {
        OpId op_id = 0;
        ProcessId from = 0;
        ProcessId to = 0;
        Phase phase = Phase::up_correction;
        Payload payload;

        friend bool operator==(const Envelope &, const Envelope &) = default;
    };

    /// Either a message from `sender` or the confirmation that `sender` failed.
    struct RecvResult
    {
        ProcessId sender = 0;
        std::optional<Envelope> message;

        bool sender_failed() const noexcept { return !message.has_value(); }
    };

    /// Point-to-point contract the collectives are written against.
    ///
    /// Sends never report a failed destination. A receive blocks until a
    /// matching envelope (sender, op, phase) is available or the sender is
    /// confirmed failed by the monitor; queued messages always win over the
    /// failure confirmation.
    class Transport
    {
    public:
        virtual ~Transport() = default;

        virtual ProcessId self() const = 0;
        virtual std::size_t size() const = 0;

        /// Does not complete if this process is scripted to fail at this send.
        virtual Task<void> send(Envelope env) = 0;
        virtual Task<RecvResult> recv_from(ProcessId sender, OpId op, PhaseSet phases) = 0;
        /// Earliest matching message from any candidate, else a confirmed
        /// failed candidate (in the given order). Candidates must be non-empty.
        virtual Task<RecvResult> recv_any(std::vector<ProcessId> candidates, OpId op, PhaseSet phases) = 0;

        virtual FailureMonitor &monitor() = 0;

        virtual void record_init(OpId op, std::string note) = 0;
        virtual void record_deliver(OpId op, std::string note) = 0;
    };

    std::string envelope_note(const Payload &p);
} // namespace ftcoll
