#pragma once

#include "ftcoll/types.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <variant>

namespace ftcoll
{
    /// The process is dead before the operation starts and never calls init.
    struct Preoperational
    {
        friend bool operator==(const Preoperational &, const Preoperational &) = default;
    };

    /// The process completes `sends` protocol sends and stops at the next one.
    struct AfterSends
    {
        std::size_t sends = 0;
        friend bool operator==(const AfterSends &, const AfterSends &) = default;
    };

    using FailurePoint = std::variant<Preoperational, AfterSends>;

    /// Per-process crash schedule. Unlisted processes never fail.
    class FailureScript
    {
    public:
        FailureScript() = default;

        FailureScript &fail_pre(ProcessId p);
        FailureScript &fail_after_sends(ProcessId p, std::size_t sends);

        std::optional<FailurePoint> point(ProcessId p) const;
        bool is_preoperational(ProcessId p) const;
        std::size_t size() const noexcept { return entries_.size(); }
        bool empty() const noexcept { return entries_.empty(); }
        const std::map<ProcessId, FailurePoint> &entries() const noexcept { return entries_; }

        friend bool operator==(const FailureScript &, const FailureScript &) = default;

    private:
        std::map<ProcessId, FailurePoint> entries_;
    };

    /// True iff p is dead at or before its (sent_so_far+1)-th send.
    bool fails_before_sending(const FailureScript &script, ProcessId p, std::size_t sent_so_far);

    /// Liveness confirmation queried by a blocked receiver. Implementations
    /// never confirm a live process and never revoke a confirmation.
    class FailureMonitor
    {
    public:
        virtual ~FailureMonitor() = default;
        virtual bool confirm_failed(ProcessId p) = 0;
    };
} // namespace ftcoll
