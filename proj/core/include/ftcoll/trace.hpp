#pragma once

#include "ftcoll/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ftcoll
{
    enum class EventKind : std::uint8_t
    {
        send,
        recv,
        fail,
        init,
        deliver,
        confirm_failed,
    };

    std::string_view to_string(EventKind k) noexcept;
    std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;

    /// One record of a run. Notes carry space-separated key=value fields:
    ///   send/recv:  v=<value> fi=<failure info>
    ///   init:       <collective> [root=<pid>]
    ///   deliver:    <collective> [v=<value>]
    ///   fail:       pre | after_sends=<s> | abort=<reason>
    struct TraceEvent
    {
        std::uint64_t seq = 0;
        std::uint64_t time = 0;
        EventKind kind = EventKind::send;
        ProcessId actor = 0;
        std::optional<ProcessId> peer;
        OpId op_id = 0;
        std::optional<Phase> phase;
        std::string note;

        friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
    };

    class MalformedTrace : public Error
    {
    public:
        using Error::Error;
    };

    struct Trace
    {
        std::vector<TraceEvent> events;

        /// One line per event, fixed key order:
        /// seq=.. time=.. kind=.. actor=.. peer=..|- op=.. phase=..|- note=...
        std::string to_text() const;
        static Trace parse(std::string_view text);

        /// FNV-1a over to_text().
        std::uint64_t digest() const;

        friend bool operator==(const Trace &, const Trace &) = default;
    };

    std::string format_event(const TraceEvent &e);
    TraceEvent parse_event(std::string_view line);

    /// Value of `key=` inside a note, or the bare first word when key is empty.
    std::optional<std::string_view> note_field(std::string_view note, std::string_view key);
    std::string_view note_head(std::string_view note);

    /// Fail-event note for a process that stopped on an exception.
    std::string abort_note(std::string_view reason);

    /// Interleaves per-process traces by time (ties by actor, then original
    /// seq), rebases time to the earliest event and renumbers seq.
    Trace merge_by_time(const std::vector<Trace> &parts);
} // namespace ftcoll
