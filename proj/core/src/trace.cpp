#include "ftcoll/trace.hpp"

#include <algorithm>
#include <charconv>
#include <tuple>

namespace ftcoll
{
    std::string_view to_string(EventKind k) noexcept
    {
        switch (k)
        {
        case EventKind::send:
            return "send";
        case EventKind::recv:
            return "recv";
        case EventKind::fail:
            return "fail";
        case EventKind::init:
            return "init";
        case EventKind::deliver:
            return "deliver";
        case EventKind::confirm_failed:
            return "confirm_failed";
        }
        return "?";
    }

    std::optional<EventKind> parse_event_kind(std::string_view s) noexcept
    {
        for (auto k : {EventKind::send, EventKind::recv, EventKind::fail, EventKind::init, EventKind::deliver,
                       EventKind::confirm_failed})
        {
            if (to_string(k) == s)
            {
                return k;
            }
        }
        return std::nullopt;
    }

    std::string format_event(const TraceEvent &e)
    {
        std::string out;
        out.reserve(96 + e.note.size());
        out += "seq=";
        out += std::to_string(e.seq);
        out += " time=";
        out += std::to_string(e.time);
        out += " kind=";
        out += to_string(e.kind);
        out += " actor=";
        out += std::to_string(e.actor);
        out += " peer=";
        out += e.peer ? std::to_string(*e.peer) : "-";
        out += " op=";
        out += std::to_string(e.op_id);
        out += " phase=";
        out += e.phase ? std::string(to_string(*e.phase)) : "-";
        out += " note=";
        out += e.note;
        return out;
    }

    namespace
    {
        std::string_view expect_field(std::string_view &rest, std::string_view key, bool last = false)
        {
            if (rest.substr(0, key.size()) != key || rest.size() <= key.size() || rest[key.size()] != '=')
            {
                throw MalformedTrace("expected field '" + std::string(key) + "'");
            }
            rest.remove_prefix(key.size() + 1);
            if (last)
            {
                auto v = rest;
                rest = {};
                return v;
            }
            auto sp = rest.find(' ');
            if (sp == std::string_view::npos)
            {
                throw MalformedTrace("truncated event after '" + std::string(key) + "'");
            }
            auto v = rest.substr(0, sp);
            rest.remove_prefix(sp + 1);
            return v;
        }

        template <typename T>
        T to_number(std::string_view s, std::string_view what)
        {
            T x{};
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
            if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
            {
                throw MalformedTrace("bad " + std::string(what) + " '" + std::string(s) + "'");
            }
            return x;
        }
    } // namespace

    TraceEvent parse_event(std::string_view line)
    {
        TraceEvent e;
        auto rest = line;
        e.seq = to_number<std::uint64_t>(expect_field(rest, "seq"), "seq");
        e.time = to_number<std::uint64_t>(expect_field(rest, "time"), "time");
        auto kind = parse_event_kind(expect_field(rest, "kind"));
        if (!kind)
        {
            throw MalformedTrace("unknown event kind");
        }
        e.kind = *kind;
        e.actor = to_number<ProcessId>(expect_field(rest, "actor"), "actor");
        auto peer = expect_field(rest, "peer");
        if (peer != "-")
        {
            e.peer = to_number<ProcessId>(peer, "peer");
        }
        e.op_id = to_number<OpId>(expect_field(rest, "op"), "op");
        auto phase = expect_field(rest, "phase");
        if (phase != "-")
        {
            e.phase = parse_phase(phase);
            if (!e.phase)
            {
                throw MalformedTrace("unknown phase '" + std::string(phase) + "'");
            }
        }
        e.note = std::string(expect_field(rest, "note", true));
        return e;
    }

    std::string Trace::to_text() const
    {
        std::string out;
        for (const auto &e : events)
        {
            out += format_event(e);
            out += '\n';
        }
        return out;
    }

    Trace Trace::parse(std::string_view text)
    {
        Trace t;
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos < text.size())
        {
            auto nl = text.find('\n', pos);
            auto end = nl == std::string_view::npos ? text.size() : nl;
            auto line = text.substr(pos, end - pos);
            ++line_no;
            pos = end + 1;
            if (line.empty())
            {
                continue;
            }
            try
            {
                t.events.push_back(parse_event(line));
            }
            catch (const MalformedTrace &e)
            {
                throw MalformedTrace("line " + std::to_string(line_no) + ": " + e.what());
            }
            if (t.events.size() > 1 && t.events.back().seq <= t.events[t.events.size() - 2].seq)
            {
                throw MalformedTrace("line " + std::to_string(line_no) + ": seq not increasing");
            }
        }
        return t;
    }

    std::uint64_t Trace::digest() const
    {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : to_text())
        {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    std::string_view note_head(std::string_view note)
    {
        auto sp = note.find(' ');
        return note.substr(0, sp);
    }

    std::optional<std::string_view> note_field(std::string_view note, std::string_view key)
    {
        std::size_t pos = 0;
        while (pos < note.size())
        {
            auto sp = note.find(' ', pos);
            auto end = sp == std::string_view::npos ? note.size() : sp;
            auto tok = note.substr(pos, end - pos);
            if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=')
            {
                return tok.substr(key.size() + 1);
            }
            if (sp == std::string_view::npos)
            {
                break;
            }
            pos = sp + 1;
        }
        return std::nullopt;
    }

    std::string abort_note(std::string_view reason)
    {
        std::string out(reason);
        std::replace(out.begin(), out.end(), ' ', '_');
        std::replace(out.begin(), out.end(), '\n', '_');
        return "abort=" + out;
    }

    Trace merge_by_time(const std::vector<Trace> &parts)
    {
        Trace out;
        for (const auto &t : parts)
        {
            out.events.insert(out.events.end(), t.events.begin(), t.events.end());
        }
        std::stable_sort(out.events.begin(), out.events.end(), [](const TraceEvent &a, const TraceEvent &b) {
            return std::tie(a.time, a.actor, a.seq) < std::tie(b.time, b.actor, b.seq);
        });
        const auto base = out.events.empty() ? 0 : out.events.front().time;
        for (std::size_t i = 0; i < out.events.size(); ++i)
        {
            out.events[i].seq = i;
            out.events[i].time -= base;
        }
        return out;
    }
} // namespace ftcoll
