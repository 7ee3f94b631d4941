#include "ftcoll/types.hpp"

#include <charconv>

namespace ftcoll
{
    std::string_view to_string(Phase p) noexcept
    {
        switch (p)
        {
        case Phase::up_correction:
            return "up_correction";
        case Phase::tree:
            return "tree";
        case Phase::broadcast_tree:
            return "broadcast_tree";
        case Phase::broadcast_correction:
            return "broadcast_correction";
        }
        return "?";
    }

    std::optional<Phase> parse_phase(std::string_view s) noexcept
    {
        for (auto p : {Phase::up_correction, Phase::tree, Phase::broadcast_tree, Phase::broadcast_correction})
        {
            if (to_string(p) == s)
            {
                return p;
            }
        }
        return std::nullopt;
    }

    std::string_view to_string(Collective c) noexcept
    {
        switch (c)
        {
        case Collective::reduce:
            return "reduce";
        case Collective::broadcast:
            return "broadcast";
        case Collective::allreduce:
            return "allreduce";
        }
        return "?";
    }

    std::optional<Collective> parse_collective(std::string_view s) noexcept
    {
        for (auto c : {Collective::reduce, Collective::broadcast, Collective::allreduce})
        {
            if (to_string(c) == s)
            {
                return c;
            }
        }
        return std::nullopt;
    }

    // Comma-separated elements, e.g. "20" or "1,0,3".
    std::string format_value(const Value &v)
    {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (i != 0)
            {
                out += ',';
            }
            out += std::to_string(v[i]);
        }
        return out;
    }

    std::optional<Value> parse_value(std::string_view s)
    {
        Value out;
        if (s.empty())
        {
            return out;
        }
        std::size_t pos = 0;
        while (pos <= s.size())
        {
            auto comma = s.find(',', pos);
            auto end = comma == std::string_view::npos ? s.size() : comma;
            std::int64_t x = 0;
            auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + end, x);
            if (ec != std::errc{} || ptr != s.data() + end)
            {
                return std::nullopt;
            }
            out.push_back(x);
            if (comma == std::string_view::npos)
            {
                break;
            }
            pos = comma + 1;
        }
        return out;
    }
} // namespace ftcoll
