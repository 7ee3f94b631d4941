#include "ftcoll/failure_info.hpp"

#include <algorithm>
#include <charconv>
#include <iterator>

namespace ftcoll
{
    namespace
    {
        template <class... Ts>
        struct Overloaded : Ts...
        {
            using Ts::operator()...;
        };
        template <class... Ts>
        Overloaded(Ts...) -> Overloaded<Ts...>;

        template <typename T>
        std::optional<T> parse_uint(std::string_view s)
        {
            T x{};
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
            if (ec != std::errc{} || ptr != s.data() + s.size())
            {
                return std::nullopt;
            }
            return x;
        }
    } // namespace

    std::string_view to_string(Scheme s) noexcept
    {
        switch (s)
        {
        case Scheme::list:
            return "list";
        case Scheme::count:
            return "count";
        case Scheme::bit:
            return "bit";
        }
        return "?";
    }

    std::optional<Scheme> parse_scheme(std::string_view s) noexcept
    {
        for (auto sc : {Scheme::list, Scheme::count, Scheme::bit})
        {
            if (to_string(sc) == s)
            {
                return sc;
            }
        }
        return std::nullopt;
    }

    FailureInfo::FailureInfo(Scheme s)
    {
        switch (s)
        {
        case Scheme::list:
            repr_ = FailedList{};
            break;
        case Scheme::count:
            repr_ = FailedCount{};
            break;
        case Scheme::bit:
            repr_ = FailedBit{};
            break;
        }
    }

    void FailureInfo::record_partner_failure(ProcessId p)
    {
        std::visit(Overloaded{
                       [&](FailedList &l) {
                           auto it = std::lower_bound(l.ids.begin(), l.ids.end(), p);
                           if (it == l.ids.end() || *it != p)
                           {
                               l.ids.insert(it, p);
                           }
                       },
                       [](FailedCount &c) { ++c.count; },
                       [](FailedBit &) {},
                   },
                   repr_);
    }

    void FailureInfo::record_child_failure(ProcessId c)
    {
        std::visit(Overloaded{
                       [&](FailedList &l) {
                           auto it = std::lower_bound(l.ids.begin(), l.ids.end(), c);
                           if (it == l.ids.end() || *it != c)
                           {
                               l.ids.insert(it, c);
                           }
                       },
                       [](FailedCount &fc) {
                           ++fc.count;
                           fc.subtree_failed = true;
                       },
                       [](FailedBit &b) { b.subtree_failed = true; },
                   },
                   repr_);
    }

    bool FailureInfo::indicates_subtree_failure(const std::function<bool(ProcessId)> &in_subtree) const
    {
        return std::visit(Overloaded{
                              [&](const FailedList &l) { return std::any_of(l.ids.begin(), l.ids.end(), in_subtree); },
                              [](const FailedCount &c) { return c.subtree_failed; },
                              [](const FailedBit &b) { return b.subtree_failed; },
                          },
                          repr_);
    }

    FailureInfo merge_failure_info(const FailureInfo &acc, const FailureInfo &incoming)
    {
        if (acc.scheme() != incoming.scheme())
        {
            throw SchemeMismatch();
        }
        switch (acc.scheme())
        {
        case Scheme::list: {
            const auto &a = std::get<FailedList>(acc.repr()).ids;
            const auto &b = std::get<FailedList>(incoming.repr()).ids;
            FailedList out;
            std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.ids));
            return FailureInfo(out);
        }
        case Scheme::count: {
            const auto &a = std::get<FailedCount>(acc.repr());
            const auto &b = std::get<FailedCount>(incoming.repr());
            return FailureInfo(FailedCount{a.count + b.count, a.subtree_failed || b.subtree_failed});
        }
        case Scheme::bit: {
            const auto &a = std::get<FailedBit>(acc.repr());
            const auto &b = std::get<FailedBit>(incoming.repr());
            return FailureInfo(FailedBit{a.subtree_failed || b.subtree_failed});
        }
        }
        throw SchemeMismatch();
    }

    std::string format_failure_info(const FailureInfo &info)
    {
        return std::visit(Overloaded{
                              [](const FailedList &l) {
                                  std::string out = "list:";
                                  for (std::size_t i = 0; i < l.ids.size(); ++i)
                                  {
                                      if (i != 0)
                                      {
                                          out += ';';
                                      }
                                      out += std::to_string(l.ids[i]);
                                  }
                                  return out;
                              },
                              [](const FailedCount &c) {
                                  return "count:" + std::to_string(c.count) + "/" + (c.subtree_failed ? "1" : "0");
                              },
                              [](const FailedBit &b) { return std::string("bit:") + (b.subtree_failed ? "1" : "0"); },
                          },
                          info.repr());
    }

    std::optional<FailureInfo> parse_failure_info(std::string_view s)
    {
        auto colon = s.find(':');
        if (colon == std::string_view::npos)
        {
            return std::nullopt;
        }
        auto scheme = parse_scheme(s.substr(0, colon));
        auto body = s.substr(colon + 1);
        if (!scheme)
        {
            return std::nullopt;
        }
        auto parse_bit = [](std::string_view b) -> std::optional<bool> {
            if (b == "0")
            {
                return false;
            }
            if (b == "1")
            {
                return true;
            }
            return std::nullopt;
        };
        switch (*scheme)
        {
        case Scheme::list: {
            FailedList l;
            std::size_t pos = 0;
            while (pos < body.size())
            {
                auto semi = body.find(';', pos);
                auto end = semi == std::string_view::npos ? body.size() : semi;
                auto id = parse_uint<ProcessId>(body.substr(pos, end - pos));
                if (!id)
                {
                    return std::nullopt;
                }
                l.ids.push_back(*id);
                pos = semi == std::string_view::npos ? body.size() : semi + 1;
            }
            if (std::adjacent_find(l.ids.begin(), l.ids.end(), std::greater_equal<>()) != l.ids.end())
            {
                return std::nullopt;
            }
            return FailureInfo(l);
        }
        case Scheme::count: {
            auto slash = body.find('/');
            if (slash == std::string_view::npos)
            {
                return std::nullopt;
            }
            auto count = parse_uint<std::uint32_t>(body.substr(0, slash));
            auto bit = parse_bit(body.substr(slash + 1));
            if (!count || !bit)
            {
                return std::nullopt;
            }
            return FailureInfo(FailedCount{*count, *bit});
        }
        case Scheme::bit: {
            auto bit = parse_bit(body);
            if (!bit)
            {
                return std::nullopt;
            }
            return FailureInfo(FailedBit{*bit});
        }
        }
        return std::nullopt;
    }
} // namespace ftcoll
