#include "ftcoll/failmodel.hpp"

namespace ftcoll
{
    FailureScript &FailureScript::fail_pre(ProcessId p)
    {
        entries_[p] = Preoperational{};
        return *this;
    }

    FailureScript &FailureScript::fail_after_sends(ProcessId p, std::size_t sends)
    {
        entries_[p] = AfterSends{sends};
        return *this;
    }

    std::optional<FailurePoint> FailureScript::point(ProcessId p) const
    {
        auto it = entries_.find(p);
        if (it == entries_.end())
        {
            return std::nullopt;
        }
        return it->second;
    }

    bool FailureScript::is_preoperational(ProcessId p) const
    {
        auto pt = point(p);
        return pt && std::holds_alternative<Preoperational>(*pt);
    }

    bool fails_before_sending(const FailureScript &script, ProcessId p, std::size_t sent_so_far)
    {
        auto pt = script.point(p);
        if (!pt)
        {
            return false;
        }
        if (std::holds_alternative<Preoperational>(*pt))
        {
            return true;
        }
        return sent_so_far >= std::get<AfterSends>(*pt).sends;
    }
} // namespace ftcoll
