#include "ftcoll/reduce_op.hpp"

#include <algorithm>

namespace ftcoll
{
    Value ReduceOp::operator()(const Value &a, const Value &b) const
    {
        const Value &longer = a.size() >= b.size() ? a : b;
        const Value &shorter = a.size() >= b.size() ? b : a;
        Value out = longer;
        for (std::size_t i = 0; i < shorter.size(); ++i)
        {
            out[i] = combine_element(out[i], shorter[i]);
        }
        return out;
    }

    ReduceOp ReduceOp::sum()
    {
        // Wrapping addition; carries out of a probe bit are detected by the oracle.
        return {"sum", [](std::int64_t a, std::int64_t b) {
                    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
                }};
    }

    ReduceOp ReduceOp::max()
    {
        return {"max", [](std::int64_t a, std::int64_t b) { return std::max(a, b); }};
    }

    ReduceOp ReduceOp::bitwise_or()
    {
        return {"bor", [](std::int64_t a, std::int64_t b) { return a | b; }};
    }

    std::optional<ReduceOp> reduce_op_by_name(std::string_view name)
    {
        if (name == "sum")
        {
            return ReduceOp::sum();
        }
        if (name == "max")
        {
            return ReduceOp::max();
        }
        if (name == "bor")
        {
            return ReduceOp::bitwise_or();
        }
        return std::nullopt;
    }
} // namespace ftcoll
