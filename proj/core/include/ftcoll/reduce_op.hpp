#pragma once

#include "ftcoll/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace ftcoll
{
    /// Associative, commutative element-wise combination of two values.
    struct ReduceOp
    {
        std::string name;
        std::function<std::int64_t(std::int64_t, std::int64_t)> combine_element;

        /// Element-wise combination; the shorter operand is padded with the
        /// other operand's elements.
        Value operator()(const Value &a, const Value &b) const;
        Value fold(const Value &acc, const Value &incoming) const { return (*this)(acc, incoming); }

        static ReduceOp sum();
        static ReduceOp max();
        static ReduceOp bitwise_or();
    };

    /// "sum", "max" or "bor".
    std::optional<ReduceOp> reduce_op_by_name(std::string_view name);
} // namespace ftcoll
