#pragma once

#include "ftcoll/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ftcoll
{
    enum class Scheme : std::uint8_t
    {
        list = 1,
        count = 2,
        bit = 3,
    };

    std::string_view to_string(Scheme s) noexcept;
    std::optional<Scheme> parse_scheme(std::string_view s) noexcept;

    /// Ids of every process a sender could not receive from, sorted.
    struct FailedList
    {
        std::vector<ProcessId> ids;
        friend bool operator==(const FailedList &, const FailedList &) = default;
    };

    /// Size of the list above plus a bit set by tree-phase detections.
    struct FailedCount
    {
        std::uint32_t count = 0;
        bool subtree_failed = false;
        friend bool operator==(const FailedCount &, const FailedCount &) = default;
    };

    /// Only the tree-phase bit.
    struct FailedBit
    {
        bool subtree_failed = false;
        friend bool operator==(const FailedBit &, const FailedBit &) = default;
    };

    class FailureInfo
    {
    public:
        using Repr = std::variant<FailedList, FailedCount, FailedBit>;

        FailureInfo() : FailureInfo(Scheme::list) {}
        explicit FailureInfo(Scheme s);
        explicit FailureInfo(Repr r) : repr_(std::move(r)) {}

        Scheme scheme() const noexcept { return static_cast<Scheme>(repr_.index() + 1); }
        const Repr &repr() const noexcept { return repr_; }

        /// A correction-group partner sent nothing. The bit is untouched.
        void record_partner_failure(ProcessId p);
        /// A tree child sent nothing.
        void record_child_failure(ProcessId c);

        /// For list: some listed id satisfies in_subtree. Otherwise the bit.
        bool indicates_subtree_failure(const std::function<bool(ProcessId)> &in_subtree) const;

        friend bool operator==(const FailureInfo &, const FailureInfo &) = default;

    private:
        Repr repr_;
    };

    /// list: union; count: sum and OR; bit: OR. Throws SchemeMismatch.
    FailureInfo merge_failure_info(const FailureInfo &acc, const FailureInfo &incoming);

    /// "list:1;5", "count:2/1", "bit:0".
    std::string format_failure_info(const FailureInfo &info);
    std::optional<FailureInfo> parse_failure_info(std::string_view s);
} // namespace ftcoll
