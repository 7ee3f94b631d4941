#pragma once

#include "ftcoll/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ftcoll
{
    /// Processes that exchange their inputs before the tree phase.
    struct CorrectionGroup
    {
        std::size_t index = 0;
        std::vector<ProcessId> members; // ascending; the root (0) first when present

        bool contains(ProcessId p) const noexcept;
        bool includes_root() const noexcept { return !members.empty() && members.front() == 0; }

        friend bool operator==(const CorrectionGroup &, const CorrectionGroup &) = default;
    };

    /// Group of process p (0 = root) for n processes tolerating f failures.
    /// Empty for the root when (n-1) is a multiple of f+1.
    /// Throws std::invalid_argument if p >= n.
    std::optional<CorrectionGroup> correction_group(ProcessId p, std::size_t n, std::uint32_t f);

    /// All groups in index order.
    std::vector<CorrectionGroup> correction_groups(std::size_t n, std::uint32_t f);

    /// True for non-root processes sharing the root's (partial, last) group.
    bool grouped_with_root(ProcessId p, std::size_t n, std::uint32_t f);

    /// Subtree k in [1, f+1] holding process p; p = 0 throws std::invalid_argument.
    std::uint32_t subtree_index(ProcessId p, std::uint32_t f);

    /// Member of l's group that lies in subtree k. May be l itself.
    ProcessId group_partner_in_subtree(ProcessId l, std::uint32_t k, std::uint32_t f, std::size_t n);

    /// Root 0 with min(f+1, n-1) children; subtree k holds every p with
    /// (p-1) mod (f+1) = k-1, laid out as a binomial tree over ascending ids.
    class IfTree
    {
    public:
        IfTree(std::size_t n, std::uint32_t f);

        std::size_t size() const noexcept { return n_; }
        std::uint32_t tolerance() const noexcept { return f_; }

        std::optional<ProcessId> parent(ProcessId p) const;
        std::span<const ProcessId> children(ProcessId p) const;
        std::size_t subtree_size(std::uint32_t k) const;

    private:
        std::size_t n_;
        std::uint32_t f_;
        std::vector<std::optional<ProcessId>> parent_;
        std::vector<std::vector<ProcessId>> children_;
    };

    IfTree build_if_tree(std::size_t n, std::uint32_t f);

    /// Swaps the caller's root with process 0 so that every topology query can
    /// assume root 0. The mapping is its own inverse.
    class RootMapping
    {
    public:
        explicit RootMapping(ProcessId root) noexcept : root_(root) {}

        ProcessId root() const noexcept { return root_; }
        ProcessId to_virtual(ProcessId real) const noexcept { return swap(real); }
        ProcessId to_real(ProcessId virt) const noexcept { return swap(virt); }

    private:
        ProcessId swap(ProcessId p) const noexcept
        {
            if (p == root_)
            {
                return 0;
            }
            if (p == 0)
            {
                return root_;
            }
            return p;
        }

        ProcessId root_;
    };
} // namespace ftcoll
