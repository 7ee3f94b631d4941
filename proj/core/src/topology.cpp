#include "ftcoll/topology.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ftcoll
{
    namespace
    {
        std::size_t width(std::uint32_t f) { return static_cast<std::size_t>(f) + 1; }

        bool root_joins_last_group(std::size_t n, std::uint32_t f) { return n > 1 && (n - 1) % width(f) != 0; }

        CorrectionGroup make_group(std::size_t index, std::size_t n, std::uint32_t f)
        {
            CorrectionGroup g;
            g.index = index;
            const std::size_t first = index * width(f) + 1;
            const std::size_t last = std::min(first + width(f) - 1, n - 1);
            if (last - first + 1 < width(f))
            {
                g.members.push_back(0);
            }
            for (std::size_t p = first; p <= last; ++p)
            {
                g.members.push_back(static_cast<ProcessId>(p));
            }
            return g;
        }
    } // namespace

    bool CorrectionGroup::contains(ProcessId p) const noexcept
    {
        return std::binary_search(members.begin(), members.end(), p);
    }

    std::optional<CorrectionGroup> correction_group(ProcessId p, std::size_t n, std::uint32_t f)
    {
        if (n == 0 || p >= n)
        {
            throw std::invalid_argument("process " + std::to_string(p) + " outside 0.." + std::to_string(n));
        }
        if (p == 0)
        {
            if (!root_joins_last_group(n, f))
            {
                return std::nullopt;
            }
            return make_group((n - 1) / width(f), n, f);
        }
        return make_group((p - 1) / width(f), n, f);
    }

    std::vector<CorrectionGroup> correction_groups(std::size_t n, std::uint32_t f)
    {
        std::vector<CorrectionGroup> out;
        if (n <= 1)
        {
            return out;
        }
        const std::size_t count = (n - 1 + width(f) - 1) / width(f);
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
        {
            out.push_back(make_group(i, n, f));
        }
        return out;
    }

    bool grouped_with_root(ProcessId p, std::size_t n, std::uint32_t f)
    {
        if (p == 0 || p >= n)
        {
            return false;
        }
        return (p - 1) / width(f) >= (n - 1) / width(f);
    }

    std::uint32_t subtree_index(ProcessId p, std::uint32_t f)
    {
        if (p == 0)
        {
            throw std::invalid_argument("the root lies in no subtree");
        }
        return static_cast<std::uint32_t>((p - 1) % width(f)) + 1;
    }

    ProcessId group_partner_in_subtree(ProcessId l, std::uint32_t k, std::uint32_t f, std::size_t n)
    {
        if (l == 0 || l >= n)
        {
            throw std::invalid_argument("partner lookup needs a non-root process");
        }
        if (grouped_with_root(l, n, f))
        {
            throw std::invalid_argument("process " + std::to_string(l) + " is grouped with the root");
        }
        if (k < 1 || k > width(f))
        {
            throw std::invalid_argument("subtree index out of range");
        }
        return static_cast<ProcessId>(((l - 1) / width(f)) * width(f) + k);
    }

    IfTree::IfTree(std::size_t n, std::uint32_t f) : n_(n), f_(f), parent_(n), children_(n)
    {
        if (n == 0)
        {
            throw std::invalid_argument("a tree needs at least one process");
        }
        const std::size_t w = width(f);
        for (std::size_t p = 1; p < n; ++p)
        {
            // Members of subtree k are k, k+w, k+2w, ...; the rank inside the
            // subtree equals the group number.
            const std::size_t k = (p - 1) % w + 1;
            const std::size_t rank = (p - 1) / w;
            if (rank == 0)
            {
                parent_[p] = 0;
                children_[0].push_back(static_cast<ProcessId>(p));
                continue;
            }
            const std::size_t parent_rank = rank & (rank - 1);
            const auto parent = static_cast<ProcessId>(k + parent_rank * w);
            parent_[p] = parent;
            children_[parent].push_back(static_cast<ProcessId>(p));
        }
        for (auto &c : children_)
        {
            std::sort(c.begin(), c.end());
        }
    }

    std::optional<ProcessId> IfTree::parent(ProcessId p) const
    {
        if (p >= n_)
        {
            throw std::invalid_argument("process outside tree");
        }
        return parent_[p];
    }

    std::span<const ProcessId> IfTree::children(ProcessId p) const
    {
        if (p >= n_)
        {
            throw std::invalid_argument("process outside tree");
        }
        return children_[p];
    }

    std::size_t IfTree::subtree_size(std::uint32_t k) const
    {
        if (k < 1 || k > width(f_) || k > n_ - 1)
        {
            return 0;
        }
        return (n_ - 1 - k) / width(f_) + 1;
    }

    IfTree build_if_tree(std::size_t n, std::uint32_t f) { return IfTree(n, f); }
} // namespace ftcoll
