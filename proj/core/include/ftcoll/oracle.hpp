#pragma once

#include "ftcoll/scenario.hpp"
#include "ftcoll/trace.hpp"
#include "ftcoll/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Brute-force checkers. Nothing here looks at protocol internals: verdicts are
// computed from traces, scenarios and closed-form counts only.
namespace ftcoll
{
    /// f(f+1)*floor((n-1)/(f+1)) + a(a-1) with a = ((n-1) mod (f+1)) + 1.
    std::uint64_t expected_upcorrection_messages(std::uint64_t n, std::uint64_t f);
    std::uint64_t expected_tree_messages(std::uint64_t n);
    /// Tree dissemination plus at most one correction message per ordered
    /// pair inside a group.
    std::uint64_t max_broadcast_messages(std::uint64_t n, std::uint64_t f);
    /// (f+1) rounds of reduce plus broadcast.
    std::uint64_t allreduce_message_bound(std::uint64_t n, std::uint64_t f);

    /// { S : required <= S <= required + optional }.
    struct InclusionFamily
    {
        std::vector<ProcessId> required; // sorted
        std::vector<ProcessId> optional; // sorted, disjoint from required

        bool contains(std::span<const ProcessId> sorted_set) const;
        std::size_t size() const;
        /// Every member set; throws std::length_error past 2^20 sets.
        std::vector<std::vector<ProcessId>> members() const;
    };

    /// Live processes are required, scripted in-operation failures optional,
    /// preoperational failures never included.
    InclusionFamily acceptable_inclusion_sets(const Scenario &s);
    /// Same, with the failed set taken from the trace's fail events: scripted
    /// failures that never triggered are live, aborted processes optional.
    InclusionFamily acceptable_inclusion_sets(const Scenario &s, const Trace &t);

    /// Per-process inclusion multiplicities recovered from a result.
    struct Decoded
    {
        std::vector<std::uint64_t> multiplicity; // indexed by process
        bool foreign = false;                    // content that maps to no process
        std::vector<ProcessId> included() const;
        bool exactly_once() const;
    };

    /// Available for op sum with probe or unit inputs. Bit-set probes cannot
    /// tell 2*2^p from 2^(p+1); unit inputs decode multiplicities exactly.
    std::optional<Decoded> decode_inclusion(const Value &v, const Scenario &s);

    enum class PropertyStatus : std::uint8_t
    {
        pass,
        fail,
        skipped,
    };

    std::string_view to_string(PropertyStatus s) noexcept;

    struct PropertyResult
    {
        std::string id;
        PropertyStatus status = PropertyStatus::pass;
        std::string evidence;
    };

    struct Verdict
    {
        bool pass = true;
        /// False when more failures happen than the guarantees cover; the
        /// guarantee properties are then skipped.
        bool in_contract = true;
        std::vector<std::string> violated;
        std::vector<PropertyResult> properties;

        void add(PropertyResult r);
        const PropertyResult *find(std::string_view id) const;
        /// One line per property followed by a summary line.
        std::string render() const;
    };

    /// R1 init before root deliver, R2 deliver at most once, R3 live processes
    /// included, R4 nothing else and nothing twice, R5 every live process
    /// delivers, P1 a live root delivers, C1 message counts, F1 the trace
    /// follows the failure script.
    Verdict check_reduce_trace(const Trace &t, const Scenario &s);

    /// A1-A5 mirror R1-R5 for the allreduce value at every process, with A5
    /// agreement across processes; M1 total messages within the (f+1)-round
    /// bound, M2 exact failure-free counts, F1 as above.
    Verdict check_allreduce_trace(const Trace &t, const Scenario &s);

    Verdict check_trace(const Trace &t, const Scenario &s);

    /// Runs of one scenario under the list, count and bit schemes must differ
    /// only in failure info, with count = |list| and bit equal on every
    /// message.
    PropertyResult check_scheme_equivalence(const Trace &list, const Trace &count, const Trace &bit);

    struct MessageCounts
    {
        std::uint64_t up_correction = 0;
        std::uint64_t tree = 0;
        std::uint64_t broadcast_tree = 0;
        std::uint64_t broadcast_correction = 0;
        std::uint64_t total() const { return up_correction + tree + broadcast_tree + broadcast_correction; }
    };

    MessageCounts count_messages(const Trace &t);
} // namespace ftcoll
