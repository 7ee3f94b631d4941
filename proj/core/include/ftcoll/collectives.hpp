#pragma once

#include "ftcoll/failure_info.hpp"
#include "ftcoll/reduce_op.hpp"
#include "ftcoll/task.hpp"
#include "ftcoll/topology.hpp"
#include "ftcoll/transport.hpp"
#include "ftcoll/types.hpp"

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ftcoll
{
    /// All processes take part; the generation tag distinguishes process sets
    /// that share a size.
    struct Participants
    {
        std::size_t n = 0;
        std::uint64_t generation = 0;
    };

    struct ReduceMsg
    {
        OpId id = 0;
        Participants participants;
        ProcessId root = 0;
    };

    struct BroadcastMsg
    {
        OpId id = 0;
        Participants participants;
    };

    struct AllreduceMsg
    {
        OpId id = 0;
        Participants participants;
        std::optional<Value> value; // filled at deliver
    };

    struct CollectiveConfig
    {
        std::uint32_t f = 1;
        ReduceOp op = ReduceOp::sum();
        Scheme scheme = Scheme::list;
        /// Allreduce roots in trial order. Empty means processes 0..f.
        std::vector<ProcessId> root_candidates;
    };

    /// Hands out operation ids; every invocation needs a fresh one.
    class OpIdSource
    {
    public:
        explicit OpIdSource(OpId first = 1) noexcept : next_(first) {}
        OpId next() noexcept { return next_.fetch_add(1, std::memory_order_relaxed); }

    private:
        std::atomic<OpId> next_;
    };

    /// Ids of the reduce and broadcast run in allreduce round `round`.
    OpId derive_op_id(OpId allreduce, std::uint32_t round, Collective c);
    inline constexpr std::uint32_t max_allreduce_rounds = 127;

    std::vector<ProcessId> default_root_candidates(std::size_t n, std::uint32_t f);
    /// Next candidate after r; throws CandidatesExhausted past the last one.
    ProcessId successor(ProcessId r, std::span<const ProcessId> candidates);

    struct UpCorrectionResult
    {
        Value value;
        FailureInfo failinfo;
    };

    /// Exchanges the original input with every other group member (ascending,
    /// send then receive) and folds what arrives. Members that never send are
    /// recorded as failed. Processes outside any group return their input.
    Task<UpCorrectionResult> up_correction(Transport &net, Value data, ReduceMsg msg, CollectiveConfig cfg);

    /// Up-correction, then one receive per tree child, then a single send to
    /// the parent. `tree` must outlive the returned task.
    Task<void> reduce_non_root(Transport &net, Value data, ReduceMsg msg, const IfTree &tree, CollectiveConfig cfg);

    /// What the root knows when combining a child's result.
    struct RootState
    {
        Value own_input;
        Value accumulator; // after up-correction; equals own_input when ungrouped
        std::optional<CorrectionGroup> group;
        std::uint32_t f = 0;
    };

    /// Completes a clean subtree result. `sender` is a root child in the
    /// renumbered (root = 0) id space.
    Value root_combine(const Value &received, ProcessId sender, const RootState &state, const ReduceOp &op);

    /// Takes the first child result whose subtree reports no failure.
    /// Throws NoFailureFreeSubtree when none exists.
    Task<Value> reduce_root(Transport &net, Value data, ReduceMsg msg, const IfTree &tree, CollectiveConfig cfg);

    /// Renumbers `root` to 0 and runs the root or non-root side. Only the root
    /// gets a value.
    Task<std::optional<Value>> reduce(Transport &net, Value data, ProcessId root, ReduceMsg msg,
                                      CollectiveConfig cfg);

    struct BroadcastResult
    {
        std::optional<Value> value;
        bool root_failed() const noexcept { return !value.has_value(); }
    };

    /// Tree dissemination down the I(f)-tree followed by down-correction: a
    /// process that delivers forwards to its children and to every group
    /// member it has not heard from. Every process also watches the root and
    /// reports root_failed once the root is confirmed dead without a value.
    /// The root must not fail during the operation.
    Task<BroadcastResult> broadcast(Transport &net, std::optional<Value> data, ProcessId root, BroadcastMsg msg,
                                    CollectiveConfig cfg);

    /// Reduce to a candidate root then broadcast from it, moving to the next
    /// candidate while the broadcast reports a failed root.
    Task<Value> allreduce(Transport &net, Value data, AllreduceMsg msg, CollectiveConfig cfg);
} // namespace ftcoll
