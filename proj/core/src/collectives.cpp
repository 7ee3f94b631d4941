#include "ftcoll/collectives.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ftcoll
{
    namespace
    {
        void check_participants(const Transport &net, const Participants &p)
        {
            if (p.n != net.size())
            {
                throw std::invalid_argument("participant count " + std::to_string(p.n) +
                                            " does not match transport size " + std::to_string(net.size()));
            }
        }

        Envelope envelope(OpId op, ProcessId from, ProcessId to, Phase phase, Value value, FailureInfo info)
        {
            Envelope e;
            e.op_id = op;
            e.from = from;
            e.to = to;
            e.phase = phase;
            e.payload.value = std::move(value);
            e.payload.failinfo = std::move(info);
            return e;
        }
    } // namespace

    OpId derive_op_id(OpId allreduce, std::uint32_t round, Collective c)
    {
        if (round >= max_allreduce_rounds)
        {
            throw std::invalid_argument("too many allreduce rounds");
        }
        return allreduce * 256 + 1 + 2 * static_cast<OpId>(round) + (c == Collective::broadcast ? 1 : 0);
    }

    std::vector<ProcessId> default_root_candidates(std::size_t n, std::uint32_t f)
    {
        std::vector<ProcessId> out;
        for (std::size_t p = 0; p < n && p <= f; ++p)
        {
            out.push_back(static_cast<ProcessId>(p));
        }
        return out;
    }

    ProcessId successor(ProcessId r, std::span<const ProcessId> candidates)
    {
        auto it = std::find(candidates.begin(), candidates.end(), r);
        if (it == candidates.end())
        {
            throw std::invalid_argument("process " + std::to_string(r) + " is not a root candidate");
        }
        if (++it == candidates.end())
        {
            throw CandidatesExhausted();
        }
        return *it;
    }

    Task<UpCorrectionResult> up_correction(Transport &net, Value data, ReduceMsg msg, CollectiveConfig cfg)
    {
        const RootMapping map(msg.root);
        const ProcessId self = net.self();
        UpCorrectionResult out{data, FailureInfo(cfg.scheme)};
        const auto group = correction_group(map.to_virtual(self), msg.participants.n, cfg.f);
        if (!group)
        {
            co_return out;
        }
        for (auto member : group->members)
        {
            const ProcessId peer = map.to_real(member);
            if (peer == self)
            {
                continue;
            }
            // Always the original input, never the running accumulator.
            co_await net.send(envelope(msg.id, self, peer, Phase::up_correction, data, FailureInfo(cfg.scheme)));
            RecvResult r = co_await net.recv_from(peer, msg.id, Phase::up_correction);
            if (r.message)
            {
                out.value = cfg.op(out.value, r.message->payload.value);
            }
            else
            {
                out.failinfo.record_partner_failure(peer);
            }
        }
        co_return out;
    }

    Task<void> reduce_non_root(Transport &net, Value data, ReduceMsg msg, const IfTree &tree, CollectiveConfig cfg)
    {
        const RootMapping map(msg.root);
        const ProcessId self = net.self();
        const ProcessId vself = map.to_virtual(self);
        if (vself == 0)
        {
            throw std::invalid_argument("reduce_non_root called at the root");
        }

        UpCorrectionResult acc = co_await up_correction(net, std::move(data), msg, cfg);
        for (auto vchild : tree.children(vself))
        {
            const ProcessId child = map.to_real(vchild);
            RecvResult r = co_await net.recv_from(child, msg.id, Phase::tree);
            if (r.message)
            {
                acc.value = cfg.op(acc.value, r.message->payload.value);
                acc.failinfo = merge_failure_info(acc.failinfo, r.message->payload.failinfo);
            }
            else
            {
                acc.failinfo.record_child_failure(child);
            }
        }
        const ProcessId parent = map.to_real(*tree.parent(vself));
        co_await net.send(envelope(msg.id, self, parent, Phase::tree, acc.value, acc.failinfo));
        net.record_deliver(msg.id, "reduce");
    }

    Value root_combine(const Value &received, ProcessId sender, const RootState &state, const ReduceOp &op)
    {
        if (!state.group)
        {
            return op(state.own_input, received);
        }
        const auto k = subtree_index(sender, state.f);
        const bool group_reached_subtree =
            std::any_of(state.group->members.begin(), state.group->members.end(),
                        [&](ProcessId m) { return m != 0 && subtree_index(m, state.f) == k; });
        if (group_reached_subtree)
        {
            return received;
        }
        return op(state.accumulator, received);
    }

    Task<Value> reduce_root(Transport &net, Value data, ReduceMsg msg, const IfTree &tree, CollectiveConfig cfg)
    {
        const RootMapping map(msg.root);
        const std::size_t n = msg.participants.n;
        if (net.self() != msg.root)
        {
            throw std::invalid_argument("reduce_root called away from the root");
        }

        RootState state;
        state.own_input = data;
        state.accumulator = data;
        state.group = correction_group(0, n, cfg.f);
        state.f = cfg.f;
        if (state.group)
        {
            UpCorrectionResult uc = co_await up_correction(net, data, msg, cfg);
            state.accumulator = std::move(uc.value);
        }

        std::vector<ProcessId> pending;
        for (auto vchild : tree.children(0))
        {
            pending.push_back(map.to_real(vchild));
        }
        while (!pending.empty())
        {
            RecvResult r = co_await net.recv_any(pending, msg.id, Phase::tree);
            pending.erase(std::find(pending.begin(), pending.end(), r.sender));
            if (r.sender_failed())
            {
                continue;
            }
            const ProcessId vsender = map.to_virtual(r.sender);
            const auto k = subtree_index(vsender, cfg.f);
            const bool tainted = r.message->payload.failinfo.indicates_subtree_failure([&](ProcessId failed) {
                const ProcessId v = map.to_virtual(failed);
                return v != 0 && subtree_index(v, cfg.f) == k;
            });
            if (tainted)
            {
                continue;
            }
            Value result = root_combine(r.message->payload.value, vsender, state, cfg.op);
            net.record_deliver(msg.id, "reduce v=" + format_value(result));
            co_return result;
        }

        // With n <= f+1 the root's group is every process, so its accumulator
        // is already complete.
        if (n <= static_cast<std::size_t>(cfg.f) + 1)
        {
            net.record_deliver(msg.id, "reduce v=" + format_value(state.accumulator));
            co_return state.accumulator;
        }
        throw NoFailureFreeSubtree();
    }

    Task<std::optional<Value>> reduce(Transport &net, Value data, ProcessId root, ReduceMsg msg, CollectiveConfig cfg)
    {
        check_participants(net, msg.participants);
        if (root >= msg.participants.n)
        {
            throw std::invalid_argument("root outside participant set");
        }
        msg.root = root;
        net.record_init(msg.id, "reduce root=" + std::to_string(root));
        const IfTree tree(msg.participants.n, cfg.f);
        if (net.self() == root)
        {
            Value v = co_await reduce_root(net, std::move(data), msg, tree, cfg);
            co_return v;
        }
        co_await reduce_non_root(net, std::move(data), msg, tree, cfg);
        co_return std::nullopt;
    }

    Task<BroadcastResult> broadcast(Transport &net, std::optional<Value> data, ProcessId root, BroadcastMsg msg,
                                    CollectiveConfig cfg)
    {
        check_participants(net, msg.participants);
        const std::size_t n = msg.participants.n;
        if (root >= n)
        {
            throw std::invalid_argument("root outside participant set");
        }
        net.record_init(msg.id, "broadcast root=" + std::to_string(root));

        const RootMapping map(root);
        const ProcessId self = net.self();
        const ProcessId vself = map.to_virtual(self);
        const IfTree tree(n, cfg.f);
        const auto group = correction_group(vself, n, cfg.f);

        Value value;
        std::optional<ProcessId> heard_from;
        if (vself == 0)
        {
            if (!data)
            {
                throw std::invalid_argument("broadcast root has no value");
            }
            value = std::move(*data);
        }
        else
        {
            std::vector<ProcessId> watch;
            watch.push_back(*tree.parent(vself));
            if (group)
            {
                for (auto m : group->members)
                {
                    if (m != vself)
                    {
                        watch.push_back(m);
                    }
                }
            }
            watch.push_back(0);
            std::sort(watch.begin(), watch.end());
            watch.erase(std::unique(watch.begin(), watch.end()), watch.end());
            std::vector<ProcessId> candidates;
            for (auto v : watch)
            {
                candidates.push_back(map.to_real(v));
            }

            for (;;)
            {
                RecvResult r = co_await net.recv_any(candidates, msg.id,
                                                     PhaseSet(Phase::broadcast_tree, Phase::broadcast_correction));
                if (r.message)
                {
                    value = std::move(r.message->payload.value);
                    heard_from = map.to_virtual(r.sender);
                    break;
                }
                if (r.sender == root)
                {
                    co_return BroadcastResult{};
                }
                candidates.erase(std::find(candidates.begin(), candidates.end(), r.sender));
            }
        }
        net.record_deliver(msg.id, "broadcast v=" + format_value(value));

        std::vector<ProcessId> reached;
        for (auto vchild : tree.children(vself))
        {
            co_await net.send(envelope(msg.id, self, map.to_real(vchild), Phase::broadcast_tree, value,
                                       FailureInfo(cfg.scheme)));
            reached.push_back(vchild);
        }
        if (group)
        {
            for (auto m : group->members)
            {
                if (m == vself || m == 0 || m == heard_from ||
                    std::find(reached.begin(), reached.end(), m) != reached.end())
                {
                    continue;
                }
                co_await net.send(envelope(msg.id, self, map.to_real(m), Phase::broadcast_correction, value,
                                           FailureInfo(cfg.scheme)));
            }
        }
        co_return BroadcastResult{std::move(value)};
    }

    Task<Value> allreduce(Transport &net, Value data, AllreduceMsg msg, CollectiveConfig cfg)
    {
        check_participants(net, msg.participants);
        std::vector<ProcessId> candidates = cfg.root_candidates;
        if (candidates.empty())
        {
            candidates = default_root_candidates(msg.participants.n, cfg.f);
        }
        if (candidates.size() > max_allreduce_rounds)
        {
            throw std::invalid_argument("too many root candidates");
        }
        for (auto c : candidates)
        {
            if (c >= msg.participants.n)
            {
                throw std::invalid_argument("root candidate outside participant set");
            }
        }
        net.record_init(msg.id, "allreduce");

        ProcessId root = candidates.front();
        for (std::uint32_t round = 0;; ++round)
        {
            ReduceMsg rmsg{derive_op_id(msg.id, round, Collective::reduce), msg.participants, root};
            std::optional<Value> reduced = co_await reduce(net, data, root, rmsg, cfg);
            BroadcastMsg bmsg{derive_op_id(msg.id, round, Collective::broadcast), msg.participants};
            BroadcastResult b = co_await broadcast(net, std::move(reduced), root, bmsg, cfg);
            if (!b.root_failed())
            {
                net.record_deliver(msg.id, "allreduce v=" + format_value(*b.value));
                co_return std::move(*b.value);
            }
            root = successor(root, candidates);
        }
    }
} // namespace ftcoll
