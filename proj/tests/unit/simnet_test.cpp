#include "ftcoll/simnet.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace ftcoll;

namespace
{
    Envelope env(ProcessId from, ProcessId to, Value v, Phase ph = Phase::tree, OpId op = 1)
    {
        Envelope e;
        e.op_id = op;
        e.from = from;
        e.to = to;
        e.phase = ph;
        e.payload.value = std::move(v);
        return e;
    }

    std::size_t count_kind(const Trace &t, EventKind k, std::optional<ProcessId> actor = std::nullopt)
    {
        return static_cast<std::size_t>(std::count_if(t.events.begin(), t.events.end(), [&](const TraceEvent &e) {
            return e.kind == k && (!actor || e.actor == *actor);
        }));
    }

    // 0 sends 1..count to 1; 1 records what arrives.
    Task<void> fifo_pair(Transport &net, int count, std::vector<std::int64_t> &got)
    {
        if (net.self() == 0)
        {
            for (int i = 1; i <= count; ++i)
            {
                co_await net.send(env(0, 1, Value{i}));
            }
            co_return;
        }
        for (int i = 0; i < count; ++i)
        {
            auto r = co_await net.recv_from(0, 1, Phase::tree);
            got.push_back(r.message ? r.message->payload.value[0] : -1);
        }
    }

    Task<void> receive_all_from(Transport &net, ProcessId from, std::vector<RecvResult> &out, int max)
    {
        for (int i = 0; i < max; ++i)
        {
            auto r = co_await net.recv_from(from, 1, Phase::tree);
            const bool failed = r.sender_failed();
            out.push_back(std::move(r));
            if (failed)
            {
                co_return;
            }
        }
    }
} // namespace

TEST(Simnet, PerChannelFifo)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        std::vector<std::int64_t> got;
        Simulator sim(2, {}, SimConfig{seed, 1, 50, 0});
        sim.run([&](Transport &net) { return fifo_pair(net, 20, got); });
        std::vector<std::int64_t> expect(20);
        for (int i = 0; i < 20; ++i)
        {
            expect[i] = i + 1;
        }
        ASSERT_EQ(got, expect) << "seed " << seed;
    }
}

TEST(Simnet, PreoperationalFailureIsConfirmed)
{
    FailureScript script;
    script.fail_pre(0);
    std::vector<RecvResult> got;
    Simulator sim(2, script);
    const auto trace = sim.run([&](Transport &net) -> Task<void> {
        if (net.self() == 1)
        {
            return receive_all_from(net, 0, got, 1);
        }
        throw std::logic_error("a preoperationally failed process never starts");
    });
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].sender, 0u);
    EXPECT_TRUE(got[0].sender_failed());
    EXPECT_EQ(trace.events.front().kind, EventKind::fail);
    EXPECT_EQ(trace.events.front().note, "pre");
    EXPECT_EQ(count_kind(trace, EventKind::confirm_failed, 1), 1u);
    EXPECT_TRUE(sim.failed(0));
}

TEST(Simnet, QueuedMessagesWinOverFailure)
{
    // 0 completes two sends and dies at the third; 1 still sees both.
    FailureScript script;
    script.fail_after_sends(0, 2);
    std::vector<std::int64_t> unused;
    std::vector<RecvResult> got;
    Simulator sim(2, script, SimConfig{3, 1, 30, 0});
    const auto trace = sim.run([&](Transport &net) -> Task<void> {
        if (net.self() == 0)
        {
            return fifo_pair(net, 5, unused);
        }
        return receive_all_from(net, 0, got, 5);
    });
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].message->payload.value, (Value{1}));
    EXPECT_EQ(got[1].message->payload.value, (Value{2}));
    EXPECT_TRUE(got[2].sender_failed());
    EXPECT_EQ(count_kind(trace, EventKind::send, 0), 2u);
    EXPECT_EQ(sim.sends(0), 2u);
    const auto fail = std::find_if(trace.events.begin(), trace.events.end(),
                                   [](const TraceEvent &e) { return e.kind == EventKind::fail; });
    ASSERT_NE(fail, trace.events.end());
    EXPECT_EQ(fail->note, "after_sends=2");
}

namespace
{
    Task<void> send_to_dead_then_finish(Transport &net)
    {
        if (net.self() == 0)
        {
            co_await net.send(env(0, 1, Value{5}));
        }
    }

    Task<void> mutual_wait(Transport &net)
    {
        co_await net.recv_from(1 - net.self(), 1, Phase::tree);
    }

    Task<void> thrower(Transport &net)
    {
        if (net.self() == 1)
        {
            throw std::runtime_error("broken protocol");
        }
        auto r = co_await net.recv_from(1, 1, Phase::tree);
        if (!r.sender_failed())
        {
            throw std::logic_error("expected a failed sender");
        }
    }

    Task<void> phase_filter(Transport &net, std::vector<Phase> &order)
    {
        if (net.self() == 0)
        {
            co_await net.send(env(0, 1, Value{1}, Phase::up_correction));
            co_await net.send(env(0, 1, Value{2}, Phase::tree));
            co_return;
        }
        auto a = co_await net.recv_from(0, 1, Phase::tree);
        order.push_back(a.message->phase);
        auto b = co_await net.recv_from(0, 1, Phase::up_correction);
        order.push_back(b.message->phase);
    }

    Task<void> any_of_three(Transport &net, std::vector<ProcessId> &senders)
    {
        if (net.self() != 0)
        {
            if (net.self() != 2)
            {
                co_await net.send(env(net.self(), 0, Value{net.self()}));
            }
            co_return;
        }
        std::vector<ProcessId> cands{1, 2, 3};
        while (!cands.empty())
        {
            auto r = co_await net.recv_any(cands, 1, Phase::tree);
            senders.push_back(r.sender);
            cands.erase(std::find(cands.begin(), cands.end(), r.sender));
        }
    }
} // namespace

TEST(Simnet, MessagesToFailedProcessesAreAbsorbed)
{
    FailureScript script;
    script.fail_pre(1);
    Simulator sim(2, script);
    const auto trace = sim.run(send_to_dead_then_finish);
    EXPECT_EQ(count_kind(trace, EventKind::send), 1u);
    EXPECT_EQ(count_kind(trace, EventKind::recv), 0u);
}

TEST(Simnet, DeadlockIsReported)
{
    Simulator sim(2, {});
    try
    {
        sim.run(mutual_wait);
        FAIL() << "expected a deadlock";
    }
    catch (const DeadlockDetected &d)
    {
        EXPECT_EQ(d.blocked(), (std::vector<ProcessId>{0, 1}));
    }
}

TEST(Simnet, ExceptionCrashesTheProcess)
{
    Simulator sim(2, {});
    const auto trace = sim.run(thrower);
    EXPECT_TRUE(sim.failed(1));
    EXPECT_FALSE(sim.failed(0));
    ASSERT_TRUE(sim.abort_reason(1));
    EXPECT_EQ(*sim.abort_reason(1), "broken protocol");
    EXPECT_EQ(count_kind(trace, EventKind::fail, 1), 1u);
}

TEST(Simnet, PhaseFiltering)
{
    std::vector<Phase> order;
    Simulator sim(2, {});
    sim.run([&](Transport &net) { return phase_filter(net, order); });
    EXPECT_EQ(order, (std::vector<Phase>{Phase::tree, Phase::up_correction}));
}

TEST(Simnet, RecvAnyReportsEachCandidate)
{
    FailureScript script;
    script.fail_pre(2);
    std::vector<ProcessId> senders;
    Simulator sim(4, script);
    sim.run([&](Transport &net) { return any_of_three(net, senders); });
    ASSERT_EQ(senders.size(), 3u);
    // The failed candidate is confirmed immediately; the others follow.
    EXPECT_EQ(senders[0], 2u);
    std::sort(senders.begin(), senders.end());
    EXPECT_EQ(senders, (std::vector<ProcessId>{1, 2, 3}));
}

TEST(Simnet, SameSeedSameTrace)
{
    auto run = [](std::uint64_t seed) {
        std::vector<std::int64_t> got;
        Simulator sim(2, {}, SimConfig{seed, 1, 100, 40});
        return sim.run([&](Transport &net) { return fifo_pair(net, 30, got); });
    };
    EXPECT_EQ(run(5).digest(), run(5).digest());
    EXPECT_EQ(run(5).to_text(), run(5).to_text());
    EXPECT_NE(run(5).digest(), run(6).digest());
}

TEST(Simnet, RejectsBadConfiguration)
{
    EXPECT_THROW(Simulator(0, {}), std::invalid_argument);
    FailureScript script;
    script.fail_pre(3);
    EXPECT_THROW(Simulator(2, script), std::invalid_argument);
    EXPECT_THROW(Simulator(2, {}, SimConfig{1, 5, 2, 0}), std::invalid_argument);
}
