#include "ftcoll/collectives.hpp"
#include "ftcoll/oracle.hpp"
#include "ftcoll/runner.hpp"
#include "ftcoll/simnet.hpp"
#include "generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace ftcoll;

namespace
{
    Scenario worked_example()
    {
        return parse_scenario("n 7\nf 1\nop sum\ninputs ids\nfail 1 pre\n");
    }

    bool has_send(const Trace &t, ProcessId from, ProcessId to, Phase ph, std::string_view value)
    {
        return std::any_of(t.events.begin(), t.events.end(), [&](const TraceEvent &e) {
            return e.kind == EventKind::send && e.actor == from && e.peer == to && e.phase == ph &&
                   note_field(e.note, "v") == value;
        });
    }

    std::size_t sends_in(const Trace &t, Phase ph)
    {
        return static_cast<std::size_t>(std::count_if(t.events.begin(), t.events.end(), [&](const TraceEvent &e) {
            return e.kind == EventKind::send && e.phase == ph;
        }));
    }

    Task<void> broadcast_entry(Transport &net, ProcessId root, std::uint32_t f, std::vector<BroadcastResult> &out)
    {
        CollectiveConfig cfg;
        cfg.f = f;
        std::optional<Value> data;
        if (net.self() == root)
        {
            data = Value{42};
        }
        out[net.self()] = co_await broadcast(net, data, root, BroadcastMsg{9, {net.size(), 0}}, cfg);
    }
} // namespace

TEST(Collectives, WorkedExampleReducesToTwenty)
{
    const auto run = simulate(worked_example());
    ASSERT_TRUE(run.outcomes[0].value);
    EXPECT_EQ(*run.outcomes[0].value, (Value{20}));
    // 3+4 and 5+6 after up-correction; 2 forwards 4's and 6's results.
    EXPECT_TRUE(has_send(run.trace, 4, 2, Phase::tree, "7"));
    EXPECT_TRUE(has_send(run.trace, 6, 2, Phase::tree, "11"));
    EXPECT_TRUE(has_send(run.trace, 3, 1, Phase::tree, "7"));
    EXPECT_TRUE(has_send(run.trace, 5, 1, Phase::tree, "11"));
    const auto up = std::find_if(run.trace.events.begin(), run.trace.events.end(), [](const TraceEvent &e) {
        return e.kind == EventKind::send && e.actor == 2 && e.phase == Phase::tree;
    });
    ASSERT_NE(up, run.trace.events.end());
    EXPECT_EQ(up->note, "v=20 fi=list:1");
}

TEST(Collectives, WorkedExampleAcrossSchemesAndSeeds)
{
    for (auto scheme : {Scheme::list, Scheme::count, Scheme::bit})
    {
        for (std::uint64_t seed = 1; seed <= 25; ++seed)
        {
            auto s = worked_example();
            s.scheme = scheme;
            s.sim.seed = seed;
            s.sim.latency_max = 40;
            const auto run = simulate(s);
            ASSERT_EQ(run.outcomes[0].value, (Value{20})) << to_string(scheme) << " seed " << seed;
        }
    }
}

TEST(Collectives, FailureFreeCountsSmallGrid)
{
    for (std::size_t n = 1; n <= 20; ++n)
    {
        for (std::uint32_t f = 0; f <= 4; ++f)
        {
            Scenario s;
            s.n = n;
            s.f = f;
            const auto run = simulate(s);
            ASSERT_EQ(sends_in(run.trace, Phase::up_correction), expected_upcorrection_messages(n, f));
            ASSERT_EQ(sends_in(run.trace, Phase::tree), n - 1);
            ASSERT_EQ(run.outcomes[0].value, (Value{static_cast<std::int64_t>((std::uint64_t{1} << n) - 1)}));
        }
    }
}

TEST(Collectives, ArbitraryRoot)
{
    for (ProcessId root = 0; root < 9; ++root)
    {
        Scenario s;
        s.n = 9;
        s.f = 2;
        s.root = root;
        s.inputs = InputKind::ids;
        s.script.fail_after_sends(root == 4 ? 5 : 4, 0);
        const auto run = simulate(s);
        ASSERT_TRUE(run.outcomes[root].value) << "root " << root;
        const auto v = (*run.outcomes[root].value)[0];
        // Process 4 (or 5) fails before sending anything, so its id is absent.
        EXPECT_EQ(v, 36 - (root == 4 ? 5 : 4)) << "root " << root;
        for (ProcessId p = 0; p < 9; ++p)
        {
            if (p != root)
            {
                EXPECT_FALSE(run.outcomes[p].value);
            }
        }
    }
}

TEST(Collectives, SingleProcess)
{
    Scenario s;
    s.n = 1;
    s.f = 3;
    s.inputs = InputKind::ones;
    auto run = simulate(s);
    EXPECT_EQ(run.outcomes[0].value, (Value{1}));
    EXPECT_EQ(count_messages(run.trace).total(), 0u);
    s.collective = Collective::allreduce;
    run = simulate(s);
    EXPECT_EQ(run.outcomes[0].value, (Value{1}));
}

TEST(Collectives, TooManyFailuresRaiseNoFailureFreeSubtree)
{
    auto s = worked_example();
    s.script.fail_pre(2);
    const auto run = simulate(s);
    EXPECT_TRUE(run.outcomes[0].failed);
    ASSERT_TRUE(run.outcomes[0].abort);
    EXPECT_EQ(*run.outcomes[0].abort, "No failure-free subtree");
}

TEST(Collectives, RootGroupCoversEveryoneWhenSmall)
{
    // n <= f+1: every subtree may be dirty, but the root's group already
    // exchanged all inputs.
    Scenario s;
    s.n = 3;
    s.f = 2;
    s.inputs = InputKind::ids;
    s.script.fail_after_sends(1, 1);
    s.script.fail_pre(2);
    const auto run = simulate(s);
    ASSERT_TRUE(run.outcomes[0].value);
    EXPECT_EQ(*run.outcomes[0].value, (Value{1}));
}

TEST(Collectives, RootCombineGeometry)
{
    const auto sum = ReduceOp::sum();
    RootState ungrouped{Value{1}, Value{1}, std::nullopt, 1};
    EXPECT_EQ(root_combine(Value{10}, 1, ungrouped, sum), (Value{11}));

    // n=8, f=2: root group {0,7}; 7 lies in subtree 1.
    RootState grouped{Value{1}, Value{129}, correction_group(0, 8, 2), 2};
    EXPECT_EQ(root_combine(Value{10}, 1, grouped, sum), (Value{10}));
    EXPECT_EQ(root_combine(Value{10}, 2, grouped, sum), (Value{139}));
}

TEST(Collectives, SuccessorAndOpIds)
{
    const std::vector<ProcessId> c{3, 0, 5};
    EXPECT_EQ(successor(3, c), 0u);
    EXPECT_EQ(successor(0, c), 5u);
    EXPECT_THROW(successor(5, c), CandidatesExhausted);
    EXPECT_THROW(successor(4, c), std::invalid_argument);

    std::set<OpId> ids;
    for (OpId parent = 1; parent < 4; ++parent)
    {
        for (std::uint32_t r = 0; r < max_allreduce_rounds; ++r)
        {
            ids.insert(derive_op_id(parent, r, Collective::reduce));
            ids.insert(derive_op_id(parent, r, Collective::broadcast));
        }
        ids.insert(parent);
    }
    EXPECT_EQ(ids.size(), 3u * (2u * max_allreduce_rounds + 1));
    EXPECT_THROW(derive_op_id(1, max_allreduce_rounds, Collective::reduce), std::invalid_argument);
}

TEST(Collectives, BroadcastReachesLiveProcesses)
{
    testkit::Gen g(21);
    for (int trial = 0; trial < 400; ++trial)
    {
        const auto n = g.uniform(1, 24);
        const auto f = static_cast<std::uint32_t>(g.uniform(0, 3));
        const auto root = static_cast<ProcessId>(g.uniform(0, n - 1));
        FailureScript script;
        for (auto p : g.distinct(n, g.uniform(0, f)))
        {
            if (p == root)
            {
                continue;
            }
            if (g.coin())
            {
                script.fail_pre(p);
            }
            else
            {
                script.fail_after_sends(p, g.uniform(0, 4));
            }
        }
        std::vector<BroadcastResult> out(n);
        Simulator sim(n, script, SimConfig{g.raw(), 1, 1 + g.uniform(0, 30), 0});
        const auto trace = sim.run([&](Transport &net) { return broadcast_entry(net, root, f, out); });
        std::size_t messages = 0;
        for (const auto &e : trace.events)
        {
            messages += e.kind == EventKind::send ? 1 : 0;
        }
        ASSERT_LE(messages, max_broadcast_messages(n, f));
        for (ProcessId p = 0; p < n; ++p)
        {
            if (!sim.failed(p))
            {
                ASSERT_EQ(out[p].value, (Value{42})) << "trial " << trial << " p=" << p;
            }
        }
    }
}

TEST(Collectives, BroadcastReportsFailedRoot)
{
    FailureScript script;
    script.fail_pre(2);
    std::vector<BroadcastResult> out(7);
    Simulator sim(7, script);
    sim.run([&](Transport &net) { return broadcast_entry(net, 2, 1, out); });
    for (ProcessId p = 0; p < 7; ++p)
    {
        if (p != 2)
        {
            EXPECT_TRUE(out[p].root_failed()) << p;
        }
    }
}

TEST(Collectives, AllreduceRotatesPastFailedCandidate)
{
    Scenario s;
    s.n = 7;
    s.f = 1;
    s.collective = Collective::allreduce;
    s.inputs = InputKind::ids;
    s.script.fail_pre(0);
    const auto run = simulate(s);
    EXPECT_EQ(testkit::reduce_rounds(run.trace), 2u);
    for (ProcessId p = 1; p < 7; ++p)
    {
        EXPECT_EQ(run.outcomes[p].value, (Value{21}));
    }
}

TEST(Collectives, AllreduceCandidatesExhausted)
{
    Scenario s;
    s.n = 5;
    s.f = 1;
    s.collective = Collective::allreduce;
    s.candidates = {0};
    s.script.fail_pre(0);
    const auto run = simulate(s);
    for (ProcessId p = 1; p < 5; ++p)
    {
        ASSERT_TRUE(run.outcomes[p].abort);
        EXPECT_EQ(*run.outcomes[p].abort, "root candidates exhausted");
    }
}

// Any child result whose failure info reports a clean subtree, completed at
// the root, includes every live process exactly once.
TEST(CollectivesProperty, EveryCleanSubtreeIsComplete)
{
    testkit::Gen g(99);
    std::size_t clean_checked = 0;
    for (int trial = 0; trial < 3000; ++trial)
    {
        testkit::RandomScenarioLimits lim;
        lim.max_n = 24;
        lim.max_f = 3;
        auto s = random_scenario(g, lim);
        s.root = 0;
        if (s.script.point(0))
        {
            continue;
        }
        const auto run = simulate(s);
        const auto inputs = make_inputs(s);
        const auto op = scenario_op(s);
        std::set<ProcessId> failed;
        for (const auto &e : run.trace.events)
        {
            if (e.kind == EventKind::fail)
            {
                failed.insert(e.actor);
            }
        }

        RootState state;
        state.own_input = inputs[0];
        state.accumulator = inputs[0];
        state.group = correction_group(0, s.n, s.f);
        state.f = s.f;
        for (const auto &e : run.trace.events)
        {
            if (e.kind == EventKind::recv && e.actor == 0 && e.phase == Phase::up_correction)
            {
                state.accumulator = op(state.accumulator, *parse_value(*note_field(e.note, "v")));
            }
        }
        for (const auto &e : run.trace.events)
        {
            if (e.kind != EventKind::recv || e.actor != 0 || e.phase != Phase::tree)
            {
                continue;
            }
            const auto info = *parse_failure_info(*note_field(e.note, "fi"));
            const auto k = subtree_index(*e.peer, s.f);
            if (info.indicates_subtree_failure([&](ProcessId p) { return p != 0 && subtree_index(p, s.f) == k; }))
            {
                continue;
            }
            const auto v = root_combine(*parse_value(*note_field(e.note, "v")), *e.peer, state, op);
            const auto d = decode_inclusion(v, s);
            ASSERT_TRUE(d);
            ASSERT_TRUE(d->exactly_once()) << format_scenario(s);
            for (ProcessId p = 0; p < s.n; ++p)
            {
                if (!failed.contains(p))
                {
                    ASSERT_EQ(d->multiplicity[p], 1u) << "live " << p << " missing\n" << format_scenario(s);
                }
                if (s.script.is_preoperational(p))
                {
                    ASSERT_EQ(d->multiplicity[p], 0u);
                }
            }
            ++clean_checked;
        }
    }
    EXPECT_GT(clean_checked, 3000u);
}
