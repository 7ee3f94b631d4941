#include "ftcoll/oracle.hpp"
#include "ftcoll/runner.hpp"
#include "ftcoll/tcpnet/frame.hpp"

#include <benchmark/benchmark.h>

using namespace ftcoll;

namespace
{
    Scenario make(std::int64_t n, std::int64_t f, Collective c)
    {
        Scenario s;
        s.n = static_cast<std::size_t>(n);
        s.f = static_cast<std::uint32_t>(f);
        s.collective = c;
        return s;
    }

    void BM_ReduceFailureFree(benchmark::State &state)
    {
        const auto s = make(state.range(0), state.range(1), Collective::reduce);
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(simulate(s));
        }
        state.counters["messages"] = static_cast<double>(count_messages(simulate(s).trace).total());
    }
    BENCHMARK(BM_ReduceFailureFree)->ArgsProduct({{16, 64, 256}, {0, 2, 8}});

    void BM_ReduceWithFailures(benchmark::State &state)
    {
        auto s = make(state.range(0), 2, Collective::reduce);
        s.script.fail_pre(1);
        s.script.fail_after_sends(static_cast<ProcessId>(s.n / 2), 1);
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(simulate(s));
        }
    }
    BENCHMARK(BM_ReduceWithFailures)->Arg(16)->Arg(64)->Arg(256);

    void BM_AllreduceRotation(benchmark::State &state)
    {
        auto s = make(state.range(0), state.range(1), Collective::allreduce);
        for (ProcessId p = 0; p < static_cast<ProcessId>(s.f); ++p)
        {
            s.script.fail_pre(p);
        }
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(simulate(s));
        }
        state.counters["messages"] = static_cast<double>(count_messages(simulate(s).trace).total());
    }
    BENCHMARK(BM_AllreduceRotation)->ArgsProduct({{16, 64}, {0, 1, 3}});

    void BM_OracleCheck(benchmark::State &state)
    {
        auto s = make(state.range(0), 2, Collective::reduce);
        s.script.fail_pre(3);
        const auto run = simulate(s);
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(check_trace(run.trace, s));
        }
    }
    BENCHMARK(BM_OracleCheck)->Arg(16)->Arg(62);

    void BM_FrameRoundTrip(benchmark::State &state)
    {
        Envelope e;
        e.op_id = 42;
        e.from = 3;
        e.to = 4;
        e.phase = Phase::tree;
        e.payload.value.assign(static_cast<std::size_t>(state.range(0)), 7);
        e.payload.failinfo = FailureInfo(FailedList{{1, 5, 9}});
        for (auto _ : state)
        {
            benchmark::DoNotOptimize(tcp::decode_frame(tcp::encode_frame(e)));
        }
    }
    BENCHMARK(BM_FrameRoundTrip)->Arg(1)->Arg(64)->Arg(1024);
} // namespace

BENCHMARK_MAIN();
