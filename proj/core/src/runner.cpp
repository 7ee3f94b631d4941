#include "ftcoll/runner.hpp"

#include "ftcoll/collectives.hpp"
#include "ftcoll/simnet.hpp"

namespace ftcoll
{
    Task<void> run_collective(Transport &net, Scenario scenario, Value input, std::optional<Value> &result)
    {
        const Participants who{scenario.n, 0};
        const CollectiveConfig cfg = collective_config(scenario);
        if (scenario.collective == Collective::allreduce)
        {
            AllreduceMsg msg{scenario_op_id, who, std::nullopt};
            result = co_await allreduce(net, std::move(input), msg, cfg);
            co_return;
        }
        ReduceMsg msg{scenario_op_id, who, scenario.root};
        result = co_await reduce(net, std::move(input), scenario.root, msg, cfg);
    }

    SimRun simulate(const Scenario &scenario)
    {
        return simulate(scenario, make_inputs(scenario));
    }

    SimRun simulate(const Scenario &scenario, const std::vector<Value> &inputs)
    {
        validate(scenario);
        if (inputs.size() != scenario.n)
        {
            throw ScenarioError("need one input per process");
        }
        std::vector<std::optional<Value>> results(scenario.n);
        Simulator sim(scenario.n, scenario.script, scenario.sim);
        SimRun out;
        out.trace = sim.run([&](Transport &net) {
            const auto p = net.self();
            return run_collective(net, scenario, inputs[p], results[p]);
        });
        out.outcomes.resize(scenario.n);
        for (std::size_t p = 0; p < scenario.n; ++p)
        {
            const auto pid = static_cast<ProcessId>(p);
            out.outcomes[p].failed = sim.failed(pid);
            out.outcomes[p].value = std::move(results[p]);
            out.outcomes[p].abort = sim.abort_reason(pid);
        }
        return out;
    }
} // namespace ftcoll
