#pragma once

#include "ftcoll/scenario.hpp"
#include "ftcoll/task.hpp"
#include "ftcoll/trace.hpp"
#include "ftcoll/transport.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ftcoll
{
    /// Operation id used for the top-level collective of a scenario run.
    inline constexpr OpId scenario_op_id = 1;

    /// Runs the scenario's collective at `net.self()`. `result` receives the
    /// delivered value (reduce: root only).
    Task<void> run_collective(Transport &net, Scenario scenario, Value input, std::optional<Value> &result);

    struct ProcessOutcome
    {
        bool failed = false;
        std::optional<Value> value;
        std::optional<std::string> abort; // set when the protocol threw
    };

    struct SimRun
    {
        Trace trace;
        std::vector<ProcessOutcome> outcomes;
    };

    /// Simulates the scenario. Throws DeadlockDetected.
    SimRun simulate(const Scenario &scenario);
    SimRun simulate(const Scenario &scenario, const std::vector<Value> &inputs);
} // namespace ftcoll
