#pragma once

#include "ftcoll/runner.hpp"
#include "ftcoll/scenario.hpp"
#include "ftcoll/tcpnet/tcp_transport.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace ftcoll::tcp
{
    inline constexpr int worker_crash_exit = 3;
    inline constexpr int worker_abort_exit = 4;

    struct WorkerOptions
    {
        ProcessId pid = 0;
        std::string scenario_path;
        std::string deployment_path;
        std::string trace_path;
        std::optional<std::uint64_t> fail_after_sends;
        /// Answer probes without running the collective until stdin closes.
        bool idle = false;
    };

    /// One process of a TCP run. Talks to the launcher over stdin/stdout:
    /// prints `ready` once listening, then `result <value|->` or
    /// `abort <reason>`, and keeps answering probes until stdin closes.
    /// Returns the process exit code.
    int run_worker(const WorkerOptions &opt, std::ostream &out);

    class ClusterError : public Error
    {
    public:
        using Error::Error;
    };

    struct ClusterOptions
    {
        /// Executable accepting `worker --pid .. --scenario .. --deployment ..
        /// --trace .. [--fail-after-sends s] [--idle]`.
        std::string worker_exe;
        std::string workdir;
        std::string host = "127.0.0.1";
        std::chrono::seconds timeout{120};
    };

    struct ClusterRun
    {
        Trace trace;
        std::vector<ProcessOutcome> outcomes;
    };

    /// Runs the scenario with one worker process per participant on
    /// localhost. Preoperational failures are workers started idle and
    /// SIGKILLed before anyone else starts; after_sends failures are passed
    /// as --fail-after-sends. Per-process traces are merged by time.
    ClusterRun run_cluster(const Scenario &s, const ClusterOptions &opt);
} // namespace ftcoll::tcp
