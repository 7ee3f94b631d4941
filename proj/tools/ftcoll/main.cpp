#include "commands.hpp"

#include "ftcoll/tcpnet/cluster.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ftcoll;

int main(int argc, char **argv)
{
    CLI::App app{"Fault-tolerant reduce and allreduce: simulate, sweep, check and run over TCP"};
    app.require_subcommand(1);

    cli::RunOptions run;
    auto *run_cmd = app.add_subcommand("run", "Run a scenario file and check the trace");
    run_cmd->add_option("scenario", run.scenario_path, "Scenario file")->required();
    run_cmd->add_option("--trace", run.trace_path, "Write the trace here");
    run_cmd->add_flag("--quiet", run.quiet, "Print only the verdict line");
    run_cmd->add_option("--inputs", run.inputs, "probe | unit | ids | ones | file");
    run_cmd->add_option("--inputs-file", run.inputs_file, "Per-process inputs, one line each");
    run_cmd->add_option("--transport", run.transport, "sim | tcp");
    run_cmd->add_option("--seed", run.seed, "Override the simulator seed");
    run_cmd->add_option("--workdir", run.workdir, "Directory for TCP deployment files and traces");

    cli::SweepOptions sweep;
    auto *sweep_cmd = app.add_subcommand("sweep", "Check message counts and random failures over an (n, f) grid");
    sweep_cmd->add_option("--n-range", sweep.n_range, "a..b")->capture_default_str();
    sweep_cmd->add_option("--f-range", sweep.f_range, "a..b")->capture_default_str();
    sweep_cmd->add_option("--trials", sweep.trials, "Random failure trials per cell and collective")
        ->capture_default_str();
    sweep_cmd->add_option("--seed", sweep.seed)->capture_default_str();
    sweep_cmd->add_option("--collective", sweep.collective, "reduce | allreduce | both")->capture_default_str();
    sweep_cmd->add_option("--scheme", sweep.scheme, "list | count | bit")->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads")->capture_default_str();
    sweep_cmd->add_option("--json", sweep.json_path, "Write per-cell records as JSON");

    std::string check_trace_path;
    std::string check_scenario_path;
    auto *check_cmd = app.add_subcommand("check", "Re-run the oracle on a recorded trace");
    check_cmd->add_option("trace", check_trace_path)->required();
    check_cmd->add_option("scenario", check_scenario_path)->required();

    tcp::WorkerOptions worker;
    auto *worker_cmd = app.add_subcommand("worker", "One process of a TCP run (started by `run`)");
    worker_cmd->add_option("--pid", worker.pid)->required();
    worker_cmd->add_option("--scenario", worker.scenario_path)->required();
    worker_cmd->add_option("--deployment", worker.deployment_path)->required();
    worker_cmd->add_option("--trace", worker.trace_path)->required();
    worker_cmd->add_option("--fail-after-sends", worker.fail_after_sends);
    worker_cmd->add_flag("--idle", worker.idle);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return cli::exit_usage;
    }

    try
    {
        if (*run_cmd)
        {
            return cli::cmd_run(run, std::cout);
        }
        if (*sweep_cmd)
        {
            return cli::cmd_sweep(sweep, std::cout);
        }
        if (*check_cmd)
        {
            return cli::cmd_check(check_trace_path, check_scenario_path, std::cout);
        }
        return tcp::run_worker(worker, std::cout);
    }
    catch (const ScenarioError &e)
    {
        std::cerr << "ftcoll: " << e.what() << "\n";
        return cli::exit_usage;
    }
    catch (const MalformedTrace &e)
    {
        std::cerr << "ftcoll: malformed trace: " << e.what() << "\n";
        return cli::exit_usage;
    }
    catch (const std::exception &e)
    {
        std::cerr << "ftcoll: " << e.what() << "\n";
        return cli::exit_usage;
    }
}
