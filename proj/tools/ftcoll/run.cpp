#include "commands.hpp"

#include "ftcoll/oracle.hpp"
#include "ftcoll/runner.hpp"
#include "ftcoll/tcpnet/cluster.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ftcoll::cli
{
    namespace fs = std::filesystem;

    namespace
    {
        std::string read_file(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw ScenarioError("cannot read " + path);
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        std::string format_set(const std::vector<ProcessId> &ids)
        {
            std::string out = "{";
            for (std::size_t i = 0; i < ids.size(); ++i)
            {
                out += (i ? "," : "") + std::to_string(ids[i]);
            }
            return out + "}";
        }

        SimRun run_over_tcp(const Scenario &s, const RunOptions &opt, std::ostream &out)
        {
            std::string dir;
            if (opt.workdir)
            {
                dir = *opt.workdir;
            }
            else
            {
                std::string tmpl = (fs::temp_directory_path() / "ftcoll-XXXXXX").string();
                if (::mkdtemp(tmpl.data()) == nullptr)
                {
                    throw tcp::ClusterError("cannot create a work directory");
                }
                dir = tmpl;
            }
            tcp::ClusterOptions copt;
            copt.worker_exe = fs::read_symlink("/proc/self/exe").string();
            copt.workdir = dir;
            auto run = tcp::run_cluster(s, copt);
            if (!opt.quiet)
            {
                out << "worker traces in " << dir << "\n";
            }
            return SimRun{std::move(run.trace), std::move(run.outcomes)};
        }

        void print_report(const Scenario &s, const SimRun &run, std::ostream &out)
        {
            out << "scenario n=" << s.n << " f=" << s.f << " op=" << s.op << " collective=" << to_string(s.collective)
                << " scheme=" << to_string(s.scheme) << " transport=" << to_string(s.transport) << "\n";
            for (ProcessId p = 0; p < s.n; ++p)
            {
                const auto &o = run.outcomes[p];
                if (o.value)
                {
                    out << "result " << p << " " << format_value(*o.value) << "\n";
                    if (auto d = decode_inclusion(*o.value, s))
                    {
                        out << "  included " << format_set(d->included())
                            << (d->exactly_once() ? " exactly once" : " with repeats")
                            << (d->foreign ? " plus foreign content" : "") << "\n";
                    }
                }
                else if (o.abort)
                {
                    out << "result " << p << " aborted: " << *o.abort << "\n";
                }
                else if (o.failed)
                {
                    out << "result " << p << " failed\n";
                }
            }
            const auto c = count_messages(run.trace);
            out << "messages up-correction=" << c.up_correction << " tree=" << c.tree
                << " broadcast-tree=" << c.broadcast_tree << " broadcast-correction=" << c.broadcast_correction
                << " total=" << c.total() << "\n";
            out << "failure-free formula up-correction=" << expected_upcorrection_messages(s.n, s.f)
                << " tree=" << expected_tree_messages(s.n) << "\n";
        }
    } // namespace

    int cmd_run(const RunOptions &opt, std::ostream &out)
    {
        auto s = load_scenario(opt.scenario_path);
        if (opt.inputs)
        {
            auto kind = parse_input_kind(*opt.inputs);
            if (!kind)
            {
                throw ScenarioError("unknown input kind '" + *opt.inputs + "'");
            }
            s.inputs = *kind;
        }
        if (opt.inputs_file)
        {
            s.inputs = InputKind::file;
            s.inputs_file = *opt.inputs_file;
        }
        if (opt.transport)
        {
            auto kind = parse_transport_kind(*opt.transport);
            if (!kind)
            {
                throw ScenarioError("unknown transport '" + *opt.transport + "'");
            }
            s.transport = *kind;
        }
        if (opt.seed)
        {
            s.sim.seed = *opt.seed;
        }
        validate(s);

        const auto run = s.transport == TransportKind::tcp ? run_over_tcp(s, opt, out) : simulate(s);
        if (opt.trace_path)
        {
            std::ofstream t(*opt.trace_path, std::ios::binary | std::ios::trunc);
            t << run.trace.to_text();
            if (!t)
            {
                throw ScenarioError("cannot write " + *opt.trace_path);
            }
        }
        const auto verdict = check_trace(run.trace, s);
        if (opt.quiet)
        {
            const auto text = verdict.render();
            out << text.substr(text.rfind("verdict"));
        }
        else
        {
            print_report(s, run, out);
            out << verdict.render();
        }
        return verdict.pass ? exit_pass : exit_violation;
    }

    int cmd_check(const std::string &trace_path, const std::string &scenario_path, std::ostream &out)
    {
        const auto s = load_scenario(scenario_path);
        const auto trace = Trace::parse(read_file(trace_path));
        const auto verdict = check_trace(trace, s);
        out << verdict.render();
        return verdict.pass ? exit_pass : exit_violation;
    }
} // namespace ftcoll::cli
