// One line per acceptance criterion; exit status 1 if any criterion fails.

#include "ftcoll/oracle.hpp"
#include "ftcoll/runner.hpp"
#include "ftcoll/tcpnet/cluster.hpp"
#include "generators.hpp"

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace ftcoll;
namespace fs = std::filesystem;

namespace
{
    using Clock = std::chrono::steady_clock;

    struct Outcome
    {
        bool pass = true;
        std::string detail;
    };

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    std::vector<fs::path> &temp_dirs()
    {
        static std::vector<fs::path> dirs;
        return dirs;
    }

    std::string temp_dir(const std::string &tag)
    {
        std::string tmpl = (fs::temp_directory_path() / ("ftcoll-" + tag + "-XXXXXX")).string();
        if (::mkdtemp(tmpl.data()) == nullptr)
        {
            throw std::runtime_error("mkdtemp failed");
        }
        temp_dirs().push_back(tmpl);
        return tmpl;
    }

    std::string read_file(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::set<ProcessId> failed_in(const Trace &t)
    {
        std::set<ProcessId> out;
        for (const auto &e : t.events)
        {
            if (e.kind == EventKind::fail)
            {
                out.insert(e.actor);
            }
        }
        return out;
    }

    std::optional<std::string> tree_value(const Trace &t, ProcessId from)
    {
        for (const auto &e : t.events)
        {
            if (e.kind == EventKind::send && e.actor == from && e.phase == Phase::tree)
            {
                return std::string(note_field(e.note, "v").value_or(""));
            }
        }
        return std::nullopt;
    }

    Scenario worked_example()
    {
        return parse_scenario("n 7\nf 1\nop sum\ninputs ids\nfail 1 pre\n");
    }

    // The 7 and 11 partial sums of {3,4} and {5,6}, as forwarded by each
    // member of those pairs.
    Outcome worked_example_shape(const Trace &t, const std::optional<Value> &root_value)
    {
        Outcome o;
        std::ostringstream d;
        const bool root20 = root_value == Value{20};
        d << "root=" << (root_value ? format_value(*root_value) : "none");
        for (auto [p, expect] : {std::pair<ProcessId, const char *>{3, "7"}, {4, "7"}, {5, "11"}, {6, "11"}})
        {
            const auto v = tree_value(t, p);
            d << " " << p << ":" << v.value_or("-");
            o.pass = o.pass && v == expect;
        }
        o.pass = o.pass && root20;
        o.detail = d.str();
        return o;
    }

    Outcome criterion1()
    {
        const auto t0 = Clock::now();
        const auto run = simulate(worked_example());
        auto o = worked_example_shape(run.trace, run.outcomes[0].value);
        const auto took = seconds_since(t0);
        o.pass = o.pass && took < 1.0;
        o.detail += " tree sends of 3,4 carry 7 and of 5,6 carry 11";
        return o;
    }

    // Up-correction messages by enumerating groups: non-root processes fill
    // groups of f+1 in id order, the root joins the last, incomplete one,
    // and a group of g members exchanges g(g-1) messages.
    std::uint64_t enumerate_upcorrection(std::uint64_t n, std::uint64_t f)
    {
        std::vector<std::uint64_t> group_size((n - 1) / (f + 1) + 1, 0);
        for (std::uint64_t p = 1; p < n; ++p)
        {
            ++group_size[(p - 1) / (f + 1)];
        }
        ++group_size.back();
        std::uint64_t total = 0;
        for (auto g : group_size)
        {
            total += g * (g - 1);
        }
        return total;
    }

    Outcome criterion2()
    {
        const auto t0 = Clock::now();
        std::size_t cells = 0;
        std::ostringstream bad;
        for (std::uint64_t n = 2; n <= 64; ++n)
        {
            for (std::uint64_t f = 0; f <= 8; ++f)
            {
                Scenario s;
                s.n = n;
                s.f = static_cast<std::uint32_t>(f);
                const auto c = count_messages(simulate(s).trace);
                const auto a = (n - 1) % (f + 1) + 1;
                const auto closed = f * (f + 1) * ((n - 1) / (f + 1)) + a * (a - 1);
                if (c.up_correction != closed || c.up_correction != enumerate_upcorrection(n, f) || c.tree != n - 1)
                {
                    bad << " n=" << n << ",f=" << f << ":" << c.up_correction << "/" << closed << "," << c.tree;
                }
                ++cells;
            }
        }
        const auto took = seconds_since(t0);
        Outcome o;
        o.pass = bad.str().empty() && took < 30.0;
        o.detail = std::to_string(cells) + " failure-free cells, up-correction and tree counts exact" + bad.str();
        return o;
    }

    struct ExhaustiveStats
    {
        std::size_t runs = 0;
        std::size_t violations = 0;
        std::size_t live_root_runs = 0;
        std::size_t no_subtree_with_live_root = 0;
        std::string first_violation;
    };

    // Direct inclusion check, independent of the oracle's decoder.
    bool inclusion_ok(const Scenario &s, const SimRun &run)
    {
        const auto &v = run.outcomes[s.root].value;
        if (!v)
        {
            return true;
        }
        const auto failed = failed_in(run.trace);
        std::vector<std::int64_t> mult(s.n, 0);
        if (s.inputs == InputKind::unit)
        {
            if (v->size() != s.n)
            {
                return false;
            }
            mult = *v;
        }
        else
        {
            const auto bits = static_cast<std::uint64_t>((*v)[0]);
            if (bits >> s.n)
            {
                return false;
            }
            for (std::size_t p = 0; p < s.n; ++p)
            {
                mult[p] = (bits >> p) & 1;
            }
        }
        for (ProcessId p = 0; p < s.n; ++p)
        {
            if (mult[p] > 1 || mult[p] < 0)
            {
                return false;
            }
            if (!failed.contains(p) && mult[p] != 1)
            {
                return false;
            }
            if (s.script.is_preoperational(p) && mult[p] != 0)
            {
                return false;
            }
        }
        return true;
    }

    ExhaustiveStats exhaustive_sweep()
    {
        ExhaustiveStats st;
        for (std::size_t n = 1; n <= 12; ++n)
        {
            for (std::uint32_t f = 0; f <= 2; ++f)
            {
                Scenario base;
                base.n = n;
                base.f = f;
                const auto sends = testkit::failure_free_sends(base);
                testkit::for_each_script(n, f, sends, [&](const FailureScript &script) {
                    for (auto inputs : {InputKind::probe, InputKind::unit})
                    {
                        for (std::uint64_t seed : {1, 2, 3})
                        {
                            auto s = base;
                            s.script = script;
                            s.inputs = inputs;
                            s.sim.seed = seed;
                            s.sim.latency_max = 1 + 7 * (seed - 1);
                            const auto run = simulate(s);
                            const auto verdict = check_reduce_trace(run.trace, s);
                            ++st.runs;
                            if (!verdict.pass || !inclusion_ok(s, run))
                            {
                                if (st.violations++ == 0)
                                {
                                    st.first_violation = format_scenario(s) + verdict.render();
                                }
                            }
                            if (!script.point(s.root))
                            {
                                ++st.live_root_runs;
                                for (const auto &o : run.outcomes)
                                {
                                    if (o.abort && *o.abort == NoFailureFreeSubtree().what())
                                    {
                                        ++st.no_subtree_with_live_root;
                                    }
                                }
                            }
                        }
                    }
                });
            }
        }
        return st;
    }

    Outcome criterion3(const ExhaustiveStats &st, double took)
    {
        Outcome o;
        o.pass = st.violations == 0 && took < 600.0;
        o.detail = std::to_string(st.runs) + " runs over every script with <= f failures (n<=12, f<=2, probe and " +
                   "unit inputs, 3 seeds), " + std::to_string(st.violations) + " violations";
        if (st.violations)
        {
            std::cerr << "first exhaustive violation:\n" << st.first_violation;
        }
        return o;
    }

    Outcome criterion4(const ExhaustiveStats &st)
    {
        auto s = worked_example();
        s.script.fail_pre(2);
        const auto run = simulate(s);
        const bool raised = run.outcomes[0].abort && *run.outcomes[0].abort == NoFailureFreeSubtree().what();
        Outcome o;
        o.pass = st.no_subtree_with_live_root == 0 && raised;
        o.detail = std::to_string(st.live_root_runs) + " live-root runs raised it " +
                   std::to_string(st.no_subtree_with_live_root) + " times; worked example with 1 and 2 failed " +
                   (raised ? "raises it" : "does not raise it");
        return o;
    }

    Outcome criterion5()
    {
        const auto t0 = Clock::now();
        testkit::Gen g(2024);
        std::size_t scenarios = 0;
        std::size_t violations = 0;
        std::size_t divergent = 0;
        std::string first;
        for (int i = 0; i < 10000; ++i)
        {
            testkit::RandomScenarioLimits lim;
            lim.max_n = 32;
            lim.max_f = 4;
            lim.collective = i % 2 == 0 ? Collective::reduce : Collective::allreduce;
            auto s = random_scenario(g, lim);
            std::vector<Trace> traces;
            for (auto scheme : {Scheme::list, Scheme::count, Scheme::bit})
            {
                s.scheme = scheme;
                auto run = simulate(s);
                const auto v = check_trace(run.trace, s);
                if (!v.pass && violations++ == 0)
                {
                    first = format_scenario(s) + v.render();
                }
                traces.push_back(std::move(run.trace));
            }
            if (check_scheme_equivalence(traces[0], traces[1], traces[2]).status != PropertyStatus::pass)
            {
                ++divergent;
            }
            ++scenarios;
        }
        if (!first.empty())
        {
            std::cerr << "first randomized violation:\n" << first;
        }
        Outcome o;
        o.pass = violations == 0 && divergent == 0;
        std::ostringstream d;
        d << scenarios << " random scenarios x 3 schemes (n<=32, f<=4, reduce and allreduce): " << violations
          << " oracle violations, " << divergent << " scheme divergences (" << std::fixed << std::setprecision(1)
          << seconds_since(t0) << " s)";
        o.detail = d.str();
        return o;
    }

    Outcome criterion6()
    {
        Outcome o;
        std::size_t cases = 0;
        std::ostringstream bad;
        for (std::size_t n : {4, 7, 12, 20, 33})
        {
            for (std::uint32_t f = 1; f <= 3 && f < n; ++f)
            {
                Scenario s;
                s.n = n;
                s.f = f;
                s.collective = Collective::allreduce;
                s.inputs = InputKind::ids;
                const auto clean = count_messages(simulate(s).trace).total();
                s.script.fail_pre(0);
                const auto run = simulate(s);
                const auto rounds = testkit::reduce_rounds(run.trace);
                const auto total = count_messages(run.trace).total();
                const Value expect{static_cast<std::int64_t>(n * (n - 1) / 2)};
                bool agree = true;
                for (ProcessId p = 1; p < n; ++p)
                {
                    agree = agree && run.outcomes[p].value == expect;
                }
                if (rounds != 2 || !agree || total > (f + 1) * clean)
                {
                    bad << " n=" << n << ",f=" << f << ":rounds=" << rounds << ",msgs=" << total << "/"
                        << (f + 1) * clean;
                }
                ++cases;
            }
        }
        o.pass = bad.str().empty();
        o.detail = std::to_string(cases) +
                   " allreduce runs with candidate 0 dead: 2 reduce rounds, equal values, messages within "
                   "(f+1) x failure-free" +
                   bad.str();
        return o;
    }

    // Starts `ftcoll worker --idle` for process 0 of a one-process deployment.
    pid_t start_idle_worker(const fs::path &dir, std::uint16_t port)
    {
        {
            std::ofstream(dir / "scenario") << "n 1\nf 0\n";
            std::ofstream(dir / "deployment") << "0 127.0.0.1:" << port << "\n";
        }
        int in[2];
        if (::pipe(in) < 0)
        {
            return -1;
        }
        const pid_t pid = ::fork();
        if (pid == 0)
        {
            ::dup2(in[0], 0);
            ::close(in[1]);
            const int null = ::open("/dev/null", O_WRONLY);
            ::dup2(null, 1);
            const auto sc = (dir / "scenario").string();
            const auto dep = (dir / "deployment").string();
            const auto tr = (dir / "trace").string();
            ::execl(FTCOLL_EXE, FTCOLL_EXE, "worker", "--pid", "0", "--scenario", sc.c_str(), "--deployment",
                    dep.c_str(), "--trace", tr.c_str(), "--idle", static_cast<char *>(nullptr));
            ::_exit(127);
        }
        ::close(in[0]);
        return pid;
    }

    Outcome criterion7()
    {
        const auto t0 = Clock::now();
        Outcome o;
        std::ostringstream d;

        // Worked example with process 1 a real worker killed before the others start.
        tcp::ClusterOptions copt;
        copt.worker_exe = FTCOLL_EXE;
        copt.workdir = temp_dir("we");
        const auto we = tcp::run_cluster(worked_example(), copt);
        const auto shape = worked_example_shape(we.trace, we.outcomes[0].value);
        const auto we_verdict = check_trace(we.trace, worked_example());
        o.pass = shape.pass && we_verdict.pass;
        d << "worked example over TCP " << shape.detail << " verdict " << (we_verdict.pass ? "pass" : "fail");

        // Randomized subset, both collectives, all schemes.
        testkit::Gen g(77);
        std::size_t runs = 0;
        std::size_t violations = 0;
        for (int i = 0; i < 12; ++i)
        {
            testkit::RandomScenarioLimits lim;
            lim.max_n = 10;
            lim.max_f = 2;
            lim.collective = i % 2 == 0 ? Collective::reduce : Collective::allreduce;
            auto s = random_scenario(g, lim);
            s.scheme = static_cast<Scheme>(1 + i % 3);
            s.probe_timeout_ms = 150;
            copt.workdir = temp_dir("rnd");
            const auto run = tcp::run_cluster(s, copt);
            const auto v = check_trace(run.trace, s);
            ++runs;
            if (!v.pass)
            {
                ++violations;
                std::cerr << "TCP violation:\n" << format_scenario(s) << v.render();
            }
        }
        o.pass = o.pass && violations == 0;
        d << "; " << runs << " random TCP runs, " << violations << " violations";

        // Probe timing against a killed worker, default 500 ms x 3 budget.
        const auto dir = temp_dir("probe");
        const int hold = tcp::bind_listener(tcp::Address{"127.0.0.1", 0});
        const auto port = tcp::listening_port(hold);
        ::close(hold);
        const tcp::Address addr{"127.0.0.1", port};
        const pid_t worker = start_idle_worker(dir, port);
        bool live = false;
        for (int i = 0; i < 50 && !live; ++i)
        {
            live = tcp::probe_address(addr, 1, 0, tcp::Millis(100), 1);
        }
        const auto live_t0 = Clock::now();
        const bool live_again = tcp::probe_address(addr, 1, 0, tcp::Millis(500), 3);
        const auto live_took = seconds_since(live_t0);
        ::kill(worker, SIGKILL);
        ::waitpid(worker, nullptr, 0);
        const auto dead_t0 = Clock::now();
        const bool dead_seen_live = tcp::probe_address(addr, 1, 0, tcp::Millis(500), 3);
        const auto dead_took = seconds_since(dead_t0);
        const bool timing = live && live_again && live_took < 0.5 && !dead_seen_live && dead_took <= 2 * 1.5;
        o.pass = o.pass && timing;
        d << std::fixed << std::setprecision(3) << "; live probe " << live_took << " s, killed peer confirmed after "
          << dead_took << " s (budget 1.5 s, limit 3.0 s)";
        d << std::setprecision(1) << " (" << seconds_since(t0) << " s)";
        o.detail = d.str();
        return o;
    }

    Outcome criterion8()
    {
        testkit::Gen g(8);
        std::size_t same = 0;
        std::size_t total = 0;
        for (int i = 0; i < 500; ++i)
        {
            testkit::RandomScenarioLimits lim;
            lim.collective = i % 2 == 0 ? Collective::reduce : Collective::allreduce;
            const auto s = random_scenario(g, lim);
            const auto a = simulate(s).trace;
            const auto b = simulate(s).trace;
            same += a.digest() == b.digest() && a.to_text() == b.to_text() ? 1 : 0;
            ++total;
        }

        // Same through the command line: two runs, identical trace files.
        const auto dir = fs::path(temp_dir("det"));
        std::ofstream(dir / "s") << "n 23\nf 3\ncollective allreduce\nseed 99\nlatency 1 40\nfail 0 pre\n"
                                    "fail 9 after-sends 2\n";
        bool cli_same = true;
        for (const auto *name : {"t1", "t2"})
        {
            const auto cmd = std::string(FTCOLL_EXE) + " run --quiet " + (dir / "s").string() + " --trace " +
                             (dir / name).string() + " > /dev/null";
            cli_same = cli_same && std::system(cmd.c_str()) == 0;
        }
        const auto t1 = read_file(dir / "t1");
        cli_same = cli_same && !t1.empty() && t1 == read_file(dir / "t2");

        Outcome o;
        o.pass = same == total && cli_same;
        o.detail = std::to_string(same) + "/" + std::to_string(total) +
                   " scenarios gave identical trace digests on rerun; CLI trace files " +
                   (cli_same ? "identical" : "differ");
        return o;
    }

    bool report(int id, const std::string &name, const std::function<Outcome()> &check)
    {
        const auto t0 = Clock::now();
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception &e)
        {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail
                  << " [" << std::fixed << std::setprecision(2) << seconds_since(t0) << " s]" << std::endl;
        return o.pass;
    }
} // namespace

int main()
{
    bool ok = true;
    ok &= report(1, "worked example", criterion1);
    ok &= report(2, "failure-free message counts", criterion2);

    ExhaustiveStats st;
    double exhaustive_took = 0;
    ok &= report(3, "exactly-once inclusion", [&] {
        const auto t0 = Clock::now();
        st = exhaustive_sweep();
        exhaustive_took = seconds_since(t0);
        return criterion3(st, exhaustive_took);
    });
    ok &= report(4, "failure-free subtree exists", [&] { return criterion4(st); });
    ok &= report(5, "reduce and allreduce semantics", criterion5);
    ok &= report(6, "allreduce root rotation", criterion6);
    ok &= report(7, "TCP transport conformance", criterion7);
    ok &= report(8, "determinism", criterion8);
    std::cout << (ok ? "all criteria pass" : "some criteria fail") << std::endl;
    for (const auto &dir : temp_dirs())
    {
        std::error_code ignored;
        fs::remove_all(dir, ignored);
    }
    return ok ? 0 : 1;
}
