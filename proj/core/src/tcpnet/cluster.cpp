#include "ftcoll/tcpnet/cluster.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace ftcoll::tcp
{
    namespace fs = std::filesystem;

    namespace
    {
        using Clock = std::chrono::steady_clock;

        void write_file(const fs::path &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out << text;
            if (!out)
            {
                throw ClusterError("cannot write " + path.string());
            }
        }

        std::string read_file(const fs::path &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw ClusterError("cannot read " + path.string());
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        void wait_for_stdin_eof()
        {
            char buf[256];
            while (true)
            {
                const auto n = ::read(0, buf, sizeof(buf));
                if (n == 0 || (n < 0 && errno != EINTR))
                {
                    return;
                }
            }
        }

        struct Child
        {
            ProcessId process = 0;
            pid_t pid = -1;
            int in_fd = -1;
            int out_fd = -1;
            std::string buf;
            std::vector<std::string> lines;
            bool eof = false;
            int status = -1;
        };

        Child spawn(const std::vector<std::string> &args)
        {
            int in[2];
            int out[2];
            if (::pipe2(in, O_CLOEXEC) < 0 || ::pipe2(out, O_CLOEXEC) < 0)
            {
                throw ClusterError(std::string("pipe: ") + std::strerror(errno));
            }
            posix_spawn_file_actions_t actions;
            posix_spawn_file_actions_init(&actions);
            posix_spawn_file_actions_adddup2(&actions, in[0], 0);
            posix_spawn_file_actions_adddup2(&actions, out[1], 1);
            std::vector<char *> argv;
            for (const auto &a : args)
            {
                argv.push_back(const_cast<char *>(a.c_str()));
            }
            argv.push_back(nullptr);
            Child c;
            const int rc = ::posix_spawn(&c.pid, argv[0], &actions, nullptr, argv.data(), environ);
            posix_spawn_file_actions_destroy(&actions);
            ::close(in[0]);
            ::close(out[1]);
            if (rc != 0)
            {
                ::close(in[1]);
                ::close(out[0]);
                throw ClusterError("cannot start " + args[0] + ": " + std::strerror(rc));
            }
            c.in_fd = in[1];
            c.out_fd = out[0];
            return c;
        }

        /// Reads whatever is available; false once the deadline passes.
        bool pump(std::vector<Child *> &children, Clock::time_point deadline)
        {
            std::vector<pollfd> fds;
            for (auto *c : children)
            {
                fds.push_back(pollfd{c->out_fd, POLLIN, 0});
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            if (left <= 0)
            {
                return false;
            }
            if (::poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(left, 200))) <= 0)
            {
                return true;
            }
            for (std::size_t i = 0; i < fds.size(); ++i)
            {
                if (fds[i].revents == 0)
                {
                    continue;
                }
                auto &c = *children[i];
                char chunk[4096];
                const auto n = ::read(c.out_fd, chunk, sizeof(chunk));
                if (n <= 0)
                {
                    c.eof = true;
                    continue;
                }
                c.buf.append(chunk, static_cast<std::size_t>(n));
                for (auto nl = c.buf.find('\n'); nl != std::string::npos; nl = c.buf.find('\n'))
                {
                    c.lines.push_back(c.buf.substr(0, nl));
                    c.buf.erase(0, nl + 1);
                }
            }
            return true;
        }

        bool reported(const Child &c)
        {
            return c.eof || std::any_of(c.lines.begin(), c.lines.end(), [](const std::string &l) {
                       return l.rfind("result ", 0) == 0 || l.rfind("abort ", 0) == 0;
                   });
        }

        void reap(Child &c)
        {
            if (c.in_fd >= 0)
            {
                ::close(c.in_fd);
                c.in_fd = -1;
            }
            if (c.out_fd >= 0)
            {
                ::close(c.out_fd);
                c.out_fd = -1;
            }
            if (c.pid > 0)
            {
                ::waitpid(c.pid, &c.status, 0);
                c.pid = -1;
            }
        }

        void kill_all(std::vector<Child> &children)
        {
            for (auto &c : children)
            {
                if (c.pid > 0)
                {
                    ::kill(c.pid, SIGKILL);
                }
                reap(c);
            }
        }

        std::uint64_t now_ns()
        {
            return static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch()).count());
        }
    } // namespace

    int run_worker(const WorkerOptions &opt, std::ostream &out)
    {
        const auto s = load_scenario(opt.scenario_path);
        const auto registry = Registry::load(opt.deployment_path);
        if (registry.size() != s.n)
        {
            throw ClusterError("deployment lists " + std::to_string(registry.size()) + " processes, scenario has " +
                               std::to_string(s.n));
        }
        const int listen_fd = bind_listener(registry.at(opt.pid));
        if (opt.idle)
        {
            // Live but silent: answers probes, sends nothing.
            TcpTransport net(opt.pid, registry, TcpConfig{}, listen_fd);
            out << "ready" << std::endl;
            wait_for_stdin_eof();
            return 0;
        }
        out << "ready" << std::endl;

        const auto write_trace = [&](const Trace &t) { write_file(opt.trace_path, t.to_text()); };
        TcpConfig cfg;
        cfg.probe_timeout = Millis(s.probe_timeout_ms);
        cfg.probe_attempts = s.probe_retries;
        cfg.fail_after_sends = opt.fail_after_sends;
        TcpTransport *self = nullptr;
        cfg.on_crash = [&] {
            self->flush();
            write_trace(self->trace());
            out << std::flush;
            ::_exit(worker_crash_exit);
        };
        TcpTransport net(opt.pid, registry, cfg, listen_fd);
        self = &net;

        const auto inputs = make_inputs(s);
        std::optional<Value> result;
        try
        {
            run_inline(run_collective(net, s, inputs[opt.pid], result));
        }
        catch (const std::exception &e)
        {
            net.record_fail(abort_note(e.what()));
            net.crash();
            write_trace(net.trace());
            out << "abort " << e.what() << std::endl;
            return worker_abort_exit;
        }
        out << "result " << (result ? format_value(*result) : "-") << std::endl;
        wait_for_stdin_eof();
        write_trace(net.trace());
        return 0;
    }

    ClusterRun run_cluster(const Scenario &s, const ClusterOptions &opt)
    {
        validate(s);
        const fs::path dir(opt.workdir);
        fs::create_directories(dir);

        // Reserve distinct ports by holding listeners open while choosing.
        std::vector<Address> addrs;
        std::vector<int> held;
        for (std::size_t p = 0; p < s.n; ++p)
        {
            held.push_back(bind_listener(Address{opt.host, 0}));
            addrs.push_back(Address{opt.host, listening_port(held.back())});
        }
        for (int fd : held)
        {
            ::close(fd);
        }
        const auto deployment = dir / "deployment";
        const auto scenario = dir / "scenario";
        write_file(deployment, Registry(addrs).format());
        write_file(scenario, format_scenario(s));
        const auto trace_path = [&](ProcessId p) { return dir / ("trace." + std::to_string(p)); };
        const auto args = [&](ProcessId p) {
            return std::vector<std::string>{opt.worker_exe, "worker",         "--pid",      std::to_string(p),
                                            "--scenario",   scenario.string(), "--deployment", deployment.string(),
                                            "--trace",      trace_path(p).string()};
        };

        const auto deadline = Clock::now() + opt.timeout;
        std::vector<Child> children;
        try
        {
            for (ProcessId p = 0; p < s.n; ++p)
            {
                if (!s.script.is_preoperational(p))
                {
                    continue;
                }
                auto a = args(p);
                a.push_back("--idle");
                auto c = spawn(a);
                std::vector<Child *> one{&c};
                while (c.lines.empty() && !c.eof)
                {
                    if (!pump(one, deadline))
                    {
                        ::kill(c.pid, SIGKILL);
                        reap(c);
                        throw ClusterError("idle worker " + std::to_string(p) + " never became ready");
                    }
                }
                ::kill(c.pid, SIGKILL);
                reap(c);
                TraceEvent e;
                e.time = now_ns();
                e.kind = EventKind::fail;
                e.actor = p;
                e.note = "pre";
                Trace t;
                t.events.push_back(e);
                write_file(trace_path(p), t.to_text());
            }

            for (ProcessId p = 0; p < s.n; ++p)
            {
                if (s.script.is_preoperational(p))
                {
                    continue;
                }
                auto a = args(p);
                if (auto point = s.script.point(p))
                {
                    a.push_back("--fail-after-sends");
                    a.push_back(std::to_string(std::get<AfterSends>(*point).sends));
                }
                children.push_back(spawn(a));
                children.back().process = p;
            }

            std::vector<Child *> pending;
            for (auto &c : children)
            {
                pending.push_back(&c);
            }
            while (!pending.empty())
            {
                if (!pump(pending, deadline))
                {
                    throw ClusterError("workers did not finish within " + std::to_string(opt.timeout.count()) + " s");
                }
                std::erase_if(pending, [](const Child *c) { return reported(*c); });
            }
        }
        catch (...)
        {
            kill_all(children);
            throw;
        }
        for (auto &c : children)
        {
            reap(c);
        }

        ClusterRun run;
        run.outcomes.resize(s.n);
        std::vector<Trace> parts;
        for (ProcessId p = 0; p < s.n; ++p)
        {
            if (s.script.is_preoperational(p))
            {
                run.outcomes[p].failed = true;
            }
        }
        for (const auto &c : children)
        {
            auto &o = run.outcomes[c.process];
            const int code = WIFEXITED(c.status) ? WEXITSTATUS(c.status) : -1;
            for (const auto &line : c.lines)
            {
                if (line.rfind("result ", 0) == 0 && line != "result -")
                {
                    o.value = parse_value(line.substr(7));
                }
                else if (line.rfind("abort ", 0) == 0)
                {
                    o.abort = line.substr(6);
                }
            }
            if (code != 0 && code != worker_crash_exit && code != worker_abort_exit)
            {
                throw ClusterError("worker " + std::to_string(c.process) + " exited with status " +
                                   std::to_string(c.status));
            }
            o.failed = code != 0;
        }
        for (ProcessId p = 0; p < s.n; ++p)
        {
            parts.push_back(Trace::parse(read_file(trace_path(p))));
        }
        run.trace = merge_by_time(parts);
        return run;
    }
} // namespace ftcoll::tcp
