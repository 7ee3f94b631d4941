#include "ftcoll/simnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace ftcoll
{
    namespace
    {
        std::string blocked_message(const std::vector<ProcessId> &blocked)
        {
            std::string out = "deadlock: processes blocked with no pending events:";
            for (auto p : blocked)
            {
                out += ' ';
                out += std::to_string(p);
            }
            return out;
        }
    } // namespace

    DeadlockDetected::DeadlockDetected(std::vector<ProcessId> blocked, Trace trace)
        : Error(blocked_message(blocked)), blocked_(std::move(blocked)), trace_(std::move(trace))
    {
    }

    struct Simulator::WaitAwaiter
    {
        Simulator &sim;
        ProcessId self;

        bool await_ready() { return sim.try_complete_wait(self); }
        void await_suspend(std::coroutine_handle<> h)
        {
            auto &pr = sim.procs_[self];
            pr.waiter = h;
            pr.status = Status::blocked;
        }
        RecvResult await_resume()
        {
            auto &pr = sim.procs_[self];
            RecvResult r = std::move(*pr.wait_result);
            pr.wait_result.reset();
            pr.wait.reset();
            return r;
        }
    };

    // Parks a process that crashed at a send; it is never resumed.
    struct Simulator::HaltAwaiter
    {
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<>) const noexcept {}
        void await_resume() const noexcept {}
    };

    class Simulator::Endpoint final : public Transport, public FailureMonitor
    {
    public:
        Endpoint(Simulator &sim, ProcessId self) : sim_(sim), self_(self) {}

        ProcessId self() const override { return self_; }
        std::size_t size() const override { return sim_.procs_.size(); }

        Task<void> send(Envelope env) override
        {
            if (!sim_.do_send(self_, std::move(env)))
            {
                co_await HaltAwaiter{};
            }
        }

        Task<RecvResult> recv_from(ProcessId sender, OpId op, PhaseSet phases) override
        {
            std::vector<ProcessId> one(1, sender);
            RecvResult r = co_await recv_any(std::move(one), op, phases);
            co_return r;
        }

        Task<RecvResult> recv_any(std::vector<ProcessId> candidates, OpId op, PhaseSet phases) override
        {
            if (candidates.empty())
            {
                throw std::invalid_argument("recv_any needs at least one candidate");
            }
            sim_.procs_[self_].wait = Wait{std::move(candidates), op, phases};
            RecvResult r = co_await WaitAwaiter{sim_, self_};
            co_return r;
        }

        FailureMonitor &monitor() override { return *this; }
        bool confirm_failed(ProcessId p) override { return sim_.confirmed(self_, p); }

        void record_init(OpId op, std::string note) override
        {
            sim_.record(EventKind::init, self_, std::nullopt, op, std::nullopt, std::move(note));
        }
        void record_deliver(OpId op, std::string note) override
        {
            sim_.record(EventKind::deliver, self_, std::nullopt, op, std::nullopt, std::move(note));
        }

    private:
        Simulator &sim_;
        ProcessId self_;
    };

    Simulator::Simulator(std::size_t n, FailureScript script, SimConfig cfg)
        : script_(std::move(script)), cfg_(cfg), rng_(cfg.seed), procs_(n),
          inflight_(n, std::vector<std::uint64_t>(n, 0)), last_arrival_(n, std::vector<std::uint64_t>(n, 0))
    {
        if (n == 0)
        {
            throw std::invalid_argument("simulation needs at least one process");
        }
        if (cfg_.latency_min > cfg_.latency_max)
        {
            throw std::invalid_argument("latency_min exceeds latency_max");
        }
        for (const auto &[p, point] : script_.entries())
        {
            if (p >= n)
            {
                throw std::invalid_argument("failure script names process " + std::to_string(p) + " outside 0.." +
                                            std::to_string(n - 1));
            }
        }
        for (std::size_t p = 0; p < n; ++p)
        {
            procs_[p].endpoint = std::make_unique<Endpoint>(*this, static_cast<ProcessId>(p));
        }
    }

    Simulator::~Simulator()
    {
        // Coroutine frames reference endpoints; drop them first.
        for (auto &pr : procs_)
        {
            pr.task = Task<void>{};
        }
    }

    std::uint64_t Simulator::draw(std::uint64_t lo, std::uint64_t hi)
    {
        if (lo == hi)
        {
            return lo;
        }
        return lo + rng_() % (hi - lo + 1);
    }

    void Simulator::record(EventKind kind, ProcessId actor, std::optional<ProcessId> peer, OpId op,
                           std::optional<Phase> phase, std::string note)
    {
        TraceEvent e;
        e.seq = trace_.events.size();
        e.time = now_;
        e.kind = kind;
        e.actor = actor;
        e.peer = peer;
        e.op_id = op;
        e.phase = phase;
        e.note = std::move(note);
        trace_.events.push_back(std::move(e));
    }

    bool Simulator::do_send(ProcessId from, Envelope env)
    {
        const auto n = procs_.size();
        if (env.from != from || env.to >= n || env.to == from)
        {
            throw std::invalid_argument("envelope " + std::to_string(env.from) + "->" + std::to_string(env.to) +
                                        " sent by process " + std::to_string(from));
        }
        auto &pr = procs_[from];
        if (fails_before_sending(script_, from, pr.sent))
        {
            mark_failed(from, "after_sends=" + std::to_string(pr.sent));
            return false;
        }
        record(EventKind::send, from, env.to, env.op_id, env.phase, envelope_note(env.payload));
        const auto to = env.to;
        const auto at = std::max(now_ + draw(cfg_.latency_min, cfg_.latency_max), last_arrival_[from][to]);
        last_arrival_[from][to] = at;
        ++inflight_[from][to];
        Event ev;
        ev.time = at;
        ev.order = order_++;
        ev.arrival = std::move(env);
        events_.push(std::move(ev));
        ++pr.sent;
        return true;
    }

    bool Simulator::confirmed(ProcessId observer, ProcessId p) const
    {
        return procs_[p].status == Status::failed && inflight_[p][observer] == 0;
    }

    bool Simulator::try_complete_wait(ProcessId p)
    {
        auto &pr = procs_[p];
        const Wait &w = *pr.wait;
        for (auto it = pr.mailbox.begin(); it != pr.mailbox.end(); ++it)
        {
            if (it->op_id == w.op && w.phases.contains(it->phase) &&
                std::find(w.candidates.begin(), w.candidates.end(), it->from) != w.candidates.end())
            {
                pr.wait_result = RecvResult{it->from, std::move(*it)};
                pr.mailbox.erase(it);
                return true;
            }
        }
        for (auto c : w.candidates)
        {
            if (confirmed(p, c))
            {
                record(EventKind::confirm_failed, p, c, w.op, std::nullopt, "");
                pr.wait_result = RecvResult{c, std::nullopt};
                return true;
            }
        }
        return false;
    }

    void Simulator::mark_failed(ProcessId p, std::string note)
    {
        procs_[p].status = Status::failed;
        record(EventKind::fail, p, std::nullopt, 0, std::nullopt, std::move(note));
    }

    void Simulator::reevaluate(ProcessId p)
    {
        auto &pr = procs_[p];
        if (pr.status == Status::blocked && try_complete_wait(p))
        {
            pr.status = Status::runnable;
            ready_.push_back(p);
        }
    }

    void Simulator::reevaluate_all()
    {
        for (std::size_t p = 0; p < procs_.size(); ++p)
        {
            reevaluate(static_cast<ProcessId>(p));
        }
    }

    void Simulator::resume(ProcessId p, const Entry &entry)
    {
        auto &pr = procs_[p];
        if (pr.status == Status::failed)
        {
            return;
        }
        pr.status = Status::runnable;
        if (!pr.started)
        {
            pr.started = true;
            pr.task = entry(*pr.endpoint);
            pr.task.handle().resume();
        }
        else
        {
            std::exchange(pr.waiter, {}).resume();
        }

        if (pr.status == Status::failed)
        {
            reevaluate_all();
            return;
        }
        if (pr.task.done())
        {
            try
            {
                pr.task.result();
                pr.status = Status::done;
            }
            catch (const std::exception &e)
            {
                pr.abort = e.what();
                mark_failed(p, abort_note(e.what()));
                reevaluate_all();
            }
        }
    }

    Trace Simulator::run(const Entry &entry)
    {
        if (ran_)
        {
            throw std::logic_error("a simulator runs once");
        }
        ran_ = true;

        for (std::size_t p = 0; p < procs_.size(); ++p)
        {
            if (script_.is_preoperational(static_cast<ProcessId>(p)))
            {
                mark_failed(static_cast<ProcessId>(p), "pre");
            }
        }
        for (std::size_t p = 0; p < procs_.size(); ++p)
        {
            if (procs_[p].status == Status::failed)
            {
                continue;
            }
            Event ev;
            ev.time = cfg_.start_jitter == 0 ? 0 : draw(0, cfg_.start_jitter);
            ev.order = order_++;
            ev.start = static_cast<ProcessId>(p);
            events_.push(std::move(ev));
        }

        for (;;)
        {
            while (!ready_.empty())
            {
                const auto p = ready_.front();
                ready_.pop_front();
                resume(p, entry);
            }
            if (events_.empty())
            {
                break;
            }
            Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            if (ev.start)
            {
                ready_.push_back(*ev.start);
                continue;
            }
            Envelope &env = *ev.arrival;
            --inflight_[env.from][env.to];
            auto &dst = procs_[env.to];
            if (dst.status == Status::failed)
            {
                continue;
            }
            record(EventKind::recv, env.to, env.from, env.op_id, env.phase, envelope_note(env.payload));
            const auto to = env.to;
            dst.mailbox.push_back(std::move(env));
            reevaluate(to);
        }

        std::vector<ProcessId> blocked;
        for (std::size_t p = 0; p < procs_.size(); ++p)
        {
            if (procs_[p].status == Status::blocked)
            {
                blocked.push_back(static_cast<ProcessId>(p));
            }
        }
        if (!blocked.empty())
        {
            throw DeadlockDetected(std::move(blocked), trace_);
        }
        return std::move(trace_);
    }
} // namespace ftcoll
