#include "ftcoll/tcpnet/tcp_transport.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace ftcoll::tcp
{
    namespace
    {
        using Clock = std::chrono::steady_clock;
        constexpr Millis io_slice{100};

        std::string sys_error(const std::string &what)
        {
            return what + ": " + std::strerror(errno);
        }

        sockaddr_in resolve(const Address &a)
        {
            addrinfo hints{};
            hints.ai_family = AF_INET;
            hints.ai_socktype = SOCK_STREAM;
            addrinfo *res = nullptr;
            if (const int rc = ::getaddrinfo(a.host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr)
            {
                throw Error("cannot resolve " + a.host + ": " + ::gai_strerror(rc));
            }
            sockaddr_in out{};
            std::memcpy(&out, res->ai_addr, sizeof(out));
            ::freeaddrinfo(res);
            out.sin_port = htons(a.port);
            return out;
        }

        int remaining_ms(Clock::time_point deadline)
        {
            const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
            return static_cast<int>(std::max<long long>(left, 0));
        }

        int connect_until(const sockaddr_in &addr, Clock::time_point deadline)
        {
            const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
            if (fd < 0)
            {
                return -1;
            }
            int rc = ::connect(fd, reinterpret_cast<const sockaddr *>(&addr), sizeof(addr));
            if (rc < 0 && errno == EINPROGRESS)
            {
                pollfd p{fd, POLLOUT, 0};
                if (::poll(&p, 1, remaining_ms(deadline)) == 1)
                {
                    int err = 0;
                    socklen_t len = sizeof(err);
                    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                    rc = err == 0 ? 0 : -1;
                }
            }
            if (rc < 0)
            {
                ::close(fd);
                return -1;
            }
            ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) & ~O_NONBLOCK);
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return fd;
        }

        bool write_all(int fd, const Bytes &bytes)
        {
            std::size_t done = 0;
            while (done < bytes.size())
            {
                const auto n = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
                if (n < 0 && errno == EINTR)
                {
                    continue;
                }
                if (n <= 0)
                {
                    return false;
                }
                done += static_cast<std::size_t>(n);
            }
            return true;
        }

        /// Reads one whole frame before the deadline.
        std::optional<Frame> read_frame_until(int fd, Clock::time_point deadline)
        {
            Bytes buf;
            std::uint8_t chunk[4096];
            for (;;)
            {
                try
                {
                    if (auto need = frame_size(buf); need && buf.size() >= *need)
                    {
                        return decode_frame(std::span(buf).first(*need));
                    }
                }
                catch (const Error &)
                {
                    return std::nullopt;
                }
                pollfd p{fd, POLLIN, 0};
                if (::poll(&p, 1, remaining_ms(deadline)) != 1)
                {
                    return std::nullopt;
                }
                const auto n = ::read(fd, chunk, sizeof(chunk));
                if (n <= 0)
                {
                    return std::nullopt;
                }
                buf.insert(buf.end(), chunk, chunk + n);
            }
        }

        std::uint64_t now_ns()
        {
            return static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch()).count());
        }
    } // namespace

    int bind_listener(const Address &a)
    {
        const auto addr = resolve(a);
        const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (fd < 0)
        {
            throw Error(sys_error("socket"));
        }
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, reinterpret_cast<const sockaddr *>(&addr), sizeof(addr)) < 0 || ::listen(fd, 128) < 0)
        {
            const auto msg = sys_error("cannot listen on " + to_string(a));
            ::close(fd);
            throw Error(msg);
        }
        return fd;
    }

    std::uint16_t listening_port(int fd)
    {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        if (::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len) < 0)
        {
            throw Error(sys_error("getsockname"));
        }
        return ntohs(addr.sin_port);
    }

    bool probe_address(const Address &a, ProcessId from, ProcessId to, Millis timeout, std::uint32_t attempts)
    {
        const auto addr = resolve(a);
        const auto probe = encode_frame(probe_frame(FrameKind::probe, from, to));
        for (std::uint32_t i = 0; i < attempts; ++i)
        {
            const auto deadline = Clock::now() + timeout;
            const int fd = connect_until(addr, deadline);
            if (fd >= 0)
            {
                std::optional<Frame> reply;
                if (write_all(fd, probe))
                {
                    reply = read_frame_until(fd, deadline);
                }
                ::close(fd);
                if (reply && reply->kind == FrameKind::probe_ack && reply->envelope.from == to)
                {
                    return true;
                }
            }
            // A refused connection may only mean the peer is not listening
            // yet, so every attempt spends its whole timeout.
            std::this_thread::sleep_until(deadline);
        }
        return false;
    }

    struct TcpTransport::Outbox
    {
        std::deque<Bytes> queue;
        bool writing = false;
        bool closed = false;
        std::thread thread;
    };

    TcpTransport::TcpTransport(ProcessId self, Registry registry, TcpConfig cfg, int listen_fd)
        : self_(self), registry_(std::move(registry)), cfg_(std::move(cfg)), listen_fd_(listen_fd)
    {
        if (self_ >= registry_.size())
        {
            throw std::invalid_argument("process " + std::to_string(self_) + " is not in the registry");
        }
        if (cfg_.probe_attempts == 0)
        {
            throw std::invalid_argument("need at least one probe attempt");
        }
        if (listen_fd_ < 0)
        {
            listen_fd_ = bind_listener(registry_.at(self_));
        }
        const auto n = registry_.size();
        confirmed_.assign(n, false);
        suspected_.assign(n, false);
        open_inbound_.assign(n, 0);
        outboxes_.resize(n);
        listener_ = std::thread([this] { listen_loop(); });
    }

    TcpTransport::~TcpTransport()
    {
        stop_ = true;
        out_cv_.notify_all();
        cv_.notify_all();
        listener_.join();
        for (auto &t : readers_)
        {
            t.join();
        }
        for (auto &box : outboxes_)
        {
            if (box)
            {
                box->thread.join();
            }
        }
    }

    void TcpTransport::record(EventKind kind, std::optional<ProcessId> peer, OpId op, std::optional<Phase> phase,
                              std::string note)
    {
        std::lock_guard lk(trace_mu_);
        if (!recording_)
        {
            return;
        }
        TraceEvent e;
        e.seq = trace_.events.size();
        e.time = now_ns();
        e.kind = kind;
        e.actor = self_;
        e.peer = peer;
        e.op_id = op;
        e.phase = phase;
        e.note = std::move(note);
        trace_.events.push_back(std::move(e));
    }

    void TcpTransport::record_init(OpId op, std::string note)
    {
        record(EventKind::init, std::nullopt, op, std::nullopt, std::move(note));
    }

    void TcpTransport::record_deliver(OpId op, std::string note)
    {
        record(EventKind::deliver, std::nullopt, op, std::nullopt, std::move(note));
    }

    void TcpTransport::record_fail(std::string note)
    {
        record(EventKind::fail, std::nullopt, 0, std::nullopt, std::move(note));
        std::lock_guard lk(trace_mu_);
        recording_ = false;
    }

    Trace TcpTransport::trace() const
    {
        std::lock_guard lk(trace_mu_);
        return trace_;
    }

    Task<void> TcpTransport::send(Envelope env)
    {
        if (env.from != self_ || env.to >= size() || env.to == self_)
        {
            throw std::invalid_argument("bad envelope addressing");
        }
        if (cfg_.fail_after_sends && sends_ == *cfg_.fail_after_sends)
        {
            record_fail("after_sends=" + std::to_string(*cfg_.fail_after_sends));
            if (cfg_.on_crash)
            {
                cfg_.on_crash();
            }
            flush();
            crash();
            throw ProcessCrashed();
        }
        record(EventKind::send, env.to, env.op_id, env.phase, envelope_note(env.payload));
        ++sends_;
        auto bytes = encode_frame(env);
        {
            std::lock_guard lk(out_mu_);
            auto &box = outbox(env.to);
            if (!box.closed)
            {
                box.queue.push_back(std::move(bytes));
            }
        }
        out_cv_.notify_all();
        co_return;
    }

    TcpTransport::Outbox &TcpTransport::outbox(ProcessId peer)
    {
        auto &slot = outboxes_[peer];
        if (!slot)
        {
            slot = std::make_unique<Outbox>();
            auto *box = slot.get();
            box->thread = std::thread([this, peer, box] { write_loop(peer, *box); });
        }
        return *slot;
    }

    void TcpTransport::write_loop(ProcessId peer, Outbox &box)
    {
        const auto addr = resolve(registry_.at(peer));
        const auto give_up = Clock::now() + cfg_.connect_budget.value_or(cfg_.probe_timeout * cfg_.probe_attempts);
        int fd = -1;
        while (fd < 0 && !stop_ && !dead_ && Clock::now() < give_up)
        {
            fd = connect_until(addr, std::min(give_up, Clock::now() + cfg_.probe_timeout));
            if (fd < 0)
            {
                std::this_thread::sleep_for(Millis(20));
            }
        }
        std::unique_lock lk(out_mu_);
        while (fd >= 0)
        {
            out_cv_.wait(lk, [&] { return !box.queue.empty() || stop_ || dead_; });
            if (dead_ || box.queue.empty())
            {
                break;
            }
            auto bytes = std::move(box.queue.front());
            box.queue.pop_front();
            box.writing = true;
            lk.unlock();
            const bool ok = write_all(fd, bytes);
            lk.lock();
            box.writing = false;
            if (!ok)
            {
                break;
            }
            out_cv_.notify_all();
        }
        // Sends never report failure: whatever is left is dropped.
        box.closed = true;
        box.queue.clear();
        lk.unlock();
        out_cv_.notify_all();
        if (fd >= 0)
        {
            ::close(fd);
        }
        {
            std::lock_guard g(mu_);
            suspected_[peer] = true;
        }
        cv_.notify_all();
    }

    void TcpTransport::flush()
    {
        std::unique_lock lk(out_mu_);
        out_cv_.wait(lk, [&] {
            return std::all_of(outboxes_.begin(), outboxes_.end(), [](const auto &box) {
                return !box || box->closed || (box->queue.empty() && !box->writing);
            });
        });
    }

    void TcpTransport::crash()
    {
        {
            std::lock_guard lk(trace_mu_);
            recording_ = false;
        }
        dead_ = true;
        ::shutdown(listen_fd_, SHUT_RDWR);
        out_cv_.notify_all();
        cv_.notify_all();
    }

    void TcpTransport::listen_loop()
    {
        while (!stop_ && !dead_)
        {
            pollfd p{listen_fd_, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(io_slice.count())) != 1)
            {
                continue;
            }
            const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
            if (fd < 0)
            {
                continue;
            }
            std::lock_guard lk(mu_);
            readers_.emplace_back([this, fd] { read_loop(fd); });
        }
        ::close(listen_fd_);
    }

    void TcpTransport::read_loop(int fd)
    {
        Bytes buf;
        std::uint8_t chunk[65536];
        std::optional<ProcessId> conn_peer;
        bool open = true;
        while (open && !stop_ && !dead_)
        {
            pollfd p{fd, POLLIN, 0};
            const int ready = ::poll(&p, 1, static_cast<int>(io_slice.count()));
            if (ready != 1 || dead_)
            {
                continue;
            }
            const auto n = ::read(fd, chunk, sizeof(chunk));
            if (n <= 0)
            {
                break;
            }
            buf.insert(buf.end(), chunk, chunk + n);
            try
            {
                std::size_t used = 0;
                for (;;)
                {
                    const auto rest = std::span(buf).subspan(used);
                    const auto need = frame_size(rest);
                    if (!need || rest.size() < *need)
                    {
                        break;
                    }
                    auto frame = decode_frame(rest.first(*need));
                    used += *need;
                    if (frame.kind == FrameKind::probe)
                    {
                        if (!dead_ && !write_all(fd, encode_frame(probe_frame(FrameKind::probe_ack, self_,
                                                                             frame.envelope.from))))
                        {
                            open = false;
                            break;
                        }
                    }
                    else if (frame.kind == FrameKind::data)
                    {
                        deliver_frame(std::move(frame), conn_peer);
                    }
                }
                buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(used));
            }
            catch (const Error &)
            {
                // A peer speaking garbage is treated like a closed connection.
                break;
            }
        }
        ::close(fd);
        connection_closed(conn_peer);
    }

    void TcpTransport::deliver_frame(Frame frame, std::optional<ProcessId> &conn_peer)
    {
        auto &env = frame.envelope;
        if (env.to != self_ || env.from >= size() || env.from == self_ || (conn_peer && *conn_peer != env.from))
        {
            throw MalformedFrame("misaddressed data frame");
        }
        if (!conn_peer)
        {
            conn_peer = env.from;
            std::lock_guard lk(mu_);
            ++open_inbound_[env.from];
        }
        record(EventKind::recv, env.from, env.op_id, env.phase, envelope_note(env.payload));
        {
            std::lock_guard lk(mu_);
            mailbox_.push_back(std::move(env));
        }
        cv_.notify_all();
    }

    void TcpTransport::connection_closed(std::optional<ProcessId> conn_peer)
    {
        if (!conn_peer)
        {
            return;
        }
        {
            std::lock_guard lk(mu_);
            --open_inbound_[*conn_peer];
            suspected_[*conn_peer] = true;
        }
        cv_.notify_all();
    }

    bool TcpTransport::probe_liveness(ProcessId peer)
    {
        return probe_liveness(peer, cfg_.probe_timeout, cfg_.probe_attempts);
    }

    bool TcpTransport::probe_liveness(ProcessId peer, Millis timeout, std::uint32_t attempts)
    {
        if (peer == self_)
        {
            return !dead_;
        }
        const bool alive = probe_address(registry_.at(peer), self_, peer, timeout, attempts);
        if (!alive)
        {
            std::lock_guard lk(mu_);
            if (open_inbound_[peer] == 0)
            {
                confirmed_[peer] = true;
            }
        }
        return alive;
    }

    bool TcpTransport::confirm_failed(ProcessId p)
    {
        {
            std::lock_guard lk(mu_);
            if (confirmed_[p])
            {
                return true;
            }
        }
        probe_liveness(p);
        std::lock_guard lk(mu_);
        return confirmed_[p];
    }

    RecvResult TcpTransport::wait_for(const std::vector<ProcessId> &candidates, OpId op, PhaseSet phases)
    {
        for (auto c : candidates)
        {
            if (c >= size() || c == self_)
            {
                throw std::invalid_argument("bad receive candidate " + std::to_string(c));
            }
        }
        if (candidates.empty())
        {
            throw std::invalid_argument("receive needs at least one candidate");
        }
        const auto matches = [&](const Envelope &e) {
            return e.op_id == op && phases.contains(e.phase) &&
                   std::find(candidates.begin(), candidates.end(), e.from) != candidates.end();
        };
        const auto any_suspected = [&] {
            return std::any_of(candidates.begin(), candidates.end(), [&](ProcessId c) { return suspected_[c]; });
        };
        std::unique_lock lk(mu_);
        for (;;)
        {
            if (auto it = std::find_if(mailbox_.begin(), mailbox_.end(), matches); it != mailbox_.end())
            {
                auto env = std::move(*it);
                mailbox_.erase(it);
                const auto from = env.from;
                return RecvResult{from, std::move(env)};
            }
            for (auto c : candidates)
            {
                if (confirmed_[c])
                {
                    lk.unlock();
                    record(EventKind::confirm_failed, c, op, std::nullopt, "");
                    return RecvResult{c, std::nullopt};
                }
            }
            const bool woke = cv_.wait_for(lk, cfg_.probe_timeout, [&] {
                return std::any_of(mailbox_.begin(), mailbox_.end(), matches) || any_suspected();
            });
            if (std::any_of(mailbox_.begin(), mailbox_.end(), matches))
            {
                continue;
            }
            std::vector<ProcessId> to_probe;
            for (auto c : candidates)
            {
                if (!woke || suspected_[c])
                {
                    suspected_[c] = false;
                    to_probe.push_back(c);
                }
            }
            lk.unlock();
            for (auto c : to_probe)
            {
                probe_liveness(c);
            }
            lk.lock();
        }
    }

    Task<RecvResult> TcpTransport::recv_from(ProcessId sender, OpId op, PhaseSet phases)
    {
        co_return wait_for({sender}, op, phases);
    }

    Task<RecvResult> TcpTransport::recv_any(std::vector<ProcessId> candidates, OpId op, PhaseSet phases)
    {
        co_return wait_for(candidates, op, phases);
    }
} // namespace ftcoll::tcp
