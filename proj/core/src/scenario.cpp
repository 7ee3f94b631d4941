#include "ftcoll/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ftcoll
{
    namespace
    {
        std::vector<std::string_view> split_words(std::string_view line)
        {
            std::vector<std::string_view> out;
            std::size_t i = 0;
            while (i < line.size())
            {
                while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
                {
                    ++i;
                }
                const auto start = i;
                while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
                {
                    ++i;
                }
                if (i > start)
                {
                    out.push_back(line.substr(start, i - start));
                }
            }
            return out;
        }

        class LineParser
        {
        public:
            LineParser(std::size_t line_no, std::vector<std::string_view> words)
                : line_no_(line_no), words_(std::move(words))
            {
            }

            [[noreturn]] void fail(const std::string &msg) const
            {
                throw ScenarioError("scenario line " + std::to_string(line_no_) + ": " + msg);
            }

            std::string_view key() const { return words_.front(); }

            void arity(std::size_t n) const
            {
                if (words_.size() != n + 1)
                {
                    fail("'" + std::string(key()) + "' expects " + std::to_string(n) + " argument(s)");
                }
            }

            std::string_view word(std::size_t i) const { return words_.at(i); }
            std::size_t size() const { return words_.size(); }

            template <typename T>
            T number(std::size_t i) const
            {
                const auto w = words_.at(i);
                T v{};
                auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
                if (ec != std::errc{} || ptr != w.data() + w.size())
                {
                    fail("'" + std::string(w) + "' is not a valid number");
                }
                return v;
            }

        private:
            std::size_t line_no_;
            std::vector<std::string_view> words_;
        };

    } // namespace

    std::optional<InputKind> parse_input_kind(std::string_view w) noexcept
    {
        for (auto k : {InputKind::probe, InputKind::unit, InputKind::ids, InputKind::ones, InputKind::file})
        {
            if (to_string(k) == w)
            {
                return k;
            }
        }
        return std::nullopt;
    }

    std::string_view to_string(TransportKind k) noexcept
    {
        return k == TransportKind::sim ? "sim" : "tcp";
    }

    std::optional<TransportKind> parse_transport_kind(std::string_view w) noexcept
    {
        if (w == "sim")
        {
            return TransportKind::sim;
        }
        if (w == "tcp")
        {
            return TransportKind::tcp;
        }
        return std::nullopt;
    }

    std::string_view to_string(InputKind k) noexcept
    {
        switch (k)
        {
        case InputKind::probe:
            return "probe";
        case InputKind::unit:
            return "unit";
        case InputKind::ids:
            return "ids";
        case InputKind::ones:
            return "ones";
        case InputKind::file:
            return "file";
        }
        return "?";
    }

    Scenario parse_scenario(std::string_view text)
    {
        Scenario s;
        bool have_n = false;
        bool have_f = false;
        std::size_t line_no = 0;
        while (!text.empty())
        {
            ++line_no;
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
            {
                line = line.substr(0, hash);
            }
            auto words = split_words(line);
            if (words.empty())
            {
                continue;
            }
            const LineParser lp(line_no, std::move(words));
            const auto key = lp.key();
            if (key == "n")
            {
                lp.arity(1);
                s.n = lp.number<std::size_t>(1);
                have_n = true;
            }
            else if (key == "f")
            {
                lp.arity(1);
                s.f = lp.number<std::uint32_t>(1);
                have_f = true;
            }
            else if (key == "op")
            {
                lp.arity(1);
                if (!reduce_op_by_name(lp.word(1)))
                {
                    lp.fail("unknown op '" + std::string(lp.word(1)) + "'");
                }
                s.op = std::string(lp.word(1));
            }
            else if (key == "collective")
            {
                lp.arity(1);
                const auto c = parse_collective(lp.word(1));
                if (!c || *c == Collective::broadcast)
                {
                    lp.fail("collective must be reduce or allreduce");
                }
                s.collective = *c;
            }
            else if (key == "root")
            {
                lp.arity(1);
                s.root = lp.number<ProcessId>(1);
            }
            else if (key == "candidates")
            {
                if (lp.size() < 2)
                {
                    lp.fail("'candidates' needs at least one process");
                }
                s.candidates.clear();
                for (std::size_t i = 1; i < lp.size(); ++i)
                {
                    s.candidates.push_back(lp.number<ProcessId>(i));
                }
            }
            else if (key == "scheme")
            {
                lp.arity(1);
                const auto sc = parse_scheme(lp.word(1));
                if (!sc)
                {
                    lp.fail("unknown scheme '" + std::string(lp.word(1)) + "'");
                }
                s.scheme = *sc;
            }
            else if (key == "seed")
            {
                lp.arity(1);
                s.sim.seed = lp.number<std::uint64_t>(1);
            }
            else if (key == "latency")
            {
                lp.arity(2);
                s.sim.latency_min = lp.number<std::uint64_t>(1);
                s.sim.latency_max = lp.number<std::uint64_t>(2);
            }
            else if (key == "start_jitter")
            {
                lp.arity(1);
                s.sim.start_jitter = lp.number<std::uint64_t>(1);
            }
            else if (key == "fail")
            {
                if (lp.size() < 3)
                {
                    lp.fail("expected 'fail <pid> pre' or 'fail <pid> after-sends <s>'");
                }
                const auto pid = lp.number<ProcessId>(1);
                if (s.script.point(pid))
                {
                    lp.fail("process " + std::to_string(pid) + " already has a failure point");
                }
                if (lp.word(2) == "pre")
                {
                    lp.arity(2);
                    s.script.fail_pre(pid);
                }
                else if (lp.word(2) == "after-sends")
                {
                    lp.arity(3);
                    s.script.fail_after_sends(pid, lp.number<std::size_t>(3));
                }
                else
                {
                    lp.fail("unknown failure point '" + std::string(lp.word(2)) + "'");
                }
            }
            else if (key == "inputs")
            {
                if (lp.size() < 2)
                {
                    lp.fail("'inputs' needs a kind");
                }
                const auto kind = parse_input_kind(lp.word(1));
                if (!kind)
                {
                    lp.fail("unknown input kind '" + std::string(lp.word(1)) + "'");
                }
                s.inputs = *kind;
                if (s.inputs == InputKind::file)
                {
                    lp.arity(2);
                    s.inputs_file = std::string(lp.word(2));
                }
                else
                {
                    lp.arity(1);
                    s.inputs_file.clear();
                }
            }
            else if (key == "transport")
            {
                lp.arity(1);
                const auto kind = parse_transport_kind(lp.word(1));
                if (!kind)
                {
                    lp.fail("transport must be sim or tcp");
                }
                s.transport = *kind;
            }
            else if (key == "probe_timeout_ms")
            {
                lp.arity(1);
                s.probe_timeout_ms = lp.number<std::uint32_t>(1);
            }
            else if (key == "probe_retries")
            {
                lp.arity(1);
                s.probe_retries = lp.number<std::uint32_t>(1);
            }
            else
            {
                lp.fail("unknown key '" + std::string(key) + "'");
            }
        }
        if (!have_n || !have_f)
        {
            throw ScenarioError("scenario must set both n and f");
        }
        validate(s);
        return s;
    }

    Scenario load_scenario(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ScenarioError("cannot open scenario file " + path);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_scenario(ss.str());
    }

    std::string format_scenario(const Scenario &s)
    {
        std::ostringstream out;
        out << "n " << s.n << '\n';
        out << "f " << s.f << '\n';
        out << "op " << s.op << '\n';
        out << "collective " << to_string(s.collective) << '\n';
        out << "root " << s.root << '\n';
        if (!s.candidates.empty())
        {
            out << "candidates";
            for (auto c : s.candidates)
            {
                out << ' ' << c;
            }
            out << '\n';
        }
        out << "scheme " << to_string(s.scheme) << '\n';
        out << "seed " << s.sim.seed << '\n';
        out << "latency " << s.sim.latency_min << ' ' << s.sim.latency_max << '\n';
        if (s.sim.start_jitter != 0)
        {
            out << "start_jitter " << s.sim.start_jitter << '\n';
        }
        for (const auto &[p, point] : s.script.entries())
        {
            if (std::holds_alternative<Preoperational>(point))
            {
                out << "fail " << p << " pre\n";
            }
            else
            {
                out << "fail " << p << " after-sends " << std::get<AfterSends>(point).sends << '\n';
            }
        }
        out << "inputs " << to_string(s.inputs);
        if (s.inputs == InputKind::file)
        {
            out << ' ' << s.inputs_file;
        }
        out << '\n';
        out << "transport " << to_string(s.transport) << '\n';
        out << "probe_timeout_ms " << s.probe_timeout_ms << '\n';
        out << "probe_retries " << s.probe_retries << '\n';
        return out.str();
    }

    void validate(const Scenario &s)
    {
        if (s.n == 0)
        {
            throw ScenarioError("n must be at least 1");
        }
        if (s.root >= s.n)
        {
            throw ScenarioError("root " + std::to_string(s.root) + " outside 0.." + std::to_string(s.n - 1));
        }
        for (auto c : s.candidates)
        {
            if (c >= s.n)
            {
                throw ScenarioError("candidate " + std::to_string(c) + " outside 0.." + std::to_string(s.n - 1));
            }
        }
        if (s.candidates.size() > max_allreduce_rounds)
        {
            throw ScenarioError("at most " + std::to_string(max_allreduce_rounds) + " candidates");
        }
        for (const auto &[p, point] : s.script.entries())
        {
            if (p >= s.n)
            {
                throw ScenarioError("failure for process " + std::to_string(p) + " outside 0.." +
                                    std::to_string(s.n - 1));
            }
        }
        if (s.sim.latency_min > s.sim.latency_max)
        {
            throw ScenarioError("latency minimum exceeds maximum");
        }
        if (!reduce_op_by_name(s.op))
        {
            throw ScenarioError("unknown op '" + s.op + "'");
        }
        if (s.inputs == InputKind::file && s.inputs_file.empty())
        {
            throw ScenarioError("file inputs need a path");
        }
        if (s.probe_timeout_ms == 0)
        {
            throw ScenarioError("probe_timeout_ms must be positive");
        }
    }

    bool uses_bitset_probe(const Scenario &s) noexcept
    {
        return s.inputs == InputKind::probe && s.n <= 62;
    }

    std::vector<Value> make_inputs(const Scenario &s)
    {
        std::vector<Value> out(s.n);
        switch (s.inputs)
        {
        case InputKind::probe:
            if (uses_bitset_probe(s))
            {
                for (std::size_t p = 0; p < s.n; ++p)
                {
                    out[p] = Value{std::int64_t{1} << p};
                }
                break;
            }
            [[fallthrough]];
        case InputKind::unit:
            for (std::size_t p = 0; p < s.n; ++p)
            {
                out[p] = Value(s.n, 0);
                out[p][p] = 1;
            }
            break;
        case InputKind::ids:
            for (std::size_t p = 0; p < s.n; ++p)
            {
                out[p] = Value{static_cast<std::int64_t>(p)};
            }
            break;
        case InputKind::ones:
            for (std::size_t p = 0; p < s.n; ++p)
            {
                out[p] = Value{1};
            }
            break;
        case InputKind::file: {
            std::ifstream in(s.inputs_file);
            if (!in)
            {
                throw ScenarioError("cannot open inputs file " + s.inputs_file);
            }
            std::string line;
            std::size_t p = 0;
            while (std::getline(in, line))
            {
                if (line.empty() || line[0] == '#')
                {
                    continue;
                }
                if (p == s.n)
                {
                    throw ScenarioError("inputs file has more than n values");
                }
                auto v = parse_value(line);
                if (!v || v->empty())
                {
                    throw ScenarioError("inputs file: bad value '" + line + "'");
                }
                out[p++] = std::move(*v);
            }
            if (p != s.n)
            {
                throw ScenarioError("inputs file has " + std::to_string(p) + " values, expected " +
                                    std::to_string(s.n));
            }
            break;
        }
        }
        return out;
    }

    ReduceOp scenario_op(const Scenario &s)
    {
        auto op = reduce_op_by_name(s.op);
        if (!op)
        {
            throw ScenarioError("unknown op '" + s.op + "'");
        }
        return *op;
    }

    CollectiveConfig collective_config(const Scenario &s)
    {
        CollectiveConfig cfg;
        cfg.f = s.f;
        cfg.op = scenario_op(s);
        cfg.scheme = s.scheme;
        cfg.root_candidates = effective_candidates(s);
        return cfg;
    }

    std::vector<ProcessId> effective_candidates(const Scenario &s)
    {
        return s.candidates.empty() ? default_root_candidates(s.n, s.f) : s.candidates;
    }
} // namespace ftcoll
