#include "commands.hpp"

#include "ftcoll/oracle.hpp"
#include "ftcoll/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <thread>

namespace ftcoll::cli
{
    namespace
    {
        struct Range
        {
            std::uint64_t lo = 0;
            std::uint64_t hi = 0;
        };

        Range parse_range(const std::string &text)
        {
            const auto parse = [&](std::string_view s) {
                std::uint64_t v = 0;
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                if (ec != std::errc() || ptr != s.data() + s.size())
                {
                    throw ScenarioError("bad range '" + text + "', expected a..b");
                }
                return v;
            };
            const auto dots = text.find("..");
            Range r;
            if (dots == std::string::npos)
            {
                r.lo = r.hi = parse(text);
            }
            else
            {
                r.lo = parse(std::string_view(text).substr(0, dots));
                r.hi = parse(std::string_view(text).substr(dots + 2));
            }
            if (r.lo > r.hi)
            {
                throw ScenarioError("empty range '" + text + "'");
            }
            return r;
        }

        struct Cell
        {
            std::uint64_t n = 0;
            std::uint64_t f = 0;
            std::uint64_t uc_formula = 0;
            std::uint64_t uc_measured = 0;
            std::uint64_t tree_formula = 0;
            std::uint64_t tree_measured = 0;
            std::uint64_t trials = 0;
            std::uint64_t pass = 0;
            std::uint64_t fail = 0;
            std::uint64_t max_rounds = 0;
            std::uint64_t ar_max_messages = 0;
            std::uint64_t ar_bound = 0;
            std::vector<std::string> failing; // formatted scenarios

            bool counts_match() const { return uc_formula == uc_measured && tree_formula == tree_measured; }
        };

        std::uint64_t rounds(const Trace &t)
        {
            std::set<OpId> ops;
            for (const auto &e : t.events)
            {
                if (e.kind == EventKind::init && note_head(e.note) == "reduce")
                {
                    ops.insert(e.op_id);
                }
            }
            return ops.size();
        }

        /// At most f failures; allreduce candidates only fail before starting.
        Scenario random_trial(std::mt19937_64 &rng, Scenario s, const std::map<ProcessId, std::uint64_t> &sends)
        {
            const auto pick = [&](std::uint64_t lo, std::uint64_t hi) {
                return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
            };
            s.sim.seed = rng();
            if (s.collective == Collective::reduce)
            {
                s.root = static_cast<ProcessId>(pick(0, s.n - 1));
            }
            std::vector<ProcessId> order(s.n);
            for (ProcessId p = 0; p < s.n; ++p)
            {
                order[p] = p;
            }
            std::shuffle(order.begin(), order.end(), rng);
            const auto k = pick(0, std::min<std::uint64_t>(s.f, s.n - 1));
            const auto candidates = effective_candidates(s);
            for (std::uint64_t i = 0; i < k; ++i)
            {
                const auto p = order[i];
                const bool candidate = s.collective == Collective::allreduce &&
                                       std::find(candidates.begin(), candidates.end(), p) != candidates.end();
                const auto it = sends.find(p);
                const auto budget = it == sends.end() ? 0 : it->second;
                if (candidate || budget == 0 || pick(0, 1) == 0)
                {
                    s.script.fail_pre(p);
                }
                else
                {
                    s.script.fail_after_sends(p, pick(0, budget - 1));
                }
            }
            return s;
        }

        std::map<ProcessId, std::uint64_t> sends_per_process(const Trace &t)
        {
            std::map<ProcessId, std::uint64_t> out;
            for (const auto &e : t.events)
            {
                if (e.kind == EventKind::send)
                {
                    ++out[e.actor];
                }
            }
            return out;
        }

        Cell run_cell(std::uint64_t n, std::uint64_t f, const SweepOptions &opt, bool reduce, bool allreduce)
        {
            Cell c;
            c.n = n;
            c.f = f;
            Scenario base;
            base.n = n;
            base.f = static_cast<std::uint32_t>(f);
            base.scheme = *parse_scheme(opt.scheme);
            const auto clean = simulate(base);
            const auto counts = count_messages(clean.trace);
            c.uc_formula = expected_upcorrection_messages(n, f);
            c.tree_formula = expected_tree_messages(n);
            c.uc_measured = counts.up_correction;
            c.tree_measured = counts.tree;
            c.ar_bound = allreduce_message_bound(n, f);

            std::seed_seq seq{opt.seed, n, f};
            std::mt19937_64 rng(seq);
            for (const auto kind : {Collective::reduce, Collective::allreduce})
            {
                if ((kind == Collective::reduce && !reduce) || (kind == Collective::allreduce && !allreduce))
                {
                    continue;
                }
                auto s = base;
                s.collective = kind;
                const auto sends = sends_per_process(simulate(s).trace);
                for (std::uint64_t i = 0; i < opt.trials; ++i)
                {
                    const auto trial = random_trial(rng, s, sends);
                    const auto run = simulate(trial);
                    const auto verdict = check_trace(run.trace, trial);
                    ++c.trials;
                    if (verdict.pass)
                    {
                        ++c.pass;
                    }
                    else
                    {
                        ++c.fail;
                        c.failing.push_back(format_scenario(trial));
                    }
                    if (kind == Collective::allreduce)
                    {
                        c.max_rounds = std::max(c.max_rounds, rounds(run.trace));
                        c.ar_max_messages = std::max(c.ar_max_messages, count_messages(run.trace).total());
                    }
                }
            }
            return c;
        }

        nlohmann::json to_json(const Cell &c)
        {
            return {
                {"n", c.n},
                {"f", c.f},
                {"upcorrection_formula", c.uc_formula},
                {"upcorrection_measured", c.uc_measured},
                {"tree_formula", c.tree_formula},
                {"tree_measured", c.tree_measured},
                {"counts_match", c.counts_match()},
                {"trials", c.trials},
                {"pass", c.pass},
                {"fail", c.fail},
                {"allreduce_max_rounds", c.max_rounds},
                {"allreduce_max_messages", c.ar_max_messages},
                {"allreduce_message_bound", c.ar_bound},
                {"failing_scenarios", c.failing},
            };
        }
    } // namespace

    int cmd_sweep(const SweepOptions &opt, std::ostream &out)
    {
        const auto nr = parse_range(opt.n_range);
        const auto fr = parse_range(opt.f_range);
        if (nr.lo == 0)
        {
            throw ScenarioError("n starts at 1");
        }
        if (!parse_scheme(opt.scheme))
        {
            throw ScenarioError("unknown scheme '" + opt.scheme + "'");
        }
        const bool reduce = opt.collective == "reduce" || opt.collective == "both";
        const bool allreduce = opt.collective == "allreduce" || opt.collective == "both";
        if (!reduce && !allreduce)
        {
            throw ScenarioError("collective must be reduce, allreduce or both");
        }

        std::vector<Cell> cells;
        for (auto n = nr.lo; n <= nr.hi; ++n)
        {
            for (auto f = fr.lo; f <= fr.hi; ++f)
            {
                Cell c;
                c.n = n;
                c.f = f;
                cells.push_back(c);
            }
        }
        std::atomic<std::size_t> next{0};
        const auto worker = [&] {
            for (auto i = next++; i < cells.size(); i = next++)
            {
                cells[i] = run_cell(cells[i].n, cells[i].f, opt, reduce, allreduce);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned j = 1; j < std::max(1u, opt.jobs); ++j)
        {
            pool.emplace_back(worker);
        }
        worker();
        for (auto &t : pool)
        {
            t.join();
        }

        bool ok = true;
        out << std::right << std::setw(4) << "n" << std::setw(4) << "f" << std::setw(12) << "uc.formula"
            << std::setw(13) << "uc.measured" << std::setw(14) << "tree.formula" << std::setw(15) << "tree.measured"
            << std::setw(8) << "counts" << std::setw(8) << "trials" << std::setw(7) << "pass" << std::setw(6)
            << "fail" << std::setw(12) << "ar.rounds" << std::setw(10) << "ar.msgs" << std::setw(10) << "ar.bound"
            << "\n";
        nlohmann::json records = nlohmann::json::array();
        for (const auto &c : cells)
        {
            ok = ok && c.counts_match() && c.fail == 0;
            out << std::setw(4) << c.n << std::setw(4) << c.f << std::setw(12) << c.uc_formula << std::setw(13)
                << c.uc_measured << std::setw(14) << c.tree_formula << std::setw(15) << c.tree_measured
                << std::setw(8) << (c.counts_match() ? "ok" : "DIFF") << std::setw(8) << c.trials << std::setw(7)
                << c.pass << std::setw(6) << c.fail << std::setw(12) << c.max_rounds << std::setw(10)
                << c.ar_max_messages << std::setw(10) << c.ar_bound << "\n";
            records.push_back(to_json(c));
        }
        if (opt.json_path)
        {
            std::ofstream j(*opt.json_path, std::ios::trunc);
            j << records.dump(2) << "\n";
            if (!j)
            {
                throw ScenarioError("cannot write " + *opt.json_path);
            }
        }
        return ok ? exit_pass : exit_violation;
    }
} // namespace ftcoll::cli
