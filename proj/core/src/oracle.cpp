#include "ftcoll/oracle.hpp"

#include "ftcoll/reduce_op.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ftcoll
{
    namespace
    {
        std::string join(const std::vector<ProcessId> &ids)
        {
            std::string out = "{";
            for (std::size_t i = 0; i < ids.size(); ++i)
            {
                if (i)
                {
                    out += ',';
                }
                out += std::to_string(ids[i]);
            }
            return out + "}";
        }

        PropertyResult passed(std::string id, std::string evidence = {})
        {
            return {std::move(id), PropertyStatus::pass, std::move(evidence)};
        }
        PropertyResult failed(std::string id, std::string evidence)
        {
            return {std::move(id), PropertyStatus::fail, std::move(evidence)};
        }
        PropertyResult skipped(std::string id, std::string evidence)
        {
            return {std::move(id), PropertyStatus::skipped, std::move(evidence)};
        }

        using Events = std::vector<const TraceEvent *>;

        struct Index
        {
            std::size_t n = 0;
            std::map<ProcessId, const TraceEvent *> fail;
            std::map<OpId, std::string> kind_of_op;
            std::map<OpId, std::map<ProcessId, Events>> init;
            std::map<OpId, std::map<ProcessId, Events>> deliver;
            std::map<ProcessId, Events> by_actor;

            std::set<ProcessId> failed() const
            {
                std::set<ProcessId> out;
                for (const auto &[p, e] : fail)
                {
                    out.insert(p);
                }
                return out;
            }
            bool preoperational(ProcessId p) const
            {
                auto it = fail.find(p);
                return it != fail.end() && it->second->note == "pre";
            }
            std::vector<OpId> ops_of_kind(std::string_view kind) const
            {
                std::vector<OpId> out;
                for (const auto &[op, k] : kind_of_op)
                {
                    if (k == kind)
                    {
                        out.push_back(op);
                    }
                }
                return out;
            }
            const Events *delivers(OpId op, ProcessId p) const
            {
                auto it = deliver.find(op);
                if (it == deliver.end())
                {
                    return nullptr;
                }
                auto jt = it->second.find(p);
                return jt == it->second.end() ? nullptr : &jt->second;
            }
            const TraceEvent *first_init(OpId op, ProcessId p) const
            {
                auto it = init.find(op);
                if (it == init.end())
                {
                    return nullptr;
                }
                auto jt = it->second.find(p);
                return jt == it->second.end() || jt->second.empty() ? nullptr : jt->second.front();
            }
        };

        Index build_index(const Trace &t, std::size_t n)
        {
            Index ix;
            ix.n = n;
            for (const auto &e : t.events)
            {
                if (e.actor >= n || (e.peer && *e.peer >= n))
                {
                    throw MalformedTrace("event seq=" + std::to_string(e.seq) + " names a process outside 0.." +
                                         std::to_string(n - 1));
                }
                ix.by_actor[e.actor].push_back(&e);
                switch (e.kind)
                {
                case EventKind::fail:
                    ix.fail.emplace(e.actor, &e);
                    break;
                case EventKind::init: {
                    const auto head = std::string(note_head(e.note));
                    auto [it, fresh] = ix.kind_of_op.emplace(e.op_id, head);
                    if (!fresh && it->second != head)
                    {
                        throw MalformedTrace("operation " + std::to_string(e.op_id) + " initialised as both " +
                                             it->second + " and " + head);
                    }
                    ix.init[e.op_id][e.actor].push_back(&e);
                    break;
                }
                case EventKind::deliver:
                    ix.deliver[e.op_id][e.actor].push_back(&e);
                    break;
                default:
                    break;
                }
            }
            return ix;
        }

        Value delivered_value(const TraceEvent &e)
        {
            auto field = note_field(e.note, "v");
            if (!field)
            {
                throw MalformedTrace("deliver seq=" + std::to_string(e.seq) + " carries no value");
            }
            auto v = parse_value(*field);
            if (!v)
            {
                throw MalformedTrace("deliver seq=" + std::to_string(e.seq) + " has a malformed value");
            }
            return *v;
        }

        std::uint64_t sends_of(const Index &ix, ProcessId p)
        {
            auto it = ix.by_actor.find(p);
            if (it == ix.by_actor.end())
            {
                return 0;
            }
            return static_cast<std::uint64_t>(std::count_if(it->second.begin(), it->second.end(),
                                                            [](const TraceEvent *e) { return e->kind == EventKind::send; }));
        }

        PropertyResult check_script(const Index &ix, const Scenario &s)
        {
            for (const auto &[p, e] : ix.fail)
            {
                const auto point = s.script.point(p);
                if (e->note.rfind("abort=", 0) == 0)
                {
                    continue;
                }
                if (!point)
                {
                    return failed("F1", "process " + std::to_string(p) + " failed at seq=" + std::to_string(e->seq) +
                                            " without a scripted failure");
                }
                if (e->note == "pre")
                {
                    if (!std::holds_alternative<Preoperational>(*point))
                    {
                        return failed("F1", "process " + std::to_string(p) + " failed preoperationally unscripted");
                    }
                    continue;
                }
                const auto field = note_field(e->note, "after_sends");
                if (!field || !std::holds_alternative<AfterSends>(*point) ||
                    std::to_string(std::get<AfterSends>(*point).sends) != *field ||
                    sends_of(ix, p) != std::get<AfterSends>(*point).sends)
                {
                    return failed("F1", "fail event seq=" + std::to_string(e->seq) + " does not match the script");
                }
            }
            for (const auto &[p, point] : s.script.entries())
            {
                if (std::holds_alternative<Preoperational>(point))
                {
                    if (!ix.preoperational(p))
                    {
                        return failed("F1", "process " + std::to_string(p) + " lacks its preoperational failure");
                    }
                    if (ix.by_actor.at(p).size() != 1)
                    {
                        return failed("F1", "preoperationally failed process " + std::to_string(p) + " acted");
                    }
                }
                else if (sends_of(ix, p) > std::get<AfterSends>(point).sends)
                {
                    return failed("F1", "process " + std::to_string(p) + " sent past its failure point");
                }
            }
            for (const auto &[p, e] : ix.fail)
            {
                const auto &evs = ix.by_actor.at(p);
                if (evs.back() != e)
                {
                    return failed("F1", "process " + std::to_string(p) + " acted after failing at seq=" +
                                            std::to_string(e->seq));
                }
            }
            return passed("F1");
        }

        /// R3/R4 style checks of one delivered value. `must` and `may` name
        /// the property ids.
        std::pair<PropertyResult, PropertyResult> check_inclusion(const Value &v, const InclusionFamily &family,
                                                                  const Scenario &s, bool in_contract,
                                                                  const std::string &must, const std::string &may,
                                                                  const std::string &where)
        {
            if (auto d = decode_inclusion(v, s))
            {
                const auto inc = d->included();
                std::string evidence = where + " included " + join(inc);
                PropertyResult r_may = passed(may, evidence);
                if (d->foreign)
                {
                    r_may = failed(may, where + " value " + format_value(v) + " decodes outside 0..n-1");
                }
                else
                {
                    for (std::size_t p = 0; p < d->multiplicity.size(); ++p)
                    {
                        const auto m = d->multiplicity[p];
                        if (m == 0)
                        {
                            continue;
                        }
                        const auto pid = static_cast<ProcessId>(p);
                        const bool allowed = std::binary_search(family.required.begin(), family.required.end(), pid) ||
                                             std::binary_search(family.optional.begin(), family.optional.end(), pid);
                        if (m != 1)
                        {
                            r_may = failed(may, where + " includes process " + std::to_string(p) + " " +
                                                    std::to_string(m) + " times");
                            break;
                        }
                        if (!allowed)
                        {
                            r_may = failed(may, where + " includes excluded process " + std::to_string(p));
                            break;
                        }
                    }
                }
                if (!in_contract)
                {
                    return {skipped(must, "failures exceed f"), r_may};
                }
                std::vector<ProcessId> missing;
                for (auto p : family.required)
                {
                    if (p >= d->multiplicity.size() || d->multiplicity[p] == 0)
                    {
                        missing.push_back(p);
                    }
                }
                PropertyResult r_must = missing.empty()
                                            ? passed(must, evidence)
                                            : failed(must, where + " misses live processes " + join(missing));
                return {r_must, r_may};
            }

            if (!in_contract)
            {
                return {skipped(must, "failures exceed f"), skipped(may, "failures exceed f; value not decodable")};
            }
            if (family.optional.size() > 16)
            {
                return {skipped(must, "too many optional processes to enumerate"),
                        skipped(may, "too many optional processes to enumerate")};
            }
            const auto inputs = make_inputs(s);
            const auto op = scenario_op(s);
            for (const auto &set : family.members())
            {
                Value acc;
                for (auto p : set)
                {
                    acc = op(acc, inputs[p]);
                }
                if (acc == v)
                {
                    const auto evidence = where + " value " + format_value(v) + " = op over " + join(set);
                    return {passed(must, evidence), passed(may, evidence)};
                }
            }
            const auto evidence = where + " value " + format_value(v) + " matches no acceptable inclusion set";
            return {failed(must, evidence), failed(may, evidence)};
        }

        PropertyResult check_at_most_once(const Index &ix, const std::string &id)
        {
            for (const auto &[op, per] : ix.deliver)
            {
                for (const auto &[p, evs] : per)
                {
                    if (evs.size() > 1)
                    {
                        return failed(id, "process " + std::to_string(p) + " delivered op " + std::to_string(op) +
                                              " at seq=" + std::to_string(evs[0]->seq) + " and seq=" +
                                              std::to_string(evs[1]->seq));
                    }
                }
            }
            return passed(id);
        }

        PropertyResult check_inits_before(const Index &ix, OpId op, const TraceEvent &deliver,
                                          const std::vector<ProcessId> &live, const std::string &id)
        {
            std::vector<ProcessId> late;
            for (auto p : live)
            {
                const auto *init = ix.first_init(op, p);
                if (!init || init->seq > deliver.seq)
                {
                    late.push_back(p);
                }
            }
            if (!late.empty())
            {
                return failed(id, "deliver seq=" + std::to_string(deliver.seq) + " precedes init of " + join(late));
            }
            return passed(id, "deliver seq=" + std::to_string(deliver.seq));
        }

        MessageCounts count_for(const Trace &t, const std::set<OpId> &ops)
        {
            MessageCounts c;
            for (const auto &e : t.events)
            {
                if (e.kind != EventKind::send || !e.phase || !ops.contains(e.op_id))
                {
                    continue;
                }
                switch (*e.phase)
                {
                case Phase::up_correction:
                    ++c.up_correction;
                    break;
                case Phase::tree:
                    ++c.tree;
                    break;
                case Phase::broadcast_tree:
                    ++c.broadcast_tree;
                    break;
                case Phase::broadcast_correction:
                    ++c.broadcast_correction;
                    break;
                }
            }
            return c;
        }

        std::vector<ProcessId> live_processes(const Index &ix)
        {
            std::vector<ProcessId> out;
            for (std::size_t p = 0; p < ix.n; ++p)
            {
                if (!ix.fail.contains(static_cast<ProcessId>(p)))
                {
                    out.push_back(static_cast<ProcessId>(p));
                }
            }
            return out;
        }

        std::string contract_note(const Scenario &s)
        {
            return std::to_string(s.script.size()) + " scripted failures, f=" + std::to_string(s.f);
        }
    } // namespace

    std::uint64_t expected_upcorrection_messages(std::uint64_t n, std::uint64_t f)
    {
        if (n <= 1)
        {
            return 0;
        }
        const auto a = ((n - 1) % (f + 1)) + 1;
        return f * (f + 1) * ((n - 1) / (f + 1)) + a * (a - 1);
    }

    std::uint64_t expected_tree_messages(std::uint64_t n)
    {
        return n == 0 ? 0 : n - 1;
    }

    std::uint64_t max_broadcast_messages(std::uint64_t n, std::uint64_t f)
    {
        return expected_tree_messages(n) + expected_upcorrection_messages(n, f);
    }

    std::uint64_t allreduce_message_bound(std::uint64_t n, std::uint64_t f)
    {
        return (f + 1) *
               (expected_upcorrection_messages(n, f) + expected_tree_messages(n) + max_broadcast_messages(n, f));
    }

    bool InclusionFamily::contains(std::span<const ProcessId> set) const
    {
        if (!std::includes(set.begin(), set.end(), required.begin(), required.end()))
        {
            return false;
        }
        return std::all_of(set.begin(), set.end(), [&](ProcessId p) {
            return std::binary_search(required.begin(), required.end(), p) ||
                   std::binary_search(optional.begin(), optional.end(), p);
        });
    }

    std::size_t InclusionFamily::size() const
    {
        return optional.size() >= 63 ? SIZE_MAX : std::size_t{1} << optional.size();
    }

    std::vector<std::vector<ProcessId>> InclusionFamily::members() const
    {
        if (optional.size() > 20)
        {
            throw std::length_error("inclusion family too large to enumerate");
        }
        std::vector<std::vector<ProcessId>> out;
        for (std::size_t mask = 0; mask < size(); ++mask)
        {
            std::vector<ProcessId> set = required;
            for (std::size_t i = 0; i < optional.size(); ++i)
            {
                if (mask & (std::size_t{1} << i))
                {
                    set.push_back(optional[i]);
                }
            }
            std::sort(set.begin(), set.end());
            out.push_back(std::move(set));
        }
        return out;
    }

    InclusionFamily acceptable_inclusion_sets(const Scenario &s)
    {
        InclusionFamily fam;
        for (std::size_t p = 0; p < s.n; ++p)
        {
            const auto pid = static_cast<ProcessId>(p);
            const auto point = s.script.point(pid);
            if (!point)
            {
                fam.required.push_back(pid);
            }
            else if (std::holds_alternative<AfterSends>(*point))
            {
                fam.optional.push_back(pid);
            }
        }
        return fam;
    }

    InclusionFamily acceptable_inclusion_sets(const Scenario &s, const Trace &t)
    {
        const Index ix = build_index(t, s.n);
        InclusionFamily fam;
        for (std::size_t p = 0; p < s.n; ++p)
        {
            const auto pid = static_cast<ProcessId>(p);
            if (!ix.fail.contains(pid))
            {
                fam.required.push_back(pid);
            }
            else if (!ix.preoperational(pid))
            {
                fam.optional.push_back(pid);
            }
        }
        return fam;
    }

    std::vector<ProcessId> Decoded::included() const
    {
        std::vector<ProcessId> out;
        for (std::size_t p = 0; p < multiplicity.size(); ++p)
        {
            if (multiplicity[p] != 0)
            {
                out.push_back(static_cast<ProcessId>(p));
            }
        }
        return out;
    }

    bool Decoded::exactly_once() const
    {
        return !foreign && std::all_of(multiplicity.begin(), multiplicity.end(), [](auto m) { return m <= 1; });
    }

    std::optional<Decoded> decode_inclusion(const Value &v, const Scenario &s)
    {
        if (s.op != "sum")
        {
            return std::nullopt;
        }
        Decoded d;
        d.multiplicity.assign(s.n, 0);
        if (uses_bitset_probe(s))
        {
            if (v.size() != 1 || v[0] < 0)
            {
                d.foreign = true;
                return d;
            }
            const auto bits = static_cast<std::uint64_t>(v[0]);
            for (std::size_t p = 0; p < 64; ++p)
            {
                if (bits & (std::uint64_t{1} << p))
                {
                    if (p < s.n)
                    {
                        d.multiplicity[p] = 1;
                    }
                    else
                    {
                        d.foreign = true;
                    }
                }
            }
            return d;
        }
        if (s.inputs == InputKind::probe || s.inputs == InputKind::unit)
        {
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if (v[i] < 0 || (i >= s.n && v[i] != 0))
                {
                    d.foreign = true;
                }
                else if (i < s.n)
                {
                    d.multiplicity[i] = static_cast<std::uint64_t>(v[i]);
                }
            }
            return d;
        }
        return std::nullopt;
    }

    std::string_view to_string(PropertyStatus s) noexcept
    {
        switch (s)
        {
        case PropertyStatus::pass:
            return "pass";
        case PropertyStatus::fail:
            return "fail";
        case PropertyStatus::skipped:
            return "skip";
        }
        return "?";
    }

    void Verdict::add(PropertyResult r)
    {
        if (r.status == PropertyStatus::fail)
        {
            pass = false;
            violated.push_back(r.id);
        }
        properties.push_back(std::move(r));
    }

    const PropertyResult *Verdict::find(std::string_view id) const
    {
        for (const auto &p : properties)
        {
            if (p.id == id)
            {
                return &p;
            }
        }
        return nullptr;
    }

    std::string Verdict::render() const
    {
        std::ostringstream out;
        for (const auto &p : properties)
        {
            out << p.id << ' ' << to_string(p.status);
            if (!p.evidence.empty())
            {
                out << ' ' << p.evidence;
            }
            out << '\n';
        }
        if (!in_contract)
        {
            out << "contract exceeded: guarantee properties skipped\n";
        }
        out << "verdict " << (pass ? "pass" : "fail");
        if (!violated.empty())
        {
            out << " violated=";
            for (std::size_t i = 0; i < violated.size(); ++i)
            {
                out << (i ? "," : "") << violated[i];
            }
        }
        out << '\n';
        return out.str();
    }

    MessageCounts count_messages(const Trace &t)
    {
        std::set<OpId> ops;
        for (const auto &e : t.events)
        {
            ops.insert(e.op_id);
        }
        return count_for(t, ops);
    }

    Verdict check_reduce_trace(const Trace &t, const Scenario &s)
    {
        const Index ix = build_index(t, s.n);
        const auto reduce_ops = ix.ops_of_kind("reduce");
        if (reduce_ops.size() > 1 || ix.kind_of_op.size() != reduce_ops.size())
        {
            throw MalformedTrace("a reduce trace holds exactly one reduce operation");
        }

        Verdict v;
        v.in_contract = s.script.size() <= s.f;
        v.add(check_script(ix, s));

        const auto live = live_processes(ix);
        const auto family = acceptable_inclusion_sets(s, t);
        const OpId op = reduce_ops.empty() ? 0 : reduce_ops.front();
        const auto *root_delivers = ix.delivers(op, s.root);
        const TraceEvent *root_deliver =
            root_delivers && !root_delivers->empty() ? root_delivers->front() : nullptr;

        if (root_deliver)
        {
            v.add(check_inits_before(ix, op, *root_deliver, live, "R1"));
        }
        else
        {
            v.add(passed("R1", "root did not deliver"));
        }
        v.add(check_at_most_once(ix, "R2"));

        if (root_deliver)
        {
            auto [r3, r4] =
                check_inclusion(delivered_value(*root_deliver), family, s, v.in_contract, "R3", "R4", "root");
            v.add(std::move(r3));
            v.add(std::move(r4));
        }
        else
        {
            v.add(skipped("R3", "root did not deliver"));
            v.add(skipped("R4", "root did not deliver"));
        }

        if (v.in_contract)
        {
            std::vector<ProcessId> silent;
            for (auto p : live)
            {
                const auto *d = ix.delivers(op, p);
                if (!d || d->empty())
                {
                    silent.push_back(p);
                }
            }
            v.add(silent.empty() ? passed("R5") : failed("R5", "no deliver at live " + join(silent)));

            const bool root_live = !ix.fail.contains(s.root);
            if (!root_live)
            {
                v.add(passed("P1", "root failed"));
            }
            else if (root_deliver)
            {
                v.add(passed("P1", "root delivered at seq=" + std::to_string(root_deliver->seq)));
            }
            else
            {
                const auto &evs = ix.by_actor.at(s.root);
                v.add(failed("P1", "live root never delivered; last event seq=" + std::to_string(evs.back()->seq)));
            }
        }
        else
        {
            v.add(skipped("R5", contract_note(s)));
            v.add(skipped("P1", contract_note(s)));
        }

        const auto counts = count_for(t, {op});
        const auto up = expected_upcorrection_messages(s.n, s.f);
        const auto tree = expected_tree_messages(s.n);
        const std::string measured =
            "up-correction=" + std::to_string(counts.up_correction) + "/" + std::to_string(up) +
            " tree=" + std::to_string(counts.tree) + "/" + std::to_string(tree);
        if (counts.broadcast_tree + counts.broadcast_correction != 0)
        {
            v.add(failed("C1", "broadcast messages inside a reduce"));
        }
        else if (ix.fail.empty())
        {
            v.add(counts.up_correction == up && counts.tree == tree ? passed("C1", measured) : failed("C1", measured));
        }
        else
        {
            // Nobody sends more than in the failure-free run; a failed process
            // sends strictly less unless it is a root that sends nothing anyway.
            const bool root_silent_anyway = (s.n - 1) % (s.f + 1) == 0;
            const bool must_drop =
                std::any_of(ix.fail.begin(), ix.fail.end(),
                            [&](const auto &kv) { return kv.first != s.root || !root_silent_anyway; });
            const bool ok = counts.up_correction <= up && counts.tree <= tree &&
                            (!must_drop || counts.up_correction + counts.tree < up + tree);
            v.add(ok ? passed("C1", measured) : failed("C1", measured));
        }
        return v;
    }

    Verdict check_allreduce_trace(const Trace &t, const Scenario &s)
    {
        const Index ix = build_index(t, s.n);
        const auto top = ix.ops_of_kind("allreduce");
        if (top.size() > 1)
        {
            throw MalformedTrace("an allreduce trace holds exactly one allreduce operation");
        }
        const auto reduce_ops = ix.ops_of_kind("reduce");

        std::vector<ProcessId> candidates = s.candidates;
        if (candidates.empty())
        {
            for (std::size_t p = 0; p < s.n && p <= s.f; ++p)
            {
                candidates.push_back(static_cast<ProcessId>(p));
            }
        }

        Verdict v;
        const bool candidate_failed_in_operation = std::any_of(candidates.begin(), candidates.end(), [&](ProcessId c) {
            return ix.fail.contains(c) && !ix.preoperational(c);
        });
        v.in_contract = s.script.size() <= s.f && !candidate_failed_in_operation;
        v.add(check_script(ix, s));

        const auto live = live_processes(ix);
        const auto family = acceptable_inclusion_sets(s, t);
        const OpId op = top.empty() ? 0 : top.front();

        std::vector<const TraceEvent *> delivered;
        for (std::size_t p = 0; p < s.n; ++p)
        {
            const auto *d = ix.delivers(op, static_cast<ProcessId>(p));
            if (d && !d->empty())
            {
                delivered.push_back(d->front());
            }
        }

        PropertyResult a1 = passed("A1");
        for (const auto *d : delivered)
        {
            auto r = check_inits_before(ix, op, *d, live, "A1");
            if (r.status == PropertyStatus::fail)
            {
                a1 = std::move(r);
                break;
            }
        }
        v.add(std::move(a1));
        v.add(check_at_most_once(ix, "A2"));

        if (v.in_contract)
        {
            std::vector<ProcessId> silent;
            for (auto p : live)
            {
                const auto *d = ix.delivers(op, p);
                if (!d || d->empty())
                {
                    silent.push_back(p);
                }
            }
            v.add(silent.empty() ? passed("A3") : failed("A3", "no deliver at live " + join(silent)));
        }
        else
        {
            v.add(skipped("A3", contract_note(s) + " or a candidate failed in operation"));
        }

        PropertyResult a4_must = passed("A4", "no deliveries");
        PropertyResult a4_may = passed("A4", "no deliveries");
        for (const auto *d : delivered)
        {
            const auto where = "process " + std::to_string(d->actor);
            auto [must, may] = check_inclusion(delivered_value(*d), family, s, v.in_contract, "A4", "A4", where);
            a4_must = std::move(must);
            a4_may = std::move(may);
            if (a4_must.status == PropertyStatus::fail || a4_may.status == PropertyStatus::fail)
            {
                break;
            }
        }
        v.add(a4_may.status == PropertyStatus::fail ? std::move(a4_may) : std::move(a4_must));

        if (v.in_contract)
        {
            PropertyResult a5 = passed("A5", std::to_string(delivered.size()) + " processes agree");
            for (const auto *d : delivered)
            {
                if (delivered_value(*d) != delivered_value(*delivered.front()))
                {
                    a5 = failed("A5", "process " + std::to_string(d->actor) + " delivered " + format_value(delivered_value(*d)) +
                                          ", process " + std::to_string(delivered.front()->actor) + " delivered " +
                                          format_value(delivered_value(*delivered.front())));
                    break;
                }
            }
            v.add(std::move(a5));
        }
        else
        {
            v.add(skipped("A5", contract_note(s) + " or a candidate failed in operation"));
        }

        std::set<OpId> all_ops;
        for (const auto &[o, k] : ix.kind_of_op)
        {
            all_ops.insert(o);
        }
        const auto counts = count_for(t, all_ops);
        const auto bound = allreduce_message_bound(s.n, s.f);
        const auto rounds = reduce_ops.size();
        const std::string measured = "messages=" + std::to_string(counts.total()) + " bound=" + std::to_string(bound) +
                                     " rounds=" + std::to_string(rounds);
        v.add(counts.total() <= bound && rounds <= candidates.size() ? passed("M1", measured) : failed("M1", measured));

        if (ix.fail.empty())
        {
            const auto up = expected_upcorrection_messages(s.n, s.f);
            const auto tree = expected_tree_messages(s.n);
            const bool ok = rounds == 1 && counts.up_correction == up && counts.tree == tree &&
                            counts.broadcast_tree == tree && counts.broadcast_correction <= up;
            const std::string detail = "rounds=" + std::to_string(rounds) +
                                       " up-correction=" + std::to_string(counts.up_correction) + "/" + std::to_string(up) +
                                       " tree=" + std::to_string(counts.tree) + "/" + std::to_string(tree) +
                                       " broadcast-tree=" + std::to_string(counts.broadcast_tree) +
                                       " broadcast-correction=" + std::to_string(counts.broadcast_correction);
            v.add(ok ? passed("M2", detail) : failed("M2", detail));
        }
        else
        {
            v.add(skipped("M2", "failures present"));
        }
        return v;
    }

    Verdict check_trace(const Trace &t, const Scenario &s)
    {
        return s.collective == Collective::allreduce ? check_allreduce_trace(t, s) : check_reduce_trace(t, s);
    }

    PropertyResult check_scheme_equivalence(const Trace &list, const Trace &count, const Trace &bit)
    {
        if (list.events.size() != count.events.size() || list.events.size() != bit.events.size())
        {
            return failed("E1", "event counts differ: " + std::to_string(list.events.size()) + "/" +
                                    std::to_string(count.events.size()) + "/" + std::to_string(bit.events.size()));
        }
        std::size_t checked = 0;
        for (std::size_t i = 0; i < list.events.size(); ++i)
        {
            auto a = list.events[i];
            auto b = count.events[i];
            auto c = bit.events[i];
            const auto where = "seq=" + std::to_string(a.seq);
            if (a.kind == EventKind::send || a.kind == EventKind::recv)
            {
                const auto fa = note_field(a.note, "fi");
                const auto fb = note_field(b.note, "fi");
                const auto fc = note_field(c.note, "fi");
                if (!fa || !fb || !fc)
                {
                    return failed("E1", where + " lacks failure info");
                }
                const auto ia = parse_failure_info(*fa);
                const auto ib = parse_failure_info(*fb);
                const auto ic = parse_failure_info(*fc);
                if (!ia || !ib || !ic || ia->scheme() != Scheme::list || ib->scheme() != Scheme::count ||
                    ic->scheme() != Scheme::bit)
                {
                    return failed("E1", where + " carries unexpected failure info schemes");
                }
                const auto &l = std::get<FailedList>(ia->repr());
                const auto &k = std::get<FailedCount>(ib->repr());
                const auto &bb = std::get<FailedBit>(ic->repr());
                if (k.count != l.ids.size())
                {
                    return failed("E1", where + " count " + std::to_string(k.count) + " != |list| " +
                                            std::to_string(l.ids.size()));
                }
                if (k.subtree_failed != bb.subtree_failed)
                {
                    return failed("E1", where + " count bit differs from bit scheme");
                }
                ++checked;
                const auto strip = [](TraceEvent &e) { e.note = std::string(note_field(e.note, "v").value_or("")); };
                strip(a);
                strip(b);
                strip(c);
            }
            if (a != b || a != c)
            {
                return failed("E1", where + " differs beyond failure info");
            }
        }
        return passed("E1", std::to_string(checked) + " messages compared");
    }
} // namespace ftcoll
