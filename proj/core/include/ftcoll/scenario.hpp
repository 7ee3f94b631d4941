#pragma once

#include "ftcoll/collectives.hpp"
#include "ftcoll/failmodel.hpp"
#include "ftcoll/failure_info.hpp"
#include "ftcoll/simnet.hpp"
#include "ftcoll/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ftcoll
{
    enum class InputKind : std::uint8_t
    {
        probe, // 2^p for n <= 62, else a unit vector per process
        unit,  // unit vector e_p
        ids,   // {p}
        ones,  // {1}
        file,  // one line per process, comma-separated elements
    };

    std::string_view to_string(InputKind k) noexcept;
    std::optional<InputKind> parse_input_kind(std::string_view s) noexcept;

    enum class TransportKind : std::uint8_t
    {
        sim,
        tcp,
    };

    std::string_view to_string(TransportKind k) noexcept;
    std::optional<TransportKind> parse_transport_kind(std::string_view s) noexcept;

    /// Everything needed to reproduce one run.
    struct Scenario
    {
        std::size_t n = 1;
        std::uint32_t f = 1;
        std::string op = "sum";
        Collective collective = Collective::reduce;
        ProcessId root = 0;
        std::vector<ProcessId> candidates; // allreduce; empty means 0..f
        Scheme scheme = Scheme::list;
        FailureScript script;
        SimConfig sim;
        InputKind inputs = InputKind::probe;
        std::string inputs_file;
        TransportKind transport = TransportKind::sim;
        std::uint32_t probe_timeout_ms = 500;
        std::uint32_t probe_retries = 3;

        friend bool operator==(const Scenario &, const Scenario &) = default;
    };

    class ScenarioError : public Error
    {
    public:
        using Error::Error;
    };

    /// Line-based `key value...` format; `#` starts a comment. Unknown keys
    /// and out-of-range values throw ScenarioError with the line number.
    Scenario parse_scenario(std::string_view text);
    Scenario load_scenario(const std::string &path);
    std::string format_scenario(const Scenario &s);

    /// Throws ScenarioError for inconsistent settings (root >= n, ...).
    void validate(const Scenario &s);

    /// Inputs of every process. File inputs are read relative to the working
    /// directory.
    std::vector<Value> make_inputs(const Scenario &s);
    /// True when probe inputs use one bit per process.
    bool uses_bitset_probe(const Scenario &s) noexcept;

    ReduceOp scenario_op(const Scenario &s);
    CollectiveConfig collective_config(const Scenario &s);
    std::vector<ProcessId> effective_candidates(const Scenario &s);
} // namespace ftcoll
