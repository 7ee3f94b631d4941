#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ftcoll
{
    using ProcessId = std::uint32_t;
    using OpId = std::uint64_t;

    /// Reduction values are fixed-width integer vectors combined element-wise.
    using Value = std::vector<std::int64_t>;

    enum class Phase : std::uint8_t
    {
        up_correction = 1,
        tree = 2,
        broadcast_tree = 3,
        broadcast_correction = 4,
    };

    /// Bit set over Phase, used by receive matching.
    class PhaseSet
    {
    public:
        constexpr PhaseSet() = default;
        constexpr PhaseSet(Phase p) noexcept : bits_(bit(p)) {} // NOLINT(google-explicit-constructor)
        constexpr PhaseSet(Phase a, Phase b) noexcept : bits_(bit(a) | bit(b)) {}

        constexpr bool contains(Phase p) const noexcept { return (bits_ & bit(p)) != 0; }

    private:
        static constexpr std::uint8_t bit(Phase p) noexcept
        {
            return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
        }
        std::uint8_t bits_ = 0;
    };

    enum class Collective : std::uint8_t
    {
        reduce,
        broadcast,
        allreduce,
    };

    std::string_view to_string(Phase p) noexcept;
    std::optional<Phase> parse_phase(std::string_view s) noexcept;
    std::string_view to_string(Collective c) noexcept;
    std::optional<Collective> parse_collective(std::string_view s) noexcept;

    /// Base for all errors raised by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Raised at the root when every child is failed or reports a failure in its subtree.
    class NoFailureFreeSubtree : public Error
    {
    public:
        NoFailureFreeSubtree() : Error("No failure-free subtree") {}
    };

    class CandidatesExhausted : public Error
    {
    public:
        CandidatesExhausted() : Error("root candidates exhausted") {}
    };

    class SchemeMismatch : public Error
    {
    public:
        SchemeMismatch() : Error("failure information scheme mismatch") {}
    };

    std::string format_value(const Value &v);
    std::optional<Value> parse_value(std::string_view s);
} // namespace ftcoll
