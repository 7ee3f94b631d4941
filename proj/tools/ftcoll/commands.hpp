#pragma once

#include "ftcoll/scenario.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace ftcoll::cli
{
    inline constexpr int exit_pass = 0;
    inline constexpr int exit_violation = 1;
    inline constexpr int exit_usage = 2;

    struct RunOptions
    {
        std::string scenario_path;
        std::optional<std::string> trace_path;
        bool quiet = false;
        std::optional<std::string> inputs;
        std::optional<std::string> inputs_file;
        std::optional<std::string> transport;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> workdir;
    };

    struct SweepOptions
    {
        std::string n_range = "4..16";
        std::string f_range = "0..3";
        std::uint64_t trials = 100;
        std::uint64_t seed = 1;
        std::string collective = "both";
        std::string scheme = "list";
        unsigned jobs = 1;
        std::optional<std::string> json_path;
    };

    int cmd_run(const RunOptions &opt, std::ostream &out);
    int cmd_sweep(const SweepOptions &opt, std::ostream &out);
    int cmd_check(const std::string &trace_path, const std::string &scenario_path, std::ostream &out);
} // namespace ftcoll::cli
