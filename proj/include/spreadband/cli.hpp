#pragma once

#include "spreadband/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>

namespace spreadband::cli {

/// Flat key=value configuration ('#' starts a comment). Model keys are
/// required; command-specific keys are validated by each command and unknown
/// keys are rejected.
struct RunConfig {
    ModelParams params;
    std::map<std::string, std::string> extras;

    static RunConfig load(const std::string& path);
    static RunConfig parse(std::istream& in);

    double extra_number(const std::string& key, double fallback) const;
    std::string extra_string(const std::string& key, const std::string& fallback) const;
};

/// Command-line overrides for config values.
struct Options {
    std::optional<std::string> out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_n;
    std::optional<int> paths;
    std::optional<double> horizon;
    std::optional<double> dt;
};

/// Exit codes: 0 success, 2 validation, 3 solver/evaluation, 4 verification
/// or oracle mismatch. The run_* functions either return 0 or throw; main()
/// maps exceptions to codes.
int run_solve(const RunConfig& cfg, const Options& opt, std::ostream& out);
int run_verify(const RunConfig& cfg, const Options& opt, std::ostream& out);
int run_oracle(const RunConfig& cfg, const Options& opt, std::ostream& out);
int run_simulate(const RunConfig& cfg, const Options& opt, std::ostream& out);
int run_sweep(const RunConfig& cfg, const Options& opt, std::ostream& out);

int exit_code_for(const std::exception& e);

}  // namespace spreadband::cli
