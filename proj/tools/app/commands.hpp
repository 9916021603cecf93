#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"

namespace perisolve::app {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_hypothesis = 3, exit_nonconvergence = 4 };

struct CommandOptions {
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

/// Output directory: the flag, then PERISOLVE_OUTPUT_DIR, then the config key.
std::filesystem::path resolve_output_dir(const InstanceConfig& config, const CommandOptions& options);

/// Condensed outcome of one run, used for sweep summaries.
struct RunSummary {
    int exit_code = exit_ok;
    std::string message;
    int stages = 0;
    double final_epsilon = 0.0;
    double periodicity_residual = 0.0;
    double boundary_residual = 0.0;
    double inclusion_residual = 0.0;
    double distance = 0.0;
    std::optional<double> oracle_l2_error;
};

/// Solves the instance and writes trajectory, report and convergence files to `out_dir`.
RunSummary run_instance(const InstanceConfig& config, const std::filesystem::path& out_dir, std::uint64_t seed,
                        std::ostream& log);

int run_command(const std::filesystem::path& config_path, const CommandOptions& options, std::ostream& out,
                std::ostream& err);
int check_command(const std::filesystem::path& config_path, const CommandOptions& options, std::ostream& out,
                  std::ostream& err);
int sweep_command(const std::filesystem::path& config_path, const std::string& param,
                  const std::vector<std::string>& values, const CommandOptions& options, std::ostream& out,
                  std::ostream& err);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace perisolve::app
