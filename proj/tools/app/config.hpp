#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "perisolve/operators.hpp"
#include "perisolve/periodic_solver.hpp"
#include "perisolve/problem.hpp"

namespace perisolve::app {

/// Parsed instance file. Flat `section.key = value` lines, '#' starts a comment.
struct InstanceConfig {
    int dimension = 1;
    std::vector<double> extents{1.0};
    std::vector<int> cells{32};

    double period = 1.0;
    int steps = 100;

    // m: constant | indicator | table
    std::string m_kind = "constant";
    double m_value = 1.0;
    double m_lower = 0.0;
    double m_upper = 0.5;
    double m_inside = 1.0;
    double m_outside = 0.0;
    std::vector<double> m_table;
    std::string m_table_file;

    // a: constant | separable | table
    std::string a_kind = "constant";
    double a_value = 1.0;
    /// Negative means "derive from the family".
    double a_lower_bound = -1.0;
    double a_time_amplitude = 0.0;
    double a_space_amplitude = 0.0;
    std::vector<double> a_table;
    std::string a_table_file;

    bool convection = false;

    std::string g_kind = "zero";
    double g_scale = 1.0;

    // forcing: zero | fourier | table
    std::string forcing_kind = "zero";
    std::vector<FourierMode> forcing_modes;
    std::string forcing_table_file;

    // solver.schedule: harmonic | list | direct
    std::string schedule = "harmonic";
    int stages = 8;
    std::vector<double> epsilons;
    double step_tolerance = 1e-12;
    double newton_tolerance = 1e-14;
    double periodic_tolerance = 1e-10;
    double continuation_tolerance = 1e-8;
    std::string acceleration = "anderson";
    double relaxation = 1.0;
    int anderson_depth = 3;
    int max_poincare = 200;
    int max_inner = 50;
    int max_newton = 100;
    double exponent = 2.0;

    std::string output_directory = "perisolve_out";
    std::uint64_t seed = 0;
};

/// Parses config text. Throws ConfigError("line N: ...") on unknown keys,
/// duplicate keys or malformed values. Relative table paths resolve against `base`.
InstanceConfig parse_config(const std::string& text, const std::filesystem::path& base = {});
InstanceConfig load_config(const std::filesystem::path& path);

/// Every key with its canonical value, in a fixed order. Parsing the echo
/// yields an equivalent configuration.
std::vector<std::pair<std::string, std::string>> echo_config(const InstanceConfig& config);
std::string echo_text(const InstanceConfig& config);

bool is_config_key(const std::string& key);
/// Sets one key from its text form. Throws ConfigError for unknown keys or bad values.
void set_config_value(InstanceConfig& config, const std::string& key, const std::string& value,
                      const std::filesystem::path& base = {});

/// Builds the mesh, coefficients, convex term and forcing. Throws ConfigError
/// for inconsistent data; coefficient hypotheses are not checked here.
ProblemInstance build_instance(const InstanceConfig& config);
SolverConfig build_solver_config(const InstanceConfig& config);

/// True when the Fourier heat oracle applies (constant m and a, g = 0, no convection).
bool has_fourier_oracle(const InstanceConfig& config);

}  // namespace perisolve::app
