#include "app/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "perisolve/errors.hpp"
#include "perisolve/verification.hpp"

namespace perisolve::app {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

fs::path resolve_output_dir(const InstanceConfig& config, const CommandOptions& options) {
    if (options.output_dir) return *options.output_dir;
    if (const char* env = std::getenv("PERISOLVE_OUTPUT_DIR"); env && *env) return env;
    return config.output_directory;
}

namespace {

std::string trajectory_csv(const Trajectory& traj) {
    const std::size_t n = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
    std::string out = "t";
    for (std::size_t i = 1; i <= n; ++i) out += ",node_" + std::to_string(i);
    out += '\n';
    out.reserve(out.size() + traj.states.size() * (n + 1) * 24);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out += format_double(traj.times[k]);
        for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) {
            out += ',';
            out += format_double(traj.states[k][i]);
        }
        out += '\n';
    }
    return out;
}

std::string convergence_csv(const std::vector<StageResult>& stages) {
    std::string out = "n,epsilon,d_n,periodicity_residual,inclusion_residual,iterations,seconds\n";
    for (const StageResult& s : stages) {
        out += std::to_string(s.n) + ',' + format_double(s.epsilon) + ',' + format_double(s.distance) + ',' +
               format_double(s.periodicity_residual) + ',' + format_double(s.inclusion_residual) + ',' +
               std::to_string(s.iterations) + ',' + format_double(s.seconds) + '\n';
    }
    return out;
}

std::string describe(const InstanceConfig& c) {
    std::ostringstream d;
    d << "dimension=" << c.dimension << " cells=";
    for (std::size_t i = 0; i < c.cells.size(); ++i) d << (i ? "x" : "") << c.cells[i];
    d << " steps=" << c.steps << " m=" << c.m_kind << " a=" << c.a_kind << " g=" << c.g_kind
      << " convection=" << (c.convection ? "on" : "off") << " forcing=" << c.forcing_kind
      << " schedule=" << c.schedule;
    return d.str();
}

std::string stage_file(int n) {
    char name[48];
    std::snprintf(name, sizeof name, "trajectory_stage_%02d.csv", n);
    return name;
}

}  // namespace

RunSummary run_instance(const InstanceConfig& config, const fs::path& out_dir, std::uint64_t seed, std::ostream& log) {
    RunSummary summary;
    ProblemInstance instance;
    SolverConfig solver;
    AssembledProblem problem;
    try {
        instance = build_instance(config);
        solver = build_solver_config(config);
        problem = assemble(instance);
        fs::create_directories(out_dir);
    } catch (const HypothesisViolation& e) {
        summary.exit_code = exit_hypothesis;
        summary.message = e.what();
        return summary;
    } catch (const ConfigError& e) {
        summary.exit_code = exit_config;
        summary.message = e.what();
        return summary;
    } catch (const fs::filesystem_error& e) {
        summary.exit_code = exit_config;
        summary.message = std::string("output directory: ") + e.what();
        return summary;
    }

    const InclusionOperator& op = *problem.op;
    const std::vector<double> times = instance.time_grid();
    RunReport report;
    report.instance = describe(config);
    report.schedule = config.schedule == "direct" ? std::vector<double>{0.0} : solver.epsilons;
    report.constants = estimate_constants(op, times, seed);

    std::vector<StageResult> stages;
    bool reached = false;
    try {
        if (config.schedule == "direct") {
            stages.push_back(direct_solve(op, solver));
        } else {
            ContinuationResult result = continuation_solve(op, solver);
            stages = std::move(result.stages);
            reached = result.tolerance_reached;
        }
    } catch (const ContinuationAborted& e) {
        stages = e.completed();
        summary.exit_code = exit_nonconvergence;
        summary.message = e.what();
    } catch (const NonConvergence& e) {
        summary.exit_code = exit_nonconvergence;
        summary.message = e.what();
    } catch (const DegenerateOperator& e) {
        summary.exit_code = exit_hypothesis;
        summary.message = std::string("H(B) violated: the direct schedule needs positive definite B (") + e.what() + ")";
    } catch (const HypothesisViolation& e) {
        summary.exit_code = exit_hypothesis;
        summary.message = e.what();
    } catch (const NumericalError& e) {
        summary.exit_code = exit_nonconvergence;
        summary.message = e.what();
    }

    for (const StageResult& s : stages) report.add_stage(op, s, solver.periodic_tolerance, solver.exponent);
    report.finish(op, times, reached, solver.exponent);
    if (summary.exit_code == exit_ok && !report.bound_ok()) {
        summary.exit_code = exit_hypothesis;
        summary.message = "uniform bound violated: max ||y||_{L^p(T,X)} = " + format_double(report.max_norm_X_lp) +
                          " exceeds 10 x " + format_double(report.uniform_bound);
    }
    if (summary.exit_code == exit_ok && !report.energy_ok()) {
        summary.exit_code = exit_hypothesis;
        summary.message = "energy or a-priori bound violated (see report)";
    }
    if (!stages.empty() && has_fourier_oracle(config)) {
        const FourierHeatOracle oracle(config.m_value, config.a_value, stages.back().epsilon, config.extents,
                                       config.period, config.forcing_kind == "fourier" ? config.forcing_modes
                                                                                       : std::vector<FourierMode>{});
        const ErrorNorms e = manufactured_error(*problem.operators, stages.back().trajectory,
                                                [&](double t, Point z) { return oracle.value(t, z); });
        report.oracle_l2_error = e.l2;
        report.oracle_max_error = e.max;
        summary.oracle_l2_error = e.l2;
    }

    for (const StageResult& s : stages) write_atomic(out_dir / stage_file(s.n), trajectory_csv(s.trajectory));
    if (!stages.empty()) write_atomic(out_dir / "trajectory_final.csv", trajectory_csv(stages.back().trajectory));
    write_atomic(out_dir / "convergence.csv", convergence_csv(stages));

    std::string text;
    text += "status = " + std::string(summary.exit_code == exit_ok ? "ok" : "failed") + "\n";
    text += "exit_code = " + std::to_string(summary.exit_code) + "\n";
    if (!summary.message.empty()) text += "message = " + summary.message + "\n";
    for (const auto& [key, value] : report.entries()) text += key + " = " + value + "\n";
    for (const auto& [key, value] : echo_config(config)) text += "config." + key + " = " + value + "\n";
    write_atomic(out_dir / "report.txt", text);

    summary.stages = static_cast<int>(stages.size());
    if (!stages.empty()) {
        const StageResult& f = stages.back();
        summary.final_epsilon = f.epsilon;
        summary.periodicity_residual = f.periodicity_residual;
        summary.boundary_residual = f.boundary_residual;
        summary.inclusion_residual = f.inclusion_residual;
        summary.distance = f.distance;
    }
    log << "wrote " << stages.size() << " stage(s) to " << out_dir.string() << "\n";
    return summary;
}

int run_command(const fs::path& config_path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
    InstanceConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    if (options.seed) config.seed = *options.seed;
    std::ostringstream sink;
    const RunSummary s = run_instance(config, resolve_output_dir(config, options), config.seed,
                                      options.quiet ? static_cast<std::ostream&>(sink) : out);
    if (s.exit_code != exit_ok) {
        err << "error: " << s.message << "\n";
    } else if (!options.quiet) {
        out << "stages " << s.stages << ", final eps " << format_double(s.final_epsilon) << ", periodicity residual "
            << format_double(s.periodicity_residual) << ", boundary residual " << format_double(s.boundary_residual)
            << "\n";
        if (s.oracle_l2_error) out << "oracle L2 error " << format_double(*s.oracle_l2_error) << "\n";
    }
    return s.exit_code;
}

int check_command(const fs::path& config_path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
    ProblemInstance instance;
    InstanceConfig config;
    try {
        config = load_config(config_path);
        instance = build_instance(config);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    BatteryOptions battery;
    battery.seed = options.seed.value_or(config.seed);
    const std::vector<CheckResult> checks = hypothesis_battery(instance, battery);
    std::size_t width = 0;
    for (const CheckResult& c : checks) width = std::max(width, c.name.size());
    for (const CheckResult& c : checks) {
        if (options.quiet && c.passed) continue;
        out << (c.passed ? "PASS " : "FAIL ") << c.name << std::string(width - c.name.size() + 2, ' ')
            << "margin " << format_double(c.margin) << "  " << c.detail << "\n";
    }
    if (!all_passed(checks)) {
        for (const CheckResult& c : checks) {
            if (!c.passed) err << "error: " << c.name << " failed\n";
        }
        return exit_hypothesis;
    }
    return exit_ok;
}

int sweep_command(const fs::path& config_path, const std::string& param, const std::vector<std::string>& values,
                  const CommandOptions& options, std::ostream& out, std::ostream& err) {
    if (values.empty()) {
        err << "error: sweep needs at least one value\n";
        return exit_config;
    }
    if (!is_config_key(param)) {
        err << "error: unknown sweep parameter '" << param << "'\n";
        return exit_config;
    }
    InstanceConfig base;
    try {
        base = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    if (options.seed) base.seed = *options.seed;
    const fs::path root = resolve_output_dir(base, options);
    try {
        fs::create_directories(root);
    } catch (const fs::filesystem_error& e) {
        err << "error: output directory: " << e.what() << "\n";
        return exit_config;
    }

    std::ostringstream sink;
    std::ostream& log = options.quiet ? static_cast<std::ostream&>(sink) : out;
    std::string summary = "value,exit_code,stages,final_epsilon,periodicity_residual,boundary_residual,"
                          "inclusion_residual,d_n,oracle_l2_error\n";
    int worst = exit_ok;
    for (const std::string& value : values) {
        std::string dir = param + "_" + value;
        std::replace_if(dir.begin(), dir.end(), [](char ch) { return !(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_'); }, '_');
        InstanceConfig config = base;
        RunSummary s;
        try {
            set_config_value(config, param, value, config_path.parent_path());
            s = run_instance(config, root / dir, config.seed, log);
        } catch (const ConfigError& e) {
            s.exit_code = exit_config;
            s.message = e.what();
        }
        if (s.exit_code != exit_ok) err << "error: " << param << " = " << value << ": " << s.message << "\n";
        worst = std::max(worst, s.exit_code);
        summary += value + ',' + std::to_string(s.exit_code) + ',' + std::to_string(s.stages) + ',' +
                   format_double(s.final_epsilon) + ',' + format_double(s.periodicity_residual) + ',' +
                   format_double(s.boundary_residual) + ',' + format_double(s.inclusion_residual) + ',' +
                   format_double(s.distance) + ',' + (s.oracle_l2_error ? format_double(*s.oracle_l2_error) : "") +
                   '\n';
    }
    write_atomic(root / "summary.csv", summary);
    return worst;
}

}  // namespace perisolve::app
