#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perisolve/operators.hpp"
#include "perisolve/periodic_solver.hpp"
#include "perisolve/problem.hpp"
#include "perisolve/regularization.hpp"

namespace perisolve {

// ---------------------------------------------------------------------------
// Oracles

struct OracleOptions {
    double tolerance = 1e-10;
    long max_iterations = 1000000;
    /// Douglas-Rachford step; nonpositive selects 1 / (smallest eigenvalue of D^{-1/2} A D^{-1/2}).
    double step = 0.0;
};

/// Brute-force periodic solve for tiny instances (at most 3 dofs, K <= 10^4,
/// convection off). All K backward Euler steps and the periodic wrap are
/// stacked into one inclusion L Y - F + D W = 0, W in dg(Y), which is solved
/// by Douglas-Rachford splitting with dense LU for the linear part and the
/// nodal prox for the convex part. Uses the same time discretization as the
/// solver, so agreement tests only the fixed-point logic.
Trajectory oracle_tiny_periodic(const RegularizedOperator& reg, const InclusionOperator& op, double period,
                                int time_steps, const OracleOptions& options = {});

/// Exact time-periodic solution of ((eps J + m M) y)' + a J y = M f for
/// constant m, a and separable Fourier forcing on a box. Each mode solves
/// m_eff c' + a lambda c = amplitude sin(theta) with lambda = sum_d (k_d pi / l_d)^2
/// and m_eff = m + eps lambda.
class FourierHeatOracle {
public:
    FourierHeatOracle(double m, double a, double epsilon, std::vector<double> extents, double period,
                      std::vector<FourierMode> modes);

    /// Periodic amplitude of mode `index` at time t.
    double coefficient(std::size_t index, double t) const;
    double value(double t, Point z) const;
    Vector nodal(const SpatialDiscretization& mesh, double t) const;

private:
    double m_;
    double a_;
    double epsilon_;
    std::vector<double> extents_;
    double period_;
    std::vector<FourierMode> modes_;
};

struct ErrorNorms {
    double max = 0.0;
    /// sqrt(sum_{k=1}^K dt e_k^T M e_k).
    double l2 = 0.0;
};

using ExactField = std::function<double(double t, Point z)>;

ErrorNorms manufactured_error(const OperatorSet& ops, const Trajectory& trajectory, const ExactField& exact);

/// |sum_k [(u_k - u_{k-1}, w_k)_* + (u_{k-1}, w_k - w_{k-1})_*] - (u_K, w_K)_* + (u_0, w_0)_*|.
double integration_by_parts_defect(const RegularizedOperator& reg, const std::vector<Vector>& u,
                                   const std::vector<Vector>& w);

// ---------------------------------------------------------------------------
// Hypothesis checks

struct CheckResult {
    std::string name;
    bool passed = false;
    /// Signed slack of the measured quantity against its bound; negative on failure.
    double margin = 0.0;
    std::string detail;
};

struct BatteryOptions {
    std::uint64_t seed = 0;
    int probes = 1000;
    /// Regularization parameters at which eps J + B and the V* norm are checked.
    std::vector<double> epsilons{1.0, 1.0 / 32.0};
    /// At most this many times of the time grid are used by the H(A) probes.
    int max_probe_times = 8;
};

/// Runs every hypothesis check on the instance. Each check evaluates only
/// its own hypothesis: operator checks use coefficients clamped to m >= 0 and
/// a >= a0, so an injected coefficient violation fails exactly one check.
/// Never throws on hypothesis failures.
std::vector<CheckResult> hypothesis_battery(const ProblemInstance& instance, const BatteryOptions& options = {});

bool all_passed(const std::vector<CheckResult>& checks);

// ---------------------------------------------------------------------------
// Run diagnostics

struct EnergyDiagnostics {
    /// sum_k dt (v_k, u_k)_* with v_k including -f(t_k).
    double energy = 0.0;
    /// tau_per (1 + max_k |u_k|_*).
    double tolerance = 0.0;
    /// tolerance * (1 + sum_k dt |u_k|_*).
    double slack = 0.0;
    /// ||c4||_1 + sum_k dt <f_k, y_k> + slack - c3 sum_k dt ||y_k||^p.
    double apriori_margin = 0.0;
    double forcing_pairing = 0.0;
    double norm_X_lp = 0.0;
    double norm_Vstar_lp = 0.0;

    bool energy_ok() const { return energy <= slack; }
    bool apriori_ok() const { return apriori_margin >= -10.0 * tolerance; }
};

EnergyDiagnostics energy_diagnostics(const InclusionOperator& op, const Trajectory& trajectory,
                                     const GrowthConstants& constants, double periodic_tolerance, double exponent);

/// Largest Y with c3 Y^p <= C4 + F Y, where C4 = ||c4||_1 + slack and
/// F = ||f||_{L^p'(T, X*)}; infinity when c3 <= 0.
double uniform_bound(const InclusionOperator& op, const std::vector<double>& times, const GrowthConstants& constants,
                     double slack, double exponent);

struct StageReport {
    int n = 0;
    double epsilon = 0.0;
    int iterations = 0;
    double periodicity_residual = 0.0;
    double boundary_residual = 0.0;
    double distance = 0.0;
    double inclusion_residual = 0.0;
    double inclusion_residual_max = 0.0;
    double max_step_residual = 0.0;
    EnergyDiagnostics energy;
    double seconds = 0.0;
};

/// Per-run diagnostics, filled stage by stage.
struct RunReport {
    std::string instance;
    std::vector<double> schedule;
    GrowthConstants constants;
    std::vector<StageReport> stages;
    bool tolerance_reached = false;
    double uniform_bound = 0.0;
    double max_norm_X_lp = 0.0;
    std::optional<double> oracle_l2_error;
    std::optional<double> oracle_max_error;

    void add_stage(const InclusionOperator& op, const StageResult& stage, double periodic_tolerance, double exponent);
    /// Sets the uniform bound from the last stage's slack.
    void finish(const InclusionOperator& op, const std::vector<double>& times, bool reached, double exponent);

    bool bound_ok() const { return max_norm_X_lp <= 10.0 * uniform_bound; }
    bool energy_ok() const;

    /// Ordered key/value pairs; values use 17 significant digits.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Round-trip formatting of a double ("%.17g").
std::string format_double(double value);

}  // namespace perisolve
