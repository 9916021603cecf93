#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "perisolve/errors.hpp"
#include "perisolve/operators.hpp"
#include "perisolve/regularization.hpp"
#include "perisolve/types.hpp"

namespace perisolve {

enum class Acceleration { plain, relaxed, anderson };

/// Settings of the inner solve of one backward Euler step.
struct StepOptions {
    /// Picard lagging of the convection term stops when successive iterates
    /// differ by at most this much in |(eps J + B) .|_* (relative to 1 + |u|_*).
    double step_tolerance = 1e-12;
    int max_inner_iterations = 50;
    /// Newton iterations allowed beyond one per dof.
    int max_newton_iterations = 100;
    /// Sup-norm tolerance on the nodal prox residual y - prox(z(y)).
    double newton_tolerance = 1e-14;
};

struct SolverConfig {
    double period = 1.0;
    int time_steps = 100;
    /// Strictly positive, strictly decreasing regularization parameters.
    std::vector<double> epsilons = harmonic_schedule(8);
    StepOptions step;
    /// Poincare fixed-point tolerance on |u_K - u_0|_*.
    double periodic_tolerance = 1e-10;
    int max_poincare_iterations = 200;
    Acceleration acceleration = Acceleration::anderson;
    double relaxation = 1.0;
    int anderson_depth = 3;
    /// Stop the continuation once the L^p(T, X) distance between successive stages is below this.
    double continuation_tolerance = 1e-8;
    double exponent = 2.0;

    double dt() const { return period / time_steps; }
    /// Throws ConfigError when a field is out of range.
    void validate() const;

    /// eps_n = 1/n for n = 1..stages.
    static std::vector<double> harmonic_schedule(int stages);
};

/// Discrete periodic trajectory on t_k = k b / K.
///
/// `states[k]` is y_k for k = 0..K. `selections[k]` and `subgradients[k]`
/// belong to step k >= 1 (index 0 is left empty): v_k = A1(t_k, y_k) + D w_k - f(t_k)
/// with w_k in dg(y_k) nodewise, and u_k = (eps J + B) y_k satisfies
/// (u_k - u_{k-1}) / dt + v_k = 0 up to the step tolerance.
struct Trajectory {
    double epsilon = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> selections;
    std::vector<Vector> subgradients;
    /// max_k |(u_k - u_{k-1}) / dt + v_k|_*.
    double max_step_residual = 0.0;
    int max_inner_iterations = 0;

    int steps() const noexcept { return static_cast<int>(times.size()) - 1; }
    double dt() const { return times.back() / steps(); }
    double period() const { return times.back(); }
};

struct StepResult {
    Vector y;
    Vector selection;
    Vector subgradient;
    int inner_iterations = 0;
    int newton_iterations = 0;
    double step_residual = 0.0;
};

/// Backward Euler for ((eps J + B) y)' + A(t, y) - f(t) \ni 0 over one step.
///
/// Convection is lagged (Picard); each lagged problem
///   K y + D w = b,  w_i in dg(y_i),  K = (eps J + B) / dt + A_diff(t)
/// is solved by semismooth Newton on the nodal prox equation
/// y = prox_{gamma g}(y - gamma D^{-1}(K y - b)), globalized by a line search on
/// the forward-backward envelope. Every Newton system reduces to an SPD solve
/// on the nodes where the prox is not flat. Factorizations
/// are cached between calls, so one StepSolver must not be shared between threads.
class StepSolver {
public:
    StepSolver(const RegularizedOperator& reg, const InclusionOperator& op, double dt, StepOptions options = {});

    StepResult step(double t, const Vector& y_prev);

private:
    struct Monotone {
        Vector y;
        Vector w;
        int iterations = 0;
    };

    std::shared_ptr<const SparseMatrix> system_matrix(double t);
    Monotone solve_monotone(const SparseMatrix& K, const Vector& b, const Vector& guess, double t);
    const Eigen::SimplicialLLT<SparseMatrix>& full_factor(const SparseMatrix& K);

    const RegularizedOperator& reg_;
    const InclusionOperator& op_;
    double dt_;
    StepOptions options_;
    std::shared_ptr<const SparseMatrix> static_system_;
    const SparseMatrix* factored_matrix_ = nullptr;
    std::shared_ptr<const SparseMatrix> factored_owner_;
    Eigen::SimplicialLLT<SparseMatrix> full_factor_;
    std::vector<double> reduced_key_;
    const SparseMatrix* reduced_matrix_ = nullptr;
    Eigen::SimplicialLLT<SparseMatrix> reduced_factor_;
    const SparseMatrix* gamma_matrix_ = nullptr;
    double gamma_ = 0.0;
};

StepResult implicit_step(const RegularizedOperator& reg, const InclusionOperator& op, double t, const Vector& y_prev,
                         double dt, const StepOptions& options = {});

/// Integrates one period from y0. Throws NonConvergence with the failing step index.
Trajectory poincare_map(const RegularizedOperator& reg, const InclusionOperator& op, const SolverConfig& config,
                        const Vector& y0);

struct PeriodicSolution {
    Trajectory trajectory;
    int iterations = 0;
    std::vector<double> residual_history;
    /// |u_K - u_0|_* of the returned trajectory.
    double periodicity_residual = 0.0;
};

/// Fixed point of the Poincare map with the configured acceleration.
/// Throws NonConvergence with the residual history after max_poincare_iterations.
PeriodicSolution solve_periodic_eps(const RegularizedOperator& reg, const InclusionOperator& op,
                                    const SolverConfig& config, const std::optional<Vector>& y0 = std::nullopt);

/// One row of the continuation table.
struct StageResult {
    int n = 0;
    double epsilon = 0.0;
    Trajectory trajectory;
    int iterations = 0;
    std::vector<double> residual_history;
    double periodicity_residual = 0.0;
    /// |B y_0 - B y_K|_*.
    double boundary_residual = 0.0;
    /// max_k of the L^p' membership residual of (y_k, v_k).
    double inclusion_residual = 0.0;
    /// max_k of the nodewise membership residual.
    double inclusion_residual_max = 0.0;
    /// L^p(T, X) distance to the previous stage (to the zero trajectory for the first stage).
    double distance = 0.0;
    double seconds = 0.0;
};

struct ContinuationResult {
    std::vector<StageResult> stages;
    /// True when the schedule stopped on the continuation tolerance.
    bool tolerance_reached = false;

    const Trajectory& final_trajectory() const { return stages.back().trajectory; }
};

/// Raised when a continuation stage does not converge; carries the completed stages.
class ContinuationAborted : public NonConvergence {
public:
    ContinuationAborted(const NonConvergence& cause, int stage, std::vector<StageResult> completed)
        : NonConvergence("continuation stage " + std::to_string(stage) + " failed: " + cause.what(), cause.history(),
                         cause.failing_step()),
          stage_(stage), completed_(std::move(completed)) {}

    int stage() const noexcept { return stage_; }
    const std::vector<StageResult>& completed() const noexcept { return completed_; }

private:
    int stage_;
    std::vector<StageResult> completed_;
};

/// Solves the regularized periodic problem for eps_1 > eps_2 > ..., warm
/// starting each stage from the previous y-trajectory.
ContinuationResult continuation_solve(const InclusionOperator& op, const SolverConfig& config,
                                      const std::optional<Vector>& y0 = std::nullopt);

/// Single unregularized stage (eps = 0); requires B positive definite.
StageResult direct_solve(const InclusionOperator& op, const SolverConfig& config,
                         const std::optional<Vector>& y0 = std::nullopt);

/// Stage diagnostics (residuals and timing are left to the caller).
StageResult make_stage(int n, const RegularizedOperator& reg, const InclusionOperator& op, PeriodicSolution solution,
                       double exponent);

/// (sum_{k=1}^K dt ||y_k||^p)^(1/p), right-endpoint rule.
double lp_norm_X(const OperatorSet& ops, const Trajectory& trajectory, double p);
double lp_distance_X(const OperatorSet& ops, const Trajectory& a, const Trajectory& b, double p);
/// (sum_{k=1}^K dt |u_k|_*^p)^(1/p) with u_k = (eps J + B) y_k.
double lp_norm_Vstar(const RegularizedOperator& reg, const Trajectory& trajectory, double p);

}  // namespace perisolve
