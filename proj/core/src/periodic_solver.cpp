#include "perisolve/periodic_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "perisolve/anderson.hpp"

namespace perisolve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::vector<double> SolverConfig::harmonic_schedule(int stages) {
    if (stages < 1) throw ConfigError("continuation schedule needs at least one stage");
    std::vector<double> eps;
    eps.reserve(static_cast<std::size_t>(stages));
    for (int n = 1; n <= stages; ++n) eps.push_back(1.0 / n);
    return eps;
}

void SolverConfig::validate() const {
    if (!(period > 0.0) || !std::isfinite(period)) throw ConfigError("period must be positive");
    if (time_steps < 2) throw ConfigError("time_steps must be at least 2");
    if (epsilons.empty()) throw ConfigError("epsilon schedule is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw ConfigError("epsilon values must be strictly positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw ConfigError("epsilon values must be strictly decreasing");
        }
    }
    if (!(step.step_tolerance > 0.0) || !(step.newton_tolerance > 0.0) || !(periodic_tolerance > 0.0) ||
        !(continuation_tolerance > 0.0)) {
        throw ConfigError("tolerances must be positive");
    }
    if (step.max_inner_iterations < 1 || step.max_newton_iterations < 1 || max_poincare_iterations < 1) {
        throw ConfigError("iteration limits must be at least 1");
    }
    if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
    if (anderson_depth < 0) throw ConfigError("anderson depth must be nonnegative");
    if (!(exponent >= 2.0) || !std::isfinite(exponent)) throw ConfigError("exponent p must satisfy 2 <= p < inf");
}

StepSolver::StepSolver(const RegularizedOperator& reg, const InclusionOperator& op, double dt, StepOptions options)
    : reg_(reg), op_(op), dt_(dt), options_(options) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (reg.matrix().rows() != op.num_dofs()) throw DimensionError("regularized operator and inclusion differ in size");
    if (!op.operators().diffusion().time_dependent()) {
        SparseMatrix K = reg.matrix() / dt + *op.diffusion_matrix(0.0);
        K.makeCompressed();
        static_system_ = std::make_shared<const SparseMatrix>(std::move(K));
    }
}

std::shared_ptr<const SparseMatrix> StepSolver::system_matrix(double t) {
    if (static_system_) return static_system_;
    SparseMatrix K = reg_.matrix() / dt_ + *op_.diffusion_matrix(t);
    K.makeCompressed();
    return std::make_shared<const SparseMatrix>(std::move(K));
}

const Eigen::SimplicialLLT<SparseMatrix>& StepSolver::full_factor(const SparseMatrix& K) {
    if (factored_matrix_ != &K) {
        full_factor_.compute(K);
        if (full_factor_.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the step matrix failed");
        factored_matrix_ = &K;
    }
    return full_factor_;
}

StepSolver::Monotone StepSolver::solve_monotone(const SparseMatrix& K, const Vector& b, const Vector& guess,
                                                double t) {
    const ConvexTerm& g = op_.g();
    const Vector& D = op_.operators().D();
    const Eigen::Index n = b.size();
    Monotone out;

    if (g.is_zero()) {
        out.y = full_factor(K).solve(b);
        out.w = Vector::Zero(n);
        return out;
    }

    // Minimize 1/2 y'Ky - b'y + sum_i D_i g(y_i). Forward-backward steps in the
    // D-metric use gamma = 0.95 / L, with L bounded by Gershgorin for D^{-1} K.
    if (gamma_matrix_ != &K) {
        Vector rows = Vector::Zero(n);
        for (int col = 0; col < K.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator itk(K, col); itk; ++itk) rows[itk.row()] += std::abs(itk.value());
        }
        gamma_ = 0.95 / rows.cwiseQuotient(D).maxCoeff();
        gamma_matrix_ = &K;
        reduced_matrix_ = nullptr;
    }
    const double gamma = gamma_;
    const double decrease = 0.5 * (1.0 - 0.95) / (2.0 * gamma);

    struct Eval {
        Vector y;
        Vector z;
        Vector p;
        double merit = 0.0;
        double residual = 0.0;
    };
    // Forward-backward envelope: an exact penalty whose minimizers are the solutions.
    auto evaluate = [&](Vector y) {
        Eval e;
        const Vector grad = K * y - b;
        e.z = y - gamma * grad.cwiseQuotient(D);
        e.p.resize(n);
        double gsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            e.p[i] = g.prox(gamma, e.z[i]);
            gsum += D[i] * g.value(e.p[i]);
        }
        const Vector r = e.p - y;
        e.merit = 0.5 * y.dot(grad) - 0.5 * b.dot(y) + grad.dot(r) + r.dot(D.cwiseProduct(r)) / (2.0 * gamma) + gsum;
        e.residual = r.lpNorm<Eigen::Infinity>();
        e.y = std::move(y);
        return e;
    };

    // From a cold start the active set spreads about one node per side per
    // iteration, so the cap grows with the dof count.
    Eval cur = evaluate(guess);
    double best = cur.residual;
    std::vector<double> history;
    int it = 0;
    for (;; ++it) {
        const double scale = 1.0 + cur.y.lpNorm<Eigen::Infinity>();
        if (cur.residual <= options_.newton_tolerance * scale) break;
        // Stagnation at rounding level: the last step no longer halves the residual.
        if (!history.empty() && cur.residual <= 1e-11 * scale && cur.residual >= 0.5 * history.back()) break;
        history.push_back(cur.residual);
        if (it >= options_.max_newton_iterations + n) {
            std::ostringstream msg;
            msg << "semismooth Newton did not converge at t = " << t << " (residual " << cur.residual << ")";
            throw NonConvergence(msg.str(), history);
        }

        // Newton on F(y) = y - prox(z(y)), Jacobian (I - P) + gamma P D^{-1} K.
        // Rows with P_i = 0 fix d_i; the rest form an SPD system on S = {P_i > 0}.
        const Vector F = cur.y - cur.p;
        std::vector<double> slope(static_cast<std::size_t>(n));
        std::vector<int> local(static_cast<std::size_t>(n), -1);
        std::vector<int> reduced;
        for (Eigen::Index i = 0; i < n; ++i) {
            slope[i] = g.prox_slope(gamma, cur.z[i]);
            if (slope[i] > 0.0) {
                local[i] = static_cast<int>(reduced.size());
                reduced.push_back(static_cast<int>(i));
            }
        }
        Vector d(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (slope[i] == 0.0) d[i] = -F[i];
        }
        if (!reduced.empty()) {
            const auto m = static_cast<Eigen::Index>(reduced.size());
            Vector rhs(m);
            for (Eigen::Index r = 0; r < m; ++r) {
                const int i = reduced[r];
                rhs[r] = -D[i] * F[i] / (gamma * slope[i]);
            }
            bool all_unit = m == n;
            for (int i : reduced) all_unit = all_unit && slope[i] == 1.0;
            for (int col = 0; col < K.outerSize(); ++col) {
                if (slope[col] > 0.0) continue;
                for (SparseMatrix::InnerIterator itk(K, col); itk; ++itk) {
                    const int row = static_cast<int>(itk.row());
                    if (local[row] >= 0) rhs[local[row]] -= itk.value() * d[col];
                }
            }
            Vector dS;
            if (all_unit) {
                dS = full_factor(K).solve(rhs);
            } else {
                if (reduced_matrix_ != &K || reduced_key_ != slope) {
                    std::vector<Eigen::Triplet<double>> triplets;
                    for (int col = 0; col < K.outerSize(); ++col) {
                        if (local[col] < 0) continue;
                        for (SparseMatrix::InnerIterator itk(K, col); itk; ++itk) {
                            const int row = static_cast<int>(itk.row());
                            if (local[row] >= 0) triplets.emplace_back(local[row], local[col], itk.value());
                        }
                    }
                    for (int i : reduced) {
                        triplets.emplace_back(local[i], local[i], D[i] * (1.0 - slope[i]) / (gamma * slope[i]));
                    }
                    SparseMatrix Kss(m, m);
                    Kss.setFromTriplets(triplets.begin(), triplets.end());
                    reduced_factor_.compute(Kss);
                    if (reduced_factor_.info() != Eigen::Success) {
                        throw NumericalError("Cholesky factorization of the reduced Newton system failed");
                    }
                    reduced_key_ = slope;
                    reduced_matrix_ = &K;
                }
                dS = reduced_factor_.solve(rhs);
            }
            for (Eigen::Index r = 0; r < m; ++r) d[reduced[r]] = dS[r];
        }

        // Line search along (1 - tau) p + tau (y + d). tau = 0 is the plain
        // forward-backward step, which always decreases the envelope; steps that
        // halve the best residual so far are accepted outright.
        const Vector newton = cur.y + d;
        const double target = cur.merit - decrease * F.dot(D.cwiseProduct(F));
        Eval next;
        bool accepted = false;
        double tau = 1.0;
        for (int ls = 0; ls < 20 && !accepted; ++ls, tau *= 0.5) {
            next = evaluate(tau * newton + (1.0 - tau) * cur.p);
            accepted = next.residual <= 0.5 * best || next.merit <= target;
        }
        if (!accepted) next = evaluate(cur.p);
        cur = std::move(next);
        best = std::min(best, cur.residual);
    }

    // Recover an exact pair: y = prox(z), w = (z - y) / gamma lies in dg(y).
    out.y = cur.p;
    out.w = (cur.z - cur.p) / gamma;
    out.iterations = it;
    return out;
}

StepResult StepSolver::step(double t, const Vector& y_prev) {
    if (y_prev.size() != op_.num_dofs()) throw DimensionError("step: state length does not match dof count");
    const std::shared_ptr<const SparseMatrix> K = system_matrix(t);
    if (K != factored_owner_) {
        // A new system matrix invalidates cached data keyed on its address.
        factored_owner_ = K;
        factored_matrix_ = nullptr;
        reduced_matrix_ = nullptr;
        gamma_matrix_ = nullptr;
    }
    const Vector mass_term = reg_.apply(y_prev) / dt_;
    const Vector f = op_.forcing_covector(t);

    StepResult result;
    Vector lagged = y_prev;
    std::vector<double> history;
    Monotone solved;
    for (int inner = 1;; ++inner) {
        Vector b = mass_term + f;
        if (op_.convection()) b -= op_.convection_covector(lagged);
        solved = solve_monotone(*K, b, lagged, t);
        result.newton_iterations += solved.iterations;
        result.inner_iterations = inner;
        if (!op_.convection()) break;
        const double change = reg_.state_norm(solved.y - lagged);
        const double scale = 1.0 + reg_.state_norm(solved.y);
        const bool stalled = !history.empty() && change <= 1e3 * options_.step_tolerance * scale &&
                             change >= 0.5 * history.back();
        history.push_back(change);
        lagged = solved.y;
        if (change <= options_.step_tolerance * scale || stalled) break;
        if (inner >= options_.max_inner_iterations) {
            std::ostringstream msg;
            msg << "convection lagging did not converge at t = " << t << " after " << inner
                << " iterations (last change " << change << "); the time step may be too large";
            throw NonConvergence(msg.str(), history);
        }
    }

    result.y = std::move(solved.y);
    result.subgradient = std::move(solved.w);
    result.selection = op_.eval_A1(t, result.y) - f;
    if (!op_.g().is_zero()) result.selection += op_.operators().D().cwiseProduct(result.subgradient);
    const Vector defect = reg_.apply(result.y - y_prev) / dt_ + result.selection;
    result.step_residual = reg_.norm_Vstar(defect);
    return result;
}

StepResult implicit_step(const RegularizedOperator& reg, const InclusionOperator& op, double t, const Vector& y_prev,
                         double dt, const StepOptions& options) {
    StepSolver solver(reg, op, dt, options);
    return solver.step(t, y_prev);
}

Trajectory poincare_map(const RegularizedOperator& reg, const InclusionOperator& op, const SolverConfig& config,
                        const Vector& y0) {
    if (config.time_steps < 2) throw ConfigError("time_steps must be at least 2");
    if (y0.size() != op.num_dofs()) throw DimensionError("initial state length does not match dof count");
    const int K = config.time_steps;
    const double dt = config.dt();

    Trajectory traj;
    traj.epsilon = reg.epsilon();
    traj.times.resize(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) traj.times[static_cast<std::size_t>(k)] = config.period * k / K;
    traj.times.back() = config.period;
    traj.states.reserve(static_cast<std::size_t>(K) + 1);
    traj.selections.reserve(static_cast<std::size_t>(K) + 1);
    traj.subgradients.reserve(static_cast<std::size_t>(K) + 1);
    traj.states.push_back(y0);
    traj.selections.emplace_back();
    traj.subgradients.emplace_back();

    StepSolver solver(reg, op, dt, config.step);
    for (int k = 1; k <= K; ++k) {
        StepResult step;
        try {
            step = solver.step(traj.times[static_cast<std::size_t>(k)], traj.states.back());
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string("time step ") + std::to_string(k) + ": " + e.what(), e.history(), k);
        }
        traj.max_step_residual = std::max(traj.max_step_residual, step.step_residual);
        traj.max_inner_iterations = std::max(traj.max_inner_iterations, step.inner_iterations);
        traj.states.push_back(std::move(step.y));
        traj.selections.push_back(std::move(step.selection));
        traj.subgradients.push_back(std::move(step.subgradient));
    }
    return traj;
}

PeriodicSolution solve_periodic_eps(const RegularizedOperator& reg, const InclusionOperator& op,
                                    const SolverConfig& config, const std::optional<Vector>& y0) {
    Vector start = y0 ? *y0 : Vector::Zero(op.num_dofs());
    const int depth = config.acceleration == Acceleration::anderson ? config.anderson_depth : 0;
    const double relaxation = config.acceleration == Acceleration::plain ? 1.0 : config.relaxation;
    AndersonMixer mixer(depth, relaxation);

    PeriodicSolution out;
    for (int it = 1; it <= config.max_poincare_iterations; ++it) {
        Trajectory traj = poincare_map(reg, op, config, start);
        const double residual = reg.state_norm(traj.states.back() - traj.states.front());
        out.residual_history.push_back(residual);
        if (!std::isfinite(residual)) {
            throw NonConvergence("Poincare iteration produced a non-finite state", out.residual_history);
        }
        if (residual <= config.periodic_tolerance) {
            out.trajectory = std::move(traj);
            out.iterations = it;
            out.periodicity_residual = residual;
            return out;
        }
        start = mixer.next(traj.states.front(), traj.states.back());
    }
    std::ostringstream msg;
    msg << "Poincare fixed point not reached in " << config.max_poincare_iterations << " iterations (eps = "
        << reg.epsilon() << ", last residual " << out.residual_history.back() << ")";
    throw NonConvergence(msg.str(), out.residual_history);
}

double lp_norm_X(const OperatorSet& ops, const Trajectory& trajectory, double p) {
    const double dt = trajectory.dt();
    double sum = 0.0;
    for (int k = 1; k <= trajectory.steps(); ++k) sum += dt * std::pow(ops.norm_X(trajectory.states[k]), p);
    return std::pow(sum, 1.0 / p);
}

double lp_distance_X(const OperatorSet& ops, const Trajectory& a, const Trajectory& b, double p) {
    if (a.steps() != b.steps()) throw DimensionError("trajectories have different time grids");
    const double dt = a.dt();
    double sum = 0.0;
    for (int k = 1; k <= a.steps(); ++k) sum += dt * std::pow(ops.norm_X(a.states[k] - b.states[k]), p);
    return std::pow(sum, 1.0 / p);
}

double lp_norm_Vstar(const RegularizedOperator& reg, const Trajectory& trajectory, double p) {
    const double dt = trajectory.dt();
    double sum = 0.0;
    for (int k = 1; k <= trajectory.steps(); ++k) sum += dt * std::pow(reg.state_norm(trajectory.states[k]), p);
    return std::pow(sum, 1.0 / p);
}

StageResult make_stage(int n, const RegularizedOperator& reg, const InclusionOperator& op, PeriodicSolution solution,
                       double exponent) {
    StageResult stage;
    stage.n = n;
    stage.epsilon = reg.epsilon();
    stage.iterations = solution.iterations;
    stage.residual_history = std::move(solution.residual_history);
    stage.periodicity_residual = solution.periodicity_residual;
    stage.trajectory = std::move(solution.trajectory);

    const Trajectory& traj = stage.trajectory;
    const SparseMatrix& B = op.operators().B();
    stage.boundary_residual = reg.norm_Vstar(B * (traj.states.front() - traj.states.back()));
    for (int k = 1; k <= traj.steps(); ++k) {
        const MembershipResidual r =
            op.membership_residual(traj.times[k], traj.states[k], traj.selections[k], exponent);
        stage.inclusion_residual = std::max(stage.inclusion_residual, r.lp);
        stage.inclusion_residual_max = std::max(stage.inclusion_residual_max, r.max);
    }
    return stage;
}

ContinuationResult continuation_solve(const InclusionOperator& op, const SolverConfig& config,
                                      const std::optional<Vector>& y0) {
    config.validate();
    ContinuationResult result;
    std::optional<Vector> start = y0;
    for (std::size_t i = 0; i < config.epsilons.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        const auto started = Clock::now();
        const RegularizedOperator reg(op.operators_ptr(), config.epsilons[i]);
        PeriodicSolution solution;
        try {
            solution = solve_periodic_eps(reg, op, config, start);
        } catch (const NonConvergence& e) {
            throw ContinuationAborted(e, n, std::move(result.stages));
        }
        StageResult stage = make_stage(n, reg, op, std::move(solution), config.exponent);
        const OperatorSet& ops = op.operators();
        stage.distance = result.stages.empty()
                             ? lp_norm_X(ops, stage.trajectory, config.exponent)
                             : lp_distance_X(ops, stage.trajectory, result.stages.back().trajectory, config.exponent);
        stage.seconds = seconds_since(started);
        start = stage.trajectory.states.back();
        const bool done = !result.stages.empty() && stage.distance <= config.continuation_tolerance;
        result.stages.push_back(std::move(stage));
        if (done) {
            result.tolerance_reached = true;
            break;
        }
    }
    return result;
}

StageResult direct_solve(const InclusionOperator& op, const SolverConfig& config, const std::optional<Vector>& y0) {
    SolverConfig checked = config;
    checked.epsilons = {1.0};
    checked.validate();
    const auto started = Clock::now();
    const RegularizedOperator reg(op.operators_ptr(), 0.0);
    StageResult stage = make_stage(0, reg, op, solve_periodic_eps(reg, op, config, y0), config.exponent);
    stage.distance = lp_norm_X(op.operators(), stage.trajectory, config.exponent);
    stage.seconds = seconds_since(started);
    return stage;
}

}  // namespace perisolve
