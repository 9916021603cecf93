#include "perisolve/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "perisolve/errors.hpp"

namespace perisolve {

namespace {

DenseMatrix dense(const SparseMatrix& m) { return DenseMatrix(m); }

double smallest_symmetric_eigenvalue(const DenseMatrix& m) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

Trajectory oracle_tiny_periodic(const RegularizedOperator& reg, const InclusionOperator& op, double period,
                                int time_steps, const OracleOptions& options) {
    const int n = op.num_dofs();
    const int K = time_steps;
    if (n < 1 || n > 3) throw ConfigError("tiny oracle needs 1 to 3 dofs");
    if (K < 2 || K > 10000) throw ConfigError("tiny oracle needs 2 <= K <= 10000");
    if (op.convection()) throw ConfigError("tiny oracle does not handle convection");
    if (!(period > 0.0)) throw ConfigError("period must be positive");

    const double dt = period / K;
    const Eigen::Index N = static_cast<Eigen::Index>(K) * n;
    const DenseMatrix E = dense(reg.matrix());
    const Vector& D = op.operators().D();

    std::vector<double> times(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) times[static_cast<std::size_t>(k)] = period * k / K;
    times.back() = period;

    // Block j holds y_{j+1}; the periodic wrap makes y_0 = y_K the predecessor of block 0.
    DenseMatrix L = DenseMatrix::Zero(N, N);
    Vector F(N);
    Vector Dd(N);
    for (int j = 0; j < K; ++j) {
        const double t = times[static_cast<std::size_t>(j) + 1];
        const Eigen::Index row = static_cast<Eigen::Index>(j) * n;
        const Eigen::Index prev = static_cast<Eigen::Index>((j + K - 1) % K) * n;
        L.block(row, row, n, n) = E / dt + dense(*op.diffusion_matrix(t));
        L.block(row, prev, n, n) -= E / dt;
        F.segment(row, n) = op.forcing_covector(t);
        Dd.segment(row, n) = D;
    }

    double gamma = options.step;
    if (!(gamma > 0.0)) {
        const Vector scale = D.cwiseSqrt().cwiseInverse();
        const DenseMatrix A0 = scale.asDiagonal() * dense(*op.diffusion_matrix(times[1])) * scale.asDiagonal();
        gamma = 1.0 / smallest_symmetric_eigenvalue(A0);
    }
    const DenseMatrix R = DenseMatrix(Dd.asDiagonal()) + gamma * L;
    const Eigen::PartialPivLU<DenseMatrix> lu(R);
    const Vector gammaF = gamma * F;
    const ConvexTerm& g = op.g();
    auto prox = [&](const Vector& z) {
        Vector y(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) y[i] = g.prox(gamma, z[i]);
        return y;
    };

    Vector Z = Vector::Zero(N);
    Vector Y = prox(Z);
    long it = 0;
    std::vector<double> history;
    for (;; ++it) {
        Y = prox(Z);
        const Vector W = lu.solve(Dd.cwiseProduct(2.0 * Y - Z) + gammaF);
        const Vector step = W - Y;
        Z += step;
        const double change = step.lpNorm<Eigen::Infinity>();
        if (!std::isfinite(change)) throw NonConvergence("tiny oracle diverged", history);
        if (change <= options.tolerance * (1.0 + Y.lpNorm<Eigen::Infinity>())) break;
        if (it + 1 >= options.max_iterations) {
            history.push_back(change);
            throw NonConvergence("tiny oracle did not converge", history);
        }
        if (it % 1000 == 0) history.push_back(change);
    }
    Y = prox(Z);
    const Vector Wsub = (Z - Y) / gamma;

    Trajectory traj;
    traj.epsilon = reg.epsilon();
    traj.times = times;
    traj.states.push_back(Y.segment(static_cast<Eigen::Index>(K - 1) * n, n));
    traj.selections.emplace_back();
    traj.subgradients.emplace_back();
    for (int k = 1; k <= K; ++k) {
        const Eigen::Index row = static_cast<Eigen::Index>(k - 1) * n;
        const double t = times[static_cast<std::size_t>(k)];
        Vector y = Y.segment(row, n);
        Vector w = g.is_zero() ? Vector::Zero(n) : Vector(Wsub.segment(row, n));
        Vector v = op.eval_A1(t, y) + D.cwiseProduct(w) - op.forcing_covector(t);
        traj.states.push_back(std::move(y));
        traj.selections.push_back(std::move(v));
        traj.subgradients.push_back(std::move(w));
    }
    return traj;
}

FourierHeatOracle::FourierHeatOracle(double m, double a, double epsilon, std::vector<double> extents, double period,
                                     std::vector<FourierMode> modes)
    : m_(m), a_(a), epsilon_(epsilon), extents_(std::move(extents)), period_(period), modes_(std::move(modes)) {
    if (extents_.empty() || extents_.size() > 2) throw ConfigError("Fourier oracle needs 1 or 2 extents");
    if (!(a_ > 0.0) || m_ < 0.0 || epsilon_ < 0.0 || !(period_ > 0.0)) {
        throw ConfigError("Fourier oracle needs a > 0, m >= 0, eps >= 0, period > 0");
    }
}

double FourierHeatOracle::coefficient(std::size_t index, double t) const {
    const FourierMode& mode = modes_.at(index);
    double lambda = 0.0;
    for (std::size_t d = 0; d < extents_.size(); ++d) {
        const double k = mode.wave[d] * std::numbers::pi / extents_[d];
        lambda += k * k;
    }
    const double omega = 2.0 * std::numbers::pi * mode.frequency / period_;
    const double theta = omega * t + mode.phase;
    const double stiff = a_ * lambda;
    const double inertia = (m_ + epsilon_ * lambda) * omega;
    return mode.amplitude * (stiff * std::sin(theta) - inertia * std::cos(theta)) / (stiff * stiff + inertia * inertia);
}

double FourierHeatOracle::value(double t, Point z) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        double shape = std::sin(modes_[i].wave[0] * std::numbers::pi * z.x / extents_[0]);
        if (extents_.size() == 2) shape *= std::sin(modes_[i].wave[1] * std::numbers::pi * z.y / extents_[1]);
        sum += coefficient(i, t) * shape;
    }
    return sum;
}

Vector FourierHeatOracle::nodal(const SpatialDiscretization& mesh, double t) const {
    Vector out(mesh.num_dofs());
    for (int i = 0; i < mesh.num_dofs(); ++i) out[i] = value(t, mesh.dof_point(i));
    return out;
}

ErrorNorms manufactured_error(const OperatorSet& ops, const Trajectory& trajectory, const ExactField& exact) {
    const SpatialDiscretization& mesh = ops.mesh();
    ErrorNorms out;
    double sum = 0.0;
    const double dt = trajectory.dt();
    for (int k = 0; k <= trajectory.steps(); ++k) {
        const double t = trajectory.times[static_cast<std::size_t>(k)];
        Vector e = trajectory.states[static_cast<std::size_t>(k)];
        for (int i = 0; i < mesh.num_dofs(); ++i) e[i] -= exact(t, mesh.dof_point(i));
        out.max = std::max(out.max, e.lpNorm<Eigen::Infinity>());
        if (k > 0) sum += dt * e.dot(ops.M() * e);
    }
    out.l2 = std::sqrt(sum);
    return out;
}

double integration_by_parts_defect(const RegularizedOperator& reg, const std::vector<Vector>& u,
                                   const std::vector<Vector>& w) {
    if (u.size() != w.size() || u.size() < 2) throw DimensionError("trajectories must have equal length >= 2");
    double sum = 0.0;
    for (std::size_t k = 1; k < u.size(); ++k) {
        sum += reg.inner_product_Vstar(u[k] - u[k - 1], w[k]) + reg.inner_product_Vstar(u[k - 1], w[k] - w[k - 1]);
    }
    const double ends = reg.inner_product_Vstar(u.back(), w.back()) - reg.inner_product_Vstar(u.front(), w.front());
    return std::abs(sum - ends);
}

// ---------------------------------------------------------------------------

namespace {

CheckResult make_check(std::string name, double margin, std::string detail) {
    CheckResult c;
    c.name = std::move(name);
    c.margin = margin;
    c.passed = margin >= 0.0 && std::isfinite(margin);
    c.detail = std::move(detail);
    return c;
}

std::string describe(const char* label, double value) { return std::string(label) + " = " + format_double(value); }

void check_convex_term(const ConvexTerm& g, std::mt19937_64& rng, int probes, std::vector<CheckResult>& out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> exponent(-2.0, 2.0);
    std::uniform_real_distribution<double> lambda_exp(-3.0, 1.0);
    auto draw = [&] { return normal(rng) * std::pow(10.0, exponent(rng)); };

    double nonexpansive = std::numeric_limits<double>::infinity();
    double resolvent = std::numeric_limits<double>::infinity();
    double monotone = std::numeric_limits<double>::infinity();
    double growth = std::numeric_limits<double>::infinity();
    const double c_hat = g.growth_constant();
    const double p = g.exponent();
    for (int i = 0; i < probes; ++i) {
        const double x = draw();
        const double y = draw();
        const double lambda = std::pow(10.0, lambda_exp(rng));
        const double px = g.prox(lambda, x);
        const double py = g.prox(lambda, y);
        nonexpansive = std::min(nonexpansive, std::abs(x - y) - std::abs(px - py) +
                                                   4e-16 * (std::abs(x) + std::abs(y)));

        const double w = (x - px) / lambda;
        const double defect = lambda * g.subdifferential(px).distance(w);
        resolvent = std::min(resolvent, 1e-12 * (1.0 + std::abs(x)) - defect);

        const Interval sx = g.subdifferential(x);
        const Interval sy = g.subdifferential(y);
        for (double wx : {sx.lo, sx.hi}) {
            for (double wy : {sy.lo, sy.hi}) monotone = std::min(monotone, (wx - wy) * (x - y));
            growth = std::min(growth, c_hat * (1.0 + std::pow(std::abs(x), p - 1.0)) - std::abs(wx));
        }
    }
    const std::string n = " over " + std::to_string(probes) + " probes";
    out.push_back(make_check("H(g) nonexpansive", nonexpansive, "min |x-y| - |prox x - prox y|" + n));
    out.push_back(make_check("H(g) resolvent", resolvent, "x = prox(x) + lambda w to 1e-12" + n));
    out.push_back(make_check("H(g) monotone", monotone, "min (w_x - w_y)(x - y)" + n));
    out.push_back(make_check("H(g) growth", growth, describe("c_hat", c_hat) + n));
}

}  // namespace

std::vector<CheckResult> hypothesis_battery(const ProblemInstance& instance, const BatteryOptions& options) {
    std::vector<CheckResult> out;
    if (!instance.mesh) {
        out.push_back(make_check("instance", -1.0, "no mesh"));
        return out;
    }
    const SpatialDiscretization& mesh = *instance.mesh;
    const int probes = std::max(options.probes, 1);
    std::mt19937_64 rng(options.seed);

    // H(m): m >= 0 at every midpoint sample.
    double m_min = std::numeric_limits<double>::infinity();
    bool m_finite = instance.m_elements.size() == static_cast<std::size_t>(mesh.num_elements());
    for (double m : instance.m_elements) {
        m_finite = m_finite && std::isfinite(m);
        m_min = std::min(m_min, m);
    }
    out.push_back(make_check("H(m)", m_finite ? m_min : -1.0,
                             m_finite ? describe("min m", m_min) : "m table missing or not finite"));

    // H(a): a(t, z) >= a0 > 0 on the time grid.
    const double a0 = instance.diffusion.lower_bound();
    const std::vector<double> times = instance.time_grid();
    double a_slack = std::numeric_limits<double>::infinity();
    for (double t : times) {
        for (double a : instance.diffusion.sample(mesh, t)) a_slack = std::min(a_slack, a - a0);
        if (!instance.diffusion.time_dependent()) break;
    }
    out.push_back(make_check("H(a)", a0 > 0.0 ? a_slack : std::min(a0 - 1.0, a_slack),
                             describe("a0", a0) + ", " + describe("min a - a0", a_slack)));

    // Operator checks on data clamped to the coefficient hypotheses.
    ElementValues m_clamped = instance.m_elements;
    m_clamped.resize(static_cast<std::size_t>(mesh.num_elements()), 0.0);
    for (double& m : m_clamped) m = std::isfinite(m) ? std::max(m, 0.0) : 0.0;
    const DiffusionCoefficient diffusion =
        a0 > 0.0 ? instance.diffusion.clamped() : DiffusionCoefficient::constant(1.0);
    auto ops = std::make_shared<const OperatorSet>(instance.mesh, m_clamped, diffusion);
    const InclusionOperator op(ops, instance.g, instance.convection, instance.forcing);
    const int n = ops->num_dofs();

    {
        const SparseMatrix asym = ops->B() - SparseMatrix(ops->B().transpose());
        double worst = 0.0;
        for (int k = 0; k < asym.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(asym, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
        }
        out.push_back(make_check("H(B) symmetry", -worst, describe("max |B - B^T|", worst)));
    }
    {
        const double scale = std::max(ops->M().coeffs().cwiseAbs().maxCoeff(), 1e-300);
        double lowest;
        std::string how;
        if (n <= 1500) {
            lowest = smallest_symmetric_eigenvalue(dense(ops->B()));
            how = "smallest eigenvalue of B";
        } else {
            std::mt19937_64 local(options.seed + 7);
            lowest = std::numeric_limits<double>::infinity();
            for (int i = 0; i < probes; ++i) {
                const Vector y = random_probe(mesh, local, i);
                lowest = std::min(lowest, y.dot(ops->B() * y) / y.squaredNorm());
            }
            how = "min Rayleigh quotient of B over probes";
        }
        out.push_back(make_check("H(B) monotone", lowest + 1e-12 * scale, describe(how.c_str(), lowest)));
    }
    {
        const bool spd = is_positive_definite(ops->J());
        out.push_back(make_check("J positive definite", spd ? 0.0 : -1.0, "LDL^T pivot test"));
    }
    {
        double lambda1 = 0.0;
        for (double l : mesh.extents()) lambda1 += std::numbers::pi * std::numbers::pi / (l * l);
        const double bound = 1.0 / std::sqrt(lambda1);
        double worst = 0.0;
        for (int i = 0; i < probes; ++i) {
            const Vector u = random_probe(mesh, rng, i);
            worst = std::max(worst, ops->norm_H(u) / ops->norm_X(u));
        }
        out.push_back(make_check("embedding", bound * (1.0 + 1e-12) - worst,
                                 describe("max |u| / ||u||", worst) + ", " + describe("c1", bound)));
    }

    check_convex_term(instance.g, rng, probes, out);

    // H(A)(iii) and (iv) for the unshifted map A1 + N_g, with matched selections.
    {
        std::vector<double> probe_times;
        const int count = std::min<int>(std::max(options.max_probe_times, 1), static_cast<int>(times.size()));
        for (int i = 0; i < count; ++i) {
            probe_times.push_back(times[static_cast<std::size_t>(i) * (times.size() - 1) / std::max(count - 1, 1)]);
        }
        std::vector<std::shared_ptr<const SparseMatrix>> stiffness;
        for (double t : probe_times) stiffness.push_back(op.diffusion_matrix(t));
        const GrowthConstants k = estimate_constants(op, times, options.seed);
        const double lambda = instance.period / std::max(instance.time_steps, 1);

        std::mt19937_64 local(options.seed + 1);
        double growth = std::numeric_limits<double>::infinity();
        double coercive = std::numeric_limits<double>::infinity();
        double monotone = std::numeric_limits<double>::infinity();
        for (int i = 0; i < probes; ++i) {
            const std::size_t ti = static_cast<std::size_t>(i) % probe_times.size();
            const Vector y = random_probe(mesh, local, i);
            Vector a1 = *stiffness[ti] * y;
            if (op.convection()) a1 += op.convection_covector(y);
            const double norm = ops->norm_X(y);
            std::vector<Vector> selections;
            if (op.g().is_zero()) {
                selections.push_back(a1);
            } else {
                for (SubgradientPick pick : {SubgradientPick::lower, SubgradientPick::upper, SubgradientPick::midpoint}) {
                    selections.push_back(a1 + ops->D().cwiseProduct(op.subgradient_selection(y, pick)));
                }
                selections.push_back(a1 + ops->D().cwiseProduct(op.yosida_selection(lambda, y)));
            }
            for (const Vector& v : selections) {
                const double bound = k.c1 + k.c2 * std::pow(norm, k.p - 1.0);
                growth = std::min(growth, (bound - ops->norm_Xstar(v)) / (1.0 + bound) + 1e-12);
                const double pairing = v.dot(y);
                const double lower = k.c3 * std::pow(norm, k.p) - k.c4;
                coercive = std::min(coercive, (pairing - lower) + 1e-12 * (1.0 + std::abs(pairing)));
            }
            if (!op.convection()) {
                // Matched midpoint selections of a second probe at the same time.
                const Vector x = random_probe(mesh, local, i + 1);
                Vector ax = *stiffness[ti] * x;
                Vector ay = *stiffness[ti] * y;
                if (!op.g().is_zero()) {
                    ax += ops->D().cwiseProduct(op.subgradient_selection(x, SubgradientPick::midpoint));
                    ay += ops->D().cwiseProduct(op.subgradient_selection(y, SubgradientPick::midpoint));
                }
                const double pairing = (ax - ay).dot(x - y);
                monotone = std::min(monotone, pairing + 1e-12 * (1.0 + std::abs(ax.dot(x)) + std::abs(ay.dot(y))));
            }
        }
        out.push_back(make_check("H(A)(iii) growth", growth,
                                 describe("c1", k.c1) + ", " + describe("c2", k.c2) + " (relative margin)"));
        out.push_back(make_check("H(A)(iv) coercivity", coercive,
                                 describe("c3", k.c3) + ", " + describe("c4", k.c4) + ", " +
                                     describe("convection defect", k.convection_defect)));
        if (op.convection()) {
            out.push_back(make_check("A monotone", 0.0, "not applicable with convection"));
        } else {
            out.push_back(make_check("A monotone", monotone, "min <A x - A y, x - y> over probe pairs"));
        }
    }

    // Regularization: eps J + B SPD, symmetry and norm equivalence of (., .)_*.
    {
        double spd = 0.0;
        double symmetry = std::numeric_limits<double>::infinity();
        double ratio_min = std::numeric_limits<double>::infinity();
        double ratio_max = 0.0;
        std::mt19937_64 local(options.seed + 2);
        const int pairs = std::max(100, probes / 10);
        for (double eps : options.epsilons) {
            if (!is_positive_definite(ops->B() + eps * ops->J())) {
                spd = -1.0;
                continue;
            }
            const RegularizedOperator reg(ops, eps);
            for (int i = 0; i < pairs; ++i) {
                const Vector u = random_probe(mesh, local, i);
                const Vector v = random_probe(mesh, local, i + 1);
                const double uv = reg.inner_product_Vstar(u, v);
                const double vu = reg.inner_product_Vstar(v, u);
                const double nu = reg.norm_Vstar(u);
                symmetry = std::min(symmetry, 1e-12 * std::max(1.0, nu * reg.norm_Vstar(v)) - std::abs(uv - vu));
                const double ratio = nu / ops->norm_Xstar(u);
                ratio_min = std::min(ratio_min, ratio);
                ratio_max = std::max(ratio_max, ratio);
            }
        }
        out.push_back(make_check("eps J + B positive definite", spd, std::to_string(options.epsilons.size()) +
                                                                          " values of eps"));
        out.push_back(make_check("V* symmetry", symmetry, "|(u,v)_* - (v,u)_*| to 1e-12"));
        out.push_back(make_check("V* norm equivalence", ratio_min - 1e-8,
                                 "ratio in [" + format_double(ratio_min) + ", " + format_double(ratio_max) + "]"));
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

// ---------------------------------------------------------------------------

EnergyDiagnostics energy_diagnostics(const InclusionOperator& op, const Trajectory& trajectory,
                                     const GrowthConstants& constants, double periodic_tolerance, double exponent) {
    const OperatorSet& ops = op.operators();
    const double eps = trajectory.epsilon;
    const double dt = trajectory.dt();
    EnergyDiagnostics d;
    double sum_u = 0.0;
    double max_u = 0.0;
    double sum_x = 0.0;
    double sum_v = 0.0;
    double coercive = 0.0;
    for (int k = 1; k <= trajectory.steps(); ++k) {
        const Vector& y = trajectory.states[static_cast<std::size_t>(k)];
        const Vector& v = trajectory.selections[static_cast<std::size_t>(k)];
        const double t = trajectory.times[static_cast<std::size_t>(k)];
        const double jy = y.dot(ops.J() * y);
        const double u_norm = std::sqrt(std::max(eps * jy + y.dot(ops.B() * y), 0.0));
        const double x_norm = std::sqrt(jy);
        d.energy += dt * v.dot(y);
        if (!op.forcing().is_zero()) d.forcing_pairing += dt * op.forcing_covector(t).dot(y);
        sum_u += dt * u_norm;
        max_u = std::max(max_u, u_norm);
        sum_x += dt * std::pow(x_norm, exponent);
        sum_v += dt * std::pow(u_norm, exponent);
        coercive += dt * std::pow(x_norm, constants.p);
    }
    d.tolerance = periodic_tolerance * (1.0 + max_u);
    d.slack = d.tolerance * (1.0 + sum_u);
    d.apriori_margin = constants.c4 * trajectory.period() + d.forcing_pairing + d.slack - constants.c3 * coercive;
    d.norm_X_lp = std::pow(sum_x, 1.0 / exponent);
    d.norm_Vstar_lp = std::pow(sum_v, 1.0 / exponent);
    return d;
}

double uniform_bound(const InclusionOperator& op, const std::vector<double>& times, const GrowthConstants& constants,
                     double slack, double exponent) {
    if (!(constants.c3 > 0.0)) return std::numeric_limits<double>::infinity();
    const double p = exponent;
    const double p_dual = p / (p - 1.0);
    double F = 0.0;
    if (!op.forcing().is_zero() && times.size() > 1) {
        const double dt = times.back() / static_cast<double>(times.size() - 1);
        double sum = 0.0;
        for (std::size_t k = 1; k < times.size(); ++k) {
            sum += dt * std::pow(op.operators().norm_Xstar(op.forcing_covector(times[k])), p_dual);
        }
        F = std::pow(sum, 1.0 / p_dual);
    }
    const double C4 = constants.c4 * (times.empty() ? 0.0 : times.back()) + slack;
    auto excess = [&](double Y) { return constants.c3 * std::pow(Y, p) - F * Y - C4; };
    double hi = 1.0;
    while (excess(hi) < 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

void RunReport::add_stage(const InclusionOperator& op, const StageResult& stage, double periodic_tolerance,
                          double exponent) {
    StageReport s;
    s.n = stage.n;
    s.epsilon = stage.epsilon;
    s.iterations = stage.iterations;
    s.periodicity_residual = stage.periodicity_residual;
    s.boundary_residual = stage.boundary_residual;
    s.distance = stage.distance;
    s.inclusion_residual = stage.inclusion_residual;
    s.inclusion_residual_max = stage.inclusion_residual_max;
    s.max_step_residual = stage.trajectory.max_step_residual;
    s.energy = energy_diagnostics(op, stage.trajectory, constants, periodic_tolerance, exponent);
    s.seconds = stage.seconds;
    max_norm_X_lp = std::max(max_norm_X_lp, s.energy.norm_X_lp);
    stages.push_back(s);
}

void RunReport::finish(const InclusionOperator& op, const std::vector<double>& times, bool reached, double exponent) {
    tolerance_reached = reached;
    double slack = 0.0;
    for (const StageReport& s : stages) slack = std::max(slack, s.energy.slack);
    uniform_bound = perisolve::uniform_bound(op, times, constants, slack, exponent);
}

bool RunReport::energy_ok() const {
    return std::all_of(stages.begin(), stages.end(),
                       [](const StageReport& s) { return s.energy.energy_ok() && s.energy.apriori_ok(); });
}

std::vector<std::pair<std::string, std::string>> RunReport::entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    auto put = [&](std::string key, double value) { e.emplace_back(std::move(key), format_double(value)); };
    auto put_text = [&](std::string key, std::string value) { e.emplace_back(std::move(key), std::move(value)); };

    put_text("instance", instance);
    std::string list;
    for (std::size_t i = 0; i < schedule.size(); ++i) list += (i ? "," : "") + format_double(schedule[i]);
    put_text("schedule", list);
    put_text("stages", std::to_string(stages.size()));
    put_text("tolerance_reached", tolerance_reached ? "true" : "false");
    put("constants.c1", constants.c1);
    put("constants.c2", constants.c2);
    put("constants.c3", constants.c3);
    put("constants.c4", constants.c4);
    put("constants.p", constants.p);
    put("constants.convection_defect", constants.convection_defect);
    put("constants.a_min", constants.a_min);
    put("constants.a_max", constants.a_max);

    double seconds = 0.0;
    for (const StageReport& s : stages) {
        const std::string p = "stage." + std::to_string(s.n) + ".";
        put(p + "epsilon", s.epsilon);
        put_text(p + "iterations", std::to_string(s.iterations));
        put(p + "periodicity_residual", s.periodicity_residual);
        put(p + "boundary_residual", s.boundary_residual);
        put(p + "distance", s.distance);
        put(p + "inclusion_residual", s.inclusion_residual);
        put(p + "inclusion_residual_max", s.inclusion_residual_max);
        put(p + "step_residual", s.max_step_residual);
        put(p + "energy", s.energy.energy);
        put(p + "energy_tolerance", s.energy.tolerance);
        put(p + "energy_slack", s.energy.slack);
        put(p + "apriori_margin", s.energy.apriori_margin);
        put(p + "norm_X_lp", s.energy.norm_X_lp);
        put(p + "norm_Vstar_lp", s.energy.norm_Vstar_lp);
        put(p + "seconds", s.seconds);
        seconds += s.seconds;
    }
    if (!stages.empty()) {
        const StageReport& f = stages.back();
        put("final.epsilon", f.epsilon);
        put("final.periodicity_residual", f.periodicity_residual);
        put("final.boundary_residual", f.boundary_residual);
        put("final.inclusion_residual", f.inclusion_residual);
        put("final.inclusion_residual_max", f.inclusion_residual_max);
        put("final.energy_margin", f.energy.slack - f.energy.energy);
        put("final.apriori_margin", f.energy.apriori_margin);
        put("final.norm_X_lp", f.energy.norm_X_lp);
        put("final.norm_Vstar_lp", f.energy.norm_Vstar_lp);
    }
    put("uniform_bound", uniform_bound);
    put("max_norm_X_lp", max_norm_X_lp);
    put_text("bound_ok", bound_ok() ? "true" : "false");
    put_text("energy_ok", energy_ok() ? "true" : "false");
    if (oracle_l2_error) put("oracle.l2_error", *oracle_l2_error);
    if (oracle_max_error) put("oracle.max_error", *oracle_max_error);
    put("total_seconds", seconds);
    return e;
}

}  // namespace perisolve
