#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "app/config.hpp"
#include "perisolve/verification.hpp"
#include "support.hpp"

namespace {

using namespace perisolve;
using perisolve::testing::config_dir;
using perisolve::testing::heat_forcing;
using perisolve::testing::indicator;
using perisolve::testing::interval_mesh;
using perisolve::testing::read_fixture;
using perisolve::testing::simple_instance;

SolverConfig tight_config(int steps) {
    SolverConfig c;
    c.time_steps = steps;
    c.periodic_tolerance = 1e-12;
    return c;
}

double max_nodal_difference(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        worst = std::max(worst, (a.states[k] - b.states[k]).cwiseAbs().maxCoeff());
    }
    return worst;
}

std::vector<std::string> failed_names(const std::vector<CheckResult>& checks) {
    std::vector<std::string> out;
    for (const CheckResult& c : checks) {
        if (!c.passed) out.push_back(c.name);
    }
    return out;
}

TEST(TinyOracle, ZeroProblem) {
    const AssembledProblem a = assemble(simple_instance(interval_mesh(3), 1.0, 1.0, ConvexTerm::abs()));
    const RegularizedOperator reg(a.operators, 0.1);
    const Trajectory t = oracle_tiny_periodic(reg, *a.op, 1.0, 20);
    ASSERT_EQ(t.states.size(), 21u);
    for (const Vector& y : t.states) EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TinyOracle, ScalarHeatMatchesFixtureAndClosedForm) {
    ProblemInstance p = simple_instance(interval_mesh(2));
    p.forcing = heat_forcing();
    const AssembledProblem a = assemble(p);
    const RegularizedOperator reg(a.operators, 0.0);
    const std::vector<double> ref = read_fixture("tiny_1dof_periodic.txt");
    const Trajectory t = oracle_tiny_periodic(reg, *a.op, 1.0, 50);
    ASSERT_EQ(t.states.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(t.states[k][0], ref[k], 1e-9) << k;

    // c' + kappa c = sin(2 pi t) with kappa = J / M = 12; backward Euler is first order.
    const double kappa = 12.0, w = 2.0 * std::numbers::pi;
    auto exact = [&](double s) { return (kappa * std::sin(w * s) - w * std::cos(w * s)) / (kappa * kappa + w * w); };
    auto error = [&](int steps) {
        const Trajectory tr = oracle_tiny_periodic(reg, *a.op, 1.0, steps);
        double e = 0.0;
        for (int k = 0; k <= steps; ++k) e = std::max(e, std::abs(tr.states[k][0] - exact(tr.times[k])));
        return e;
    };
    const double e50 = error(50), e100 = error(100);
    EXPECT_LT(e50, 0.15 / std::sqrt(kappa * kappa + w * w));
    EXPECT_GT(e50 / e100, 1.7);
    EXPECT_LT(e50 / e100, 2.3);
}

class OracleEquivalence : public ::testing::TestWithParam<int> {};

TEST_P(OracleEquivalence, SolverMatchesDenseOracle) {
    const std::vector<ConvexTerm> catalog{ConvexTerm::zero(), ConvexTerm::abs(), ConvexTerm::half_square(),
                                          ConvexTerm::positive_part_squared(), ConvexTerm::scaled_abs(3.0)};
    const int index = GetParam();
    const int dofs = 1 + index % 2;
    const bool degenerate = dofs == 2 && (index / 2) % 2 == 1;
    const ConvexTerm g = catalog[static_cast<std::size_t>(index / 4)];
    auto mesh = interval_mesh(dofs + 1);
    ProblemInstance p = simple_instance(mesh, 1.0, 1.0, g);
    if (degenerate) p.m_elements = indicator(*mesh, 0.0, 0.5);
    p.forcing = heat_forcing(8.0);
    p.time_steps = 50;
    const AssembledProblem a = assemble(p);
    const RegularizedOperator reg(a.operators, degenerate ? 0.1 : 0.0);
    const Trajectory oracle = oracle_tiny_periodic(reg, *a.op, 1.0, 50);
    const PeriodicSolution solved = solve_periodic_eps(reg, *a.op, tight_config(50));
    EXPECT_LE(max_nodal_difference(oracle, solved.trajectory), 1e-6) << g.name() << " dofs " << dofs;
}

INSTANTIATE_TEST_SUITE_P(TinyInstances, OracleEquivalence, ::testing::Range(0, 20));

TEST(FourierHeatOracle, SolvesModeOde) {
    const std::vector<FourierMode> modes{FourierMode{2.0, 1.0, 0.4, {1, 2}}, FourierMode{-1.0, 3.0, 0.0, {2, 1}}};
    const double m = 0.7, a = 1.3, eps = 0.05, period = 2.0;
    const std::vector<double> extents{1.0, 2.0};
    const FourierHeatOracle oracle(m, a, eps, extents, period, modes);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double lambda = std::pow(modes[i].wave[0] * std::numbers::pi / extents[0], 2) +
                              std::pow(modes[i].wave[1] * std::numbers::pi / extents[1], 2);
        const double m_eff = m + eps * lambda;
        EXPECT_NEAR(oracle.coefficient(i, 0.0), oracle.coefficient(i, period), 1e-14);
        for (double t : {0.1, 0.77, 1.5}) {
            const double dt = 1e-5;
            const double derivative = (oracle.coefficient(i, t + dt) - oracle.coefficient(i, t - dt)) / (2.0 * dt);
            const double theta = 2.0 * std::numbers::pi * modes[i].frequency * t / period + modes[i].phase;
            EXPECT_NEAR(m_eff * derivative + a * lambda * oracle.coefficient(i, t),
                        modes[i].amplitude * std::sin(theta), 1e-8);
        }
    }
}

TEST(ManufacturedError, SelfComparisonIsZero) {
    ProblemInstance p = simple_instance(interval_mesh(10));
    p.forcing = heat_forcing();
    p.time_steps = 20;
    const AssembledProblem a = assemble(p);
    const FourierHeatOracle oracle(1.0, 1.0, 0.0, {1.0}, 1.0, heat_forcing().modes());
    Trajectory t;
    for (int k = 0; k <= 20; ++k) {
        t.times.push_back(k / 20.0);
        t.states.push_back(oracle.nodal(a.operators->mesh(), k / 20.0));
    }
    const ErrorNorms e = manufactured_error(*a.operators, t, [&](double s, Point z) { return oracle.value(s, z); });
    EXPECT_EQ(e.max, 0.0);
    EXPECT_EQ(e.l2, 0.0);
}

class ResidualSoundness : public ::testing::TestWithParam<int> {};

TEST_P(ResidualSoundness, DetectsPerturbedSelections) {
    const ConvexTerm g = GetParam() == 0 ? ConvexTerm::half_square() : ConvexTerm::positive_part_squared();
    auto mesh = interval_mesh(24);
    ProblemInstance p = simple_instance(mesh, 1.0, 1.0, g);
    p.m_elements = indicator(*mesh, 0.0, 0.5);
    p.convection = true;
    p.forcing = heat_forcing(10.0);
    p.time_steps = 32;
    const AssembledProblem a = assemble(p);
    const RegularizedOperator reg(a.operators, 0.1);
    SolverConfig c = tight_config(32);
    const Trajectory t = solve_periodic_eps(reg, *a.op, c).trajectory;
    std::mt19937_64 rng(17);
    for (int k = 1; k <= t.steps(); ++k) {
        EXPECT_LE(a.op->membership_residual(t.times[k], t.states[k], t.selections[k]).lp, 1e-10);
        Vector delta = random_probe(*mesh, rng, k);
        delta *= 1e-2 / a.operators->norm_Xstar(delta);
        EXPECT_GT(a.op->membership_residual(t.times[k], t.states[k], t.selections[k] + delta).lp, 1e-3) << k;
    }
}

INSTANTIATE_TEST_SUITE_P(SingletonSubdifferentials, ResidualSoundness, ::testing::Values(0, 1));

TEST(ResidualSoundnessAbs, NonsmoothTermAwayFromKinks) {
    auto mesh = interval_mesh(24);
    ProblemInstance p = simple_instance(mesh, 1.0, 1.0, ConvexTerm::abs());
    p.forcing = heat_forcing(20.0);
    p.time_steps = 32;
    const AssembledProblem a = assemble(p);
    const RegularizedOperator reg(a.operators, 0.0);
    const Trajectory t = solve_periodic_eps(reg, *a.op, tight_config(32)).trajectory;
    const int k = 8;
    const Vector& y = t.states[k];
    EXPECT_LE(a.op->membership_residual(t.times[k], y, t.selections[k]).lp, 1e-10);
    // Perturb only where y is away from the kink, so every affected interval is a point.
    Vector delta = Vector::Zero(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (std::abs(y[i]) > 1e-6) delta[i] = a.operators->D()[i] * std::sin(std::numbers::pi * mesh->dof_point(static_cast<int>(i)).x);
    }
    ASSERT_GT(delta.cwiseAbs().maxCoeff(), 0.0);
    delta *= 1e-2 / a.operators->norm_Xstar(delta);
    EXPECT_GT(a.op->membership_residual(t.times[k], y, t.selections[k] + delta).lp, 1e-3);
}

TEST(HypothesisBattery, ShippedDefaultPasses) {
    const app::InstanceConfig config = app::load_config(config_dir() / "default.cfg");
    const std::vector<CheckResult> checks = hypothesis_battery(app::build_instance(config), BatteryOptions{config.seed});
    EXPECT_TRUE(all_passed(checks)) << ::testing::PrintToString(failed_names(checks));
    std::set<std::string> names;
    for (const CheckResult& c : checks) names.insert(c.name);
    for (const char* expected : {"H(m)", "H(a)", "H(B) symmetry", "H(B) monotone", "J positive definite",
                                 "H(g) nonexpansive", "H(g) resolvent", "H(g) monotone", "H(g) growth",
                                 "H(A)(iii) growth", "H(A)(iv) coercivity", "eps J + B positive definite",
                                 "V* symmetry", "V* norm equivalence"}) {
        EXPECT_TRUE(names.count(expected)) << expected;
    }
}

TEST(HypothesisBattery, NegativeMassFailsOnlyHm) {
    const app::InstanceConfig config = app::load_config(config_dir() / "default.cfg");
    ProblemInstance p = app::build_instance(config);
    p.m_elements[5] = -0.25;
    EXPECT_EQ(failed_names(hypothesis_battery(p)), std::vector<std::string>{"H(m)"});
}

TEST(HypothesisBattery, EllipticityViolationFailsOnlyHa) {
    const app::InstanceConfig config = app::load_config(config_dir() / "default.cfg");
    ProblemInstance p = app::build_instance(config);
    ElementValues a(static_cast<std::size_t>(p.mesh->num_elements()), 1.0);
    a[3] = 0.05;
    p.diffusion = DiffusionCoefficient::table(a, 0.1);
    EXPECT_EQ(failed_names(hypothesis_battery(p)), std::vector<std::string>{"H(a)"});

    p.diffusion = DiffusionCoefficient::constant(1.0, 0.0);
    EXPECT_EQ(failed_names(hypothesis_battery(p)), std::vector<std::string>{"H(a)"});
}

TEST(RunReport, EveryFieldIsPopulated) {
    auto mesh = interval_mesh(16);
    ProblemInstance p = simple_instance(mesh, 1.0, 1.0, ConvexTerm::abs());
    p.m_elements = indicator(*mesh, 0.0, 0.5);
    p.forcing = heat_forcing(10.0);
    p.time_steps = 16;
    const AssembledProblem a = assemble(p);
    SolverConfig c;
    c.time_steps = 16;
    c.epsilons = SolverConfig::harmonic_schedule(3);
    const ContinuationResult r = continuation_solve(*a.op, c);

    RunReport report;
    report.instance = "unit";
    report.schedule = c.epsilons;
    report.constants = estimate_constants(*a.op, p.time_grid(), 1);
    for (const StageResult& s : r.stages) report.add_stage(*a.op, s, c.periodic_tolerance, 2.0);
    report.finish(*a.op, p.time_grid(), r.tolerance_reached, 2.0);
    EXPECT_TRUE(report.bound_ok());
    EXPECT_TRUE(report.energy_ok());

    const auto entries = report.entries();
    std::set<std::string> keys;
    for (const auto& [key, value] : entries) {
        EXPECT_FALSE(value.empty()) << key;
        keys.insert(key);
        const bool is_residual = key.find("residual") != std::string::npos || key.find("distance") != std::string::npos ||
                                 key.find("seconds") != std::string::npos;
        if (is_residual) {
            EXPECT_GE(std::stod(value), 0.0) << key;
        }
    }
    for (const char* expected : {"instance", "schedule", "stages", "tolerance_reached", "uniform_bound",
                                 "max_norm_X_lp", "bound_ok", "energy_ok", "total_seconds"}) {
        EXPECT_TRUE(keys.count(expected)) << expected;
    }
    for (int n = 1; n <= 3; ++n) {
        const std::string prefix = "stage." + std::to_string(n) + ".";
        for (const char* field : {"epsilon", "iterations", "periodicity_residual", "boundary_residual", "distance",
                                  "inclusion_residual", "inclusion_residual_max", "apriori_margin", "energy", "energy_slack", "step_residual", "norm_X_lp",
                                  "norm_Vstar_lp", "seconds"}) {
            EXPECT_TRUE(keys.count(prefix + field)) << prefix + field;
        }
    }
}

TEST(UniformBound, SolvesScalarInequality) {
    auto mesh = interval_mesh(8);
    ProblemInstance p = simple_instance(mesh);
    p.forcing = heat_forcing(3.0);
    p.time_steps = 8;
    const AssembledProblem a = assemble(p);
    GrowthConstants c = estimate_constants(*a.op, p.time_grid(), 1);
    const double y = uniform_bound(*a.op, p.time_grid(), c, 0.0, 2.0);
    EXPECT_GT(y, 0.0);
    EXPECT_TRUE(std::isfinite(y));
    c.c3 = 0.0;
    EXPECT_TRUE(std::isinf(uniform_bound(*a.op, p.time_grid(), c, 0.0, 2.0)));
}

TEST(FormatDouble, RoundTrips) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 100; ++i) {
        const double x = d(rng) * std::pow(10.0, i % 20 - 10);
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
}

}  // namespace
