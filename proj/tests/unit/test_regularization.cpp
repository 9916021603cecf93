#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "perisolve/errors.hpp"
#include "perisolve/operators.hpp"
#include "perisolve/regularization.hpp"
#include "support.hpp"

namespace {

using namespace perisolve;
using perisolve::testing::indicator;
using perisolve::testing::interval_mesh;
using perisolve::testing::read_fixture;
using perisolve::testing::rectangle_mesh;

std::shared_ptr<const OperatorSet> make_ops(std::shared_ptr<const SpatialDiscretization> mesh, ElementValues m) {
    return std::make_shared<const OperatorSet>(std::move(mesh), std::move(m), DiffusionCoefficient::constant(1.0));
}

std::shared_ptr<const OperatorSet> degenerate_ops(int cells) {
    auto mesh = interval_mesh(cells);
    ElementValues m = indicator(*mesh, 0.0, 0.5);
    return make_ops(mesh, m);
}

Vector gaussian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> d(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

TEST(ApplyBeps, Reductions) {
    auto mesh = interval_mesh(6);
    const auto zero_m = make_ops(mesh, ElementValues(6, 0.0));
    const RegularizedOperator pure_j(zero_m, 1.0);
    std::mt19937_64 rng(1);
    const Vector y = gaussian(rng, 5);
    EXPECT_EQ(pure_j.apply(Vector::Zero(5)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE((pure_j.apply(y) - zero_m->J() * y).cwiseAbs().maxCoeff(), 1e-14);

    const auto unit_m = make_ops(mesh, ElementValues(6, 1.0));
    const RegularizedOperator mass(unit_m, 0.0);
    EXPECT_LE((mass.apply(y) - unit_m->M() * y).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((unit_m->B() * y - unit_m->M() * y).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SolveBeps, ZeroRoundTripAndFixture) {
    const auto ops = degenerate_ops(16);
    const RegularizedOperator reg(ops, 0.25);
    EXPECT_EQ(reg.solve(Vector::Zero(15)).cwiseAbs().maxCoeff(), 0.0);
    std::mt19937_64 rng(2);
    for (int s = 0; s < 20; ++s) {
        const Vector y = gaussian(rng, 15);
        EXPECT_LE((reg.solve(reg.apply(y)) - y).norm(), 1e-10 * y.norm());
        const Vector w = gaussian(rng, 15);
        EXPECT_LE((reg.apply(reg.solve(w)) - w).norm(), 1e-10 * w.norm());
    }

    auto mesh = interval_mesh(4);
    const RegularizedOperator pure_j(make_ops(mesh, ElementValues(4, 0.0)), 1.0);
    const Vector y = pure_j.solve(Vector::Unit(3, 1));
    const std::vector<double> ref = read_fixture("solve_Beps_e2.txt");
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[i], ref[static_cast<std::size_t>(i)], 1e-14);
}

TEST(SolveBeps, FineMeshIsBackwardStable) {
    const RegularizedOperator reg(degenerate_ops(32768), 1.0 / 32.0);
    const Vector w = Vector::Ones(32767);
    const Vector x = reg.solve(w);
    const Vector column_sums = Vector::Ones(32767).transpose() * reg.matrix().cwiseAbs();
    const double scale = column_sums.maxCoeff() * x.norm() + w.norm();
    EXPECT_LE((reg.apply(x) - w).norm(), 1e-12 * scale);
}

TEST(SolveBeps, DegenerateAndInvalidParameters) {
    EXPECT_THROW(RegularizedOperator(degenerate_ops(8), 0.0), DegenerateOperator);
    EXPECT_THROW(RegularizedOperator(degenerate_ops(8), -0.1), ConfigError);
    EXPECT_THROW(RegularizedOperator(degenerate_ops(8), std::nan("")), ConfigError);
    EXPECT_NO_THROW(RegularizedOperator(make_ops(interval_mesh(8), ElementValues(8, 0.5)), 0.0));
    const RegularizedOperator reg(degenerate_ops(8), 0.5);
    EXPECT_THROW(reg.solve(Vector::Zero(3)), DimensionError);
    EXPECT_GE(reg.pivot_ratio(), 1.0);
}

TEST(InnerProductVstar, ZeroSymmetryAndQuadraticForm) {
    const auto ops = degenerate_ops(4);
    for (double eps : {1.0, 0.1, 1.0 / 32.0}) {
        const RegularizedOperator reg(ops, eps);
        std::mt19937_64 rng(3);
        EXPECT_EQ(reg.inner_product_Vstar(Vector::Zero(3), gaussian(rng, 3)), 0.0);
        for (int s = 0; s < 100; ++s) {
            const Vector u = gaussian(rng, 3), v = gaussian(rng, 3);
            EXPECT_LE(std::abs(reg.inner_product_Vstar(u, v) - reg.inner_product_Vstar(v, u)), 1e-12);
            const Vector y = gaussian(rng, 3);
            const Vector uy = reg.apply(y);
            const double quad = y.dot(reg.matrix() * y);
            EXPECT_GT(quad, 0.0);
            EXPECT_NEAR(reg.inner_product_Vstar(uy, uy), quad, 1e-12 * quad);
            EXPECT_NEAR(reg.state_norm(y), std::sqrt(quad), 1e-12 * std::sqrt(quad));
        }
    }
}

TEST(InnerProductVstar, NormEquivalenceIsNondegenerate) {
    for (const auto& ops : {degenerate_ops(32), make_ops(rectangle_mesh(8, 8), ElementValues(128, 1.0))}) {
        const int n = ops->num_dofs();
        for (double eps : {1.0, 1.0 / 32.0}) {
            const RegularizedOperator reg(ops, eps);
            std::mt19937_64 rng(4);
            double lo = 1e300, hi = 0.0;
            for (int s = 0; s < 100; ++s) {
                const Vector u = gaussian(rng, n);
                const double ratio = reg.norm_Vstar(u) / ops->norm_Xstar(u);
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            EXPECT_GE(lo, 1e-8);
            EXPECT_TRUE(std::isfinite(hi));
            // eps J <= eps J + B <= (eps + 1) J in the Loewner order.
            EXPECT_GE(lo, 1.0 / std::sqrt(eps + 1.0) - 1e-12);
            EXPECT_LE(hi, 1.0 / std::sqrt(eps) + 1e-12);
        }
    }
}

TEST(InnerProductVstar, NonincreasingInEpsilon) {
    const auto ops = degenerate_ops(12);
    std::mt19937_64 rng(5);
    for (int s = 0; s < 20; ++s) {
        const Vector u = gaussian(rng, 11);
        double previous = 1e300;
        for (double eps : {1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 4.0}) {
            const double value = RegularizedOperator(ops, eps).inner_product_Vstar(u, u);
            EXPECT_LE(value, previous * (1.0 + 1e-12));
            previous = value;
        }
    }
}

TEST(InnerProductVstar, KernelOfBSeesOnlyEpsJ) {
    const auto ops = degenerate_ops(8);
    Vector y = Vector::Zero(7);
    y[4] = 0.3;  // z = 5/8
    y[5] = -1.1;
    y[6] = 2.0;
    ASSERT_EQ((ops->B() * y).cwiseAbs().maxCoeff(), 0.0);
    for (double eps : {1.0, 0.125, 1.0 / 32.0}) {
        const RegularizedOperator reg(ops, eps);
        EXPECT_DOUBLE_EQ(y.dot(reg.matrix() * y), eps * y.dot(ops->J() * y));
    }
}

TEST(PositiveDefiniteCheck, DetectsSingularB) {
    EXPECT_FALSE(is_positive_definite(degenerate_ops(8)->B()));
    EXPECT_TRUE(is_positive_definite(make_ops(interval_mesh(8), ElementValues(8, 1.0))->B()));
    EXPECT_TRUE(is_positive_definite(degenerate_ops(8)->J()));
}

}  // namespace
