#include <memory>

#include <benchmark/benchmark.h>

#include "perisolve/periodic_solver.hpp"
#include "perisolve/problem.hpp"

namespace {

using namespace perisolve;

AssembledProblem degenerate_problem(int cells, bool convection) {
    const std::vector<double> extents{1.0};
    const std::vector<int> counts{cells};
    auto mesh = std::make_shared<const SpatialDiscretization>(build_mesh(1, extents, counts));
    ProblemInstance p;
    p.m_elements = sample_at_centroids(*mesh, [](Point z) { return z.x < 0.5 ? 1.0 : 0.0; });
    p.mesh = mesh;
    p.diffusion = DiffusionCoefficient::constant(1.0);
    p.g = ConvexTerm::abs();
    p.convection = convection;
    p.forcing = Forcing::fourier({FourierMode{20.0, 1.0, 0.0, {1, 1}}}, {1.0}, 1.0);
    return assemble(p);
}

void BM_ImplicitStep(benchmark::State& state) {
    const int cells = static_cast<int>(state.range(0));
    const AssembledProblem a = degenerate_problem(cells, state.range(1) != 0);
    const RegularizedOperator reg(a.operators, 0.1);
    StepSolver solver(reg, *a.op, 1.0 / 64.0);
    Vector y = Vector::Zero(a.op->num_dofs());
    // One untimed period, so timed steps start warm.
    for (int k = 1; k <= 64; ++k) y = solver.step(k / 64.0, y).y;
    int k = 0;
    for (auto _ : state) {
        y = solver.step((++k % 64) / 64.0, y).y;
        benchmark::DoNotOptimize(y.data());
    }
    state.SetComplexityN(cells);
}
BENCHMARK(BM_ImplicitStep)->ArgsProduct({{32, 128, 512, 2048}, {0, 1}});

void BM_PoincareMap(benchmark::State& state) {
    const AssembledProblem a = degenerate_problem(static_cast<int>(state.range(0)), true);
    const RegularizedOperator reg(a.operators, 0.1);
    SolverConfig config;
    config.time_steps = 64;
    const Vector y0 = Vector::Zero(a.op->num_dofs());
    for (auto _ : state) {
        Trajectory t = poincare_map(reg, *a.op, config, y0);
        benchmark::DoNotOptimize(t.states.back().data());
    }
}
BENCHMARK(BM_PoincareMap)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_RegularizedSolve(benchmark::State& state) {
    const AssembledProblem a = degenerate_problem(static_cast<int>(state.range(0)), false);
    const RegularizedOperator reg(a.operators, 1.0 / 32.0);
    const Vector w = Vector::Ones(a.op->num_dofs());
    for (auto _ : state) {
        Vector y = reg.solve(w);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_RegularizedSolve)->Arg(128)->Arg(2048)->Arg(32768);

}  // namespace

BENCHMARK_MAIN();
