#include "perisolve/problem.hpp"

#include "perisolve/errors.hpp"

namespace perisolve {

std::vector<double> ProblemInstance::time_grid() const {
    if (time_steps < 1) throw ConfigError("time grid needs at least one step");
    std::vector<double> times(static_cast<std::size_t>(time_steps) + 1);
    for (int k = 0; k <= time_steps; ++k) times[static_cast<std::size_t>(k)] = period * k / time_steps;
    times.back() = period;
    return times;
}

AssembledProblem assemble(const ProblemInstance& instance) {
    if (!instance.mesh) throw ConfigError("problem instance has no mesh");
    AssembledProblem out;
    out.operators = std::make_shared<const OperatorSet>(instance.mesh, instance.m_elements, instance.diffusion);
    if (instance.diffusion.time_dependent()) {
        for (double t : instance.time_grid()) instance.diffusion.checked_sample(*instance.mesh, t);
    }
    out.op = std::make_shared<const InclusionOperator>(out.operators, instance.g, instance.convection,
                                                       instance.forcing);
    return out;
}

}  // namespace perisolve
