#pragma once

#include <memory>
#include <vector>

#include "perisolve/convex_term.hpp"
#include "perisolve/discretization.hpp"
#include "perisolve/operators.hpp"

namespace perisolve {

/// Raw data of one periodic inclusion: mesh, coefficients, convex term and
/// forcing, before any hypothesis is checked.
struct ProblemInstance {
    std::shared_ptr<const SpatialDiscretization> mesh;
    ElementValues m_elements;
    DiffusionCoefficient diffusion;
    ConvexTerm g;
    bool convection = false;
    Forcing forcing;
    double period = 1.0;
    int time_steps = 100;

    /// t_k = k b / K for k = 0..K.
    std::vector<double> time_grid() const;
};

struct AssembledProblem {
    std::shared_ptr<const OperatorSet> operators;
    std::shared_ptr<const InclusionOperator> op;
};

/// Assembles J, B, M and the inclusion operator. Throws HypothesisViolation
/// naming H(m) or H(a) when coefficient samples violate them on the time grid.
AssembledProblem assemble(const ProblemInstance& instance);

}  // namespace perisolve
